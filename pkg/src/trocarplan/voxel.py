"""Shared voxel grid: surface voxelization, scan-line interior fill, overlap volume.

One axis-aligned grid covers every registered mesh. Each mesh gets a small
integer id; a cell's id-set holds the ids of the meshes it belongs to, and
the overlap of a family of meshes is the set of cells whose id-set contains
them all. Volume is reported in liters (1 L = 1e6 mm^3).

Cell membership is decided by the cell center: a cell belongs to a mesh iff
its center lies inside the mesh. Surface-crossing cells are tracked in a
separate per-id layer; the scan-line fill walks each +x row of cells between
the surface crossings and classifies whole runs with one containment query,
so the filled set matches a per-center parity oracle exactly.
"""
from __future__ import annotations

import numpy as np

from .mesh import HIT_EPS_MM, MeshModel, OpenMeshError, points_in_mesh

DEFAULT_SPACING_MM = 15.0
MM3_PER_LITER = 1.0e6


class VoxelError(ValueError):
    pass


class VoxelGrid:
    """Axis-aligned cubic-cell grid shared by all registered meshes."""

    def __init__(self, origin: np.ndarray, spacing: float, dims: tuple[int, int, int]):
        self.origin = np.asarray(origin, dtype=np.float64).reshape(3)
        self.spacing = float(spacing)
        self.dims = tuple(int(d) for d in dims)
        self._surface: dict[int, np.ndarray] = {}
        self._solid: dict[int, np.ndarray] = {}
        self._meshes: dict[int, MeshModel] = {}

    @property
    def cell_volume_mm3(self) -> float:
        return self.spacing ** 3

    @property
    def registered_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._meshes))

    def cell_center(self, ix: int, iy: int, iz: int) -> np.ndarray:
        return self.origin + (np.array([ix, iy, iz], dtype=np.float64) + 0.5) * self.spacing

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.dims[axis]) + 0.5) * self.spacing

    def surface_mask(self, mesh_id: int) -> np.ndarray:
        self._require(mesh_id)
        return self._surface[mesh_id]

    def solid_mask(self, mesh_id: int) -> np.ndarray:
        self._require(mesh_id)
        if mesh_id not in self._solid:
            raise VoxelError(f"fill_interior has not run for mesh id {mesh_id}")
        return self._solid[mesh_id]

    def id_set(self, ix: int, iy: int, iz: int) -> frozenset[int]:
        """Ids of the meshes this cell belongs to."""
        return frozenset(i for i, m in self._solid.items() if m[ix, iy, iz])

    def _require(self, mesh_id: int) -> None:
        if mesh_id not in self._meshes:
            raise VoxelError(f"unknown mesh id {mesh_id}")


# Margin is an irrational multiple of the spacing so meshes authored on round
# coordinates never land exactly on cell boundaries or cell centers, which
# would make surface tagging and parity fills alignment-degenerate.
_MARGIN_FRACTION = 1.0 + 0.6180339887498949


def build_grid(meshes: list[MeshModel], spacing_mm: float = DEFAULT_SPACING_MM) -> VoxelGrid:
    """Empty grid covering the union bounds of `meshes` plus a one-voxel margin."""
    if not meshes:
        raise VoxelError("at least one mesh is required to size the grid")
    if spacing_mm <= 0:
        raise VoxelError(f"spacing must be > 0, got {spacing_mm}")
    lo = np.min([m.bounds[0] for m in meshes], axis=0)
    hi = np.max([m.bounds[1] for m in meshes], axis=0)
    origin = lo - _MARGIN_FRACTION * spacing_mm
    dims = np.ceil((hi + spacing_mm - origin) / spacing_mm).astype(int)
    return VoxelGrid(origin, spacing_mm, tuple(dims))


def voxelize_surface(grid: VoxelGrid, mesh: MeshModel, mesh_id: int) -> None:
    """Mark every cell whose box intersects at least one mesh triangle.

    Separating-axis triangle/box test; boundary contact counts as
    intersection. Triangles are sorted by candidate-window size and processed
    in padded chunks so the test vectorizes across triangles and cells.
    """
    if mesh_id in grid._meshes:
        raise VoxelError(f"mesh id {mesh_id} already registered")
    s = grid.spacing
    half = 0.5 * s
    origin = grid.origin
    dims = np.asarray(grid.dims)
    mask = np.zeros(grid.dims, dtype=bool)
    tv = mesh.triangle_vertices

    # exact candidate window per triangle: cell i overlaps [tlo, thi] iff
    # i*s <= thi - origin and (i+1)*s >= tlo - origin, touch included
    rel_lo = (tv.min(axis=1) - origin) / s
    rel_hi = (tv.max(axis=1) - origin) / s
    i0 = np.maximum(np.ceil(rel_lo - 1.0 - 1e-12).astype(np.int64), 0)
    i1 = np.minimum(np.floor(rel_hi + 1e-12).astype(np.int64), dims - 1)
    window = i1 - i0 + 1
    tri_ids = np.flatnonzero((window > 0).all(axis=1))

    # flat (triangle, candidate cell) pair list; exact windows, no padding
    counts = window[tri_ids].prod(axis=1)
    total = int(counts.sum())
    if total:
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        pair_tri = np.repeat(tri_ids, counts)
        local = np.arange(total) - np.repeat(starts, counts)
        wy = window[pair_tri, 1]
        wz = window[pair_tri, 2]
        offsets = np.stack([local // (wy * wz), (local // wz) % wy, local % wz], axis=1)
        ijk = i0[pair_tri] + offsets
        for lo in range(0, total, 2_000_000):
            sub = slice(lo, lo + 2_000_000)
            centers = origin + (ijk[sub] + 0.5) * s
            hit = _tri_box_overlap_pairs(tv[pair_tri[sub]], centers, half)
            sel = ijk[sub][hit]
            mask[sel[:, 0], sel[:, 1], sel[:, 2]] = True

    grid._surface[mesh_id] = mask
    grid._meshes[mesh_id] = mesh


def _tri_box_overlap_pairs(tris: np.ndarray, centers: np.ndarray, half: float) -> np.ndarray:
    """Akenine-Moller triangle/box SAT for paired tris (p, 3, 3) and centers (p, 3).

    The cheap plane and face-axis tests run over all pairs first; the nine
    edge-cross axes only see the survivors.
    """
    v = tris - centers[:, None, :]                            # (p, 3verts, 3)
    e01 = tris[:, 1] - tris[:, 0]
    e12 = tris[:, 2] - tris[:, 1]

    # triangle plane
    n = np.cross(e01, e12)                                    # (p, 3)
    rad = half * np.abs(n).sum(axis=1)
    sc = -np.einsum("pj,pj->p", v[:, 0, :], n)
    ok = np.abs(sc) <= rad

    # box face axes
    for j in range(3):
        pj = v[:, :, j]
        ok &= ~((pj.min(axis=1) > half) | (pj.max(axis=1) < -half))

    survivors = np.flatnonzero(ok)
    if len(survivors) == 0:
        return ok
    vs = v[survivors]
    edges = (e01[survivors], e12[survivors],
             tris[survivors, 0] - tris[survivors, 2])
    alive = np.ones(len(survivors), dtype=bool)

    # 9 cross-product axes (unit axis x edge)
    for er in edges:
        for j in range(3):
            axis = np.zeros_like(er)
            axis[:, (j + 1) % 3] = -er[:, (j + 2) % 3]
            axis[:, (j + 2) % 3] = er[:, (j + 1) % 3]
            rad = half * np.abs(axis).sum(axis=1)             # (q,)
            p = np.einsum("qvj,qj->qv", vs, axis)             # (q, 3)
            alive &= ~((p.min(axis=1) > rad) | (p.max(axis=1) < -rad))

    out = np.zeros(len(tris), dtype=bool)
    out[survivors[alive]] = True
    return out


def fill_interior(grid: VoxelGrid, mesh: MeshModel, mesh_id: int,
                  allow_open: bool = False) -> None:
    """Tag every cell whose center lies inside the mesh.

    Scan-line fill along +x: one ray per cell row collects the surface
    crossings, and the cells between crossings take their parity, exactly as
    filling a 2D shape with horizontal lines. Rows whose cast grazes an edge
    fall back to independent per-center parity queries, so grazing geometry
    cannot corrupt the fill. Open meshes are rejected unless `allow_open`,
    which switches to the (slower) per-cell parity fill throughout.
    """
    grid._require(mesh_id)
    if mesh_id in grid._solid:
        raise VoxelError(f"fill_interior already ran for mesh id {mesh_id}")
    nx, ny, nz = grid.dims
    s = grid.spacing

    if not mesh.closed:
        if not allow_open:
            raise OpenMeshError(
                f"mesh '{mesh.name}' is not closed; pass allow_open=True for parity fill")
        centers = _all_cell_centers(grid)
        inside = points_in_mesh(mesh, centers, require_closed=False)
        grid._solid[mesh_id] = inside.reshape(grid.dims)
        return

    solid = np.zeros(grid.dims, dtype=bool)
    ys = grid.axis_centers(1)
    zs = grid.axis_centers(2)
    # cast from west of both the grid and the mesh, so the ray origin is
    # outside even when the mesh extends beyond the grid (clip meshes do)
    x0 = min(grid.origin[0], mesh.bounds[0][0] - s)
    t_centers = grid.axis_centers(0) - x0    # ray parameter of each cell center

    # rows whose center line misses the mesh's yz bounds hold no crossings and
    # no interior centers; everything else gets a scan ray
    lo, hi = mesh.bounds
    gy, gz = np.meshgrid(np.arange(ny), np.arange(nz), indexing="ij")
    in_y = (ys[gy] >= lo[1] - s) & (ys[gy] <= hi[1] + s)
    in_z = (zs[gz] >= lo[2] - s) & (zs[gz] <= hi[2] + s)
    rows = np.column_stack([gy[in_y & in_z], gz[in_y & in_z]])
    if len(rows) == 0:
        grid._solid[mesh_id] = solid
        return
    origins = np.column_stack([np.full(len(rows), x0), ys[rows[:, 0]], zs[rows[:, 1]]])

    tv = mesh.triangle_vertices
    chunk = max(1, 2_000_000 // max(len(tv), 1))
    for lo in range(0, len(rows), chunk):
        sub = slice(lo, lo + chunk)
        ts, graze_any = _x_ray_crossings(origins[sub], tv)
        for r, (iy, iz) in enumerate(rows[sub]):
            row_ts = ts[r]
            k = int(np.searchsorted(row_ts, np.inf))
            crossings = row_ts[:k]
            clean = not graze_any[r]
            if clean and k > 1:
                clean = bool(np.diff(crossings).min() > HIT_EPS_MM)
            if clean and k:
                clean = bool(np.abs(crossings[None, :] - t_centers[:, None]).min() > 1e-9)
            if clean:
                solid[:, iy, iz] = np.searchsorted(crossings, t_centers) % 2 == 1
            else:
                centers = np.column_stack([grid.axis_centers(0),
                                           np.full(nx, ys[iy]), np.full(nx, zs[iz])])
                solid[:, iy, iz] = points_in_mesh(mesh, centers)

    grid._solid[mesh_id] = solid


def _x_ray_crossings(origins: np.ndarray, tv: np.ndarray):
    """Sorted +x crossing distances per origin row against all triangles.

    Returns (ts, graze_any): ts is (r, m) ascending with inf padding;
    graze_any flags rows with an edge-grazing hit that needs a fallback.
    """
    v0 = tv[:, 0]
    e1 = tv[:, 1] - v0
    e2 = tv[:, 2] - v0
    # Moller-Trumbore specialized to direction (1, 0, 0)
    pvec = np.zeros_like(e2)
    pvec[:, 1] = -e2[:, 2]
    pvec[:, 2] = e2[:, 1]
    det = np.einsum("mj,mj->m", e1, pvec)
    scale = np.maximum(np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1), 1e-30)
    ok = np.abs(det) > 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins[:, None, :] - v0[None, :, :]          # (r, m, 3)
    u = np.einsum("rmj,mj->rm", tvec, pvec) * inv
    qvec = np.cross(tvec, e1[None, :, :])
    v = qvec[:, :, 0] * inv                               # direction . qvec
    t = np.einsum("mj,rmj->rm", e2, qvec) * inv
    eps = 1e-9
    hit = ok[None, :] & (u >= -eps) & (v >= -eps) & (u + v <= 1.0 + eps) & (t > HIT_EPS_MM)
    graze = hit & ((u < 1e-7) | (v < 1e-7) | (u + v > 1.0 - 1e-7))
    ts = np.where(hit, t, np.inf)
    ts.sort(axis=1)
    return ts, graze.any(axis=1)


def _all_cell_centers(grid: VoxelGrid) -> np.ndarray:
    xs = grid.axis_centers(0)
    ys = grid.axis_centers(1)
    zs = grid.axis_centers(2)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


def _overlap_mask(grid: VoxelGrid, ids) -> np.ndarray:
    ids = list(ids)
    if not ids:
        raise VoxelError("id list is empty")
    masks = [grid.solid_mask(i) for i in ids]
    out = masks[0].copy()
    for m in masks[1:]:
        out &= m
    return out


def overlap_volume(grid: VoxelGrid, ids) -> float:
    """Volume in liters of the cells belonging to every mesh in `ids`."""
    mask = _overlap_mask(grid, ids)
    return float(mask.sum()) * grid.cell_volume_mm3 / MM3_PER_LITER


def mesh_volume(grid: VoxelGrid, mesh_id: int) -> float:
    """Voxel volume in liters of a single registered mesh."""
    return overlap_volume(grid, [mesh_id])


def export_overlap_cells(grid: VoxelGrid, ids) -> np.ndarray:
    """(k, 3) centers of the overlap cells, x varying fastest, in mm."""
    mask = _overlap_mask(grid, ids)
    idx = np.argwhere(mask.transpose(2, 1, 0))       # rows (iz, iy, ix), x fastest
    if len(idx) == 0:
        return np.empty((0, 3), dtype=np.float64)
    ijk = idx[:, ::-1].astype(np.float64)
    return grid.origin + (ijk + 0.5) * grid.spacing
