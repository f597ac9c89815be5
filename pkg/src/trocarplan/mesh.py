"""Triangulated meshes, OBJ ingestion, and the intersection predicates the rules build on.

All lengths are millimeters. Meshes are immutable after construction; every
query here is a pure function and safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

HIT_EPS_MM = 1e-6       # minimum ray-hit distance; also the hit dedup tolerance
MIN_TRIANGLE_AREA = 1e-6  # mm^2; triangles at or below this are degenerate

_BARY_EPS = 1e-9        # inclusive edge tolerance for barycentric hit tests
_GRAZE_MARGIN = 1e-7    # barycentric margin that flags grazing/edge hits


class MeshError(ValueError):
    """Invalid mesh data, or an operation applied to an unsuitable mesh."""


class ObjFormatError(MeshError):
    """Malformed OBJ content; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class OpenMeshError(MeshError):
    """Operation requires a closed (watertight, consistently oriented) mesh."""


@dataclass(frozen=True)
class MeshModel:
    """A triangulated surface: (n, 3) float64 vertices in mm, (m, 3) index triples."""

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"mesh '{self.name}': vertices must be (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"mesh '{self.name}': triangles must be (m, 3), got {t.shape}")
        if len(v) == 0 or len(t) == 0:
            raise MeshError(f"mesh '{self.name}' is empty")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshError(f"mesh '{self.name}': triangle index out of range")
        tv = v[t]
        areas = 0.5 * np.linalg.norm(
            np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0]), axis=1
        )
        if (areas <= MIN_TRIANGLE_AREA).any():
            bad = int(np.argmax(areas <= MIN_TRIANGLE_AREA))
            raise MeshError(f"mesh '{self.name}': degenerate triangle {bad}")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def __len__(self) -> int:
        return len(self.triangles)

    @cached_property
    def triangle_vertices(self) -> np.ndarray:
        """(m, 3, 3) per-triangle vertex positions."""
        tv = self.vertices[self.triangles]
        tv.flags.writeable = False
        return tv

    @cached_property
    def bounds(self) -> np.ndarray:
        """(2, 3) axis-aligned min/max corner."""
        b = np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)])
        b.flags.writeable = False
        return b

    @cached_property
    def closed(self) -> bool:
        """True iff every edge is shared by exactly two opposed triangles."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        n = len(self.vertices)
        directed = e[:, 0] * n + e[:, 1]
        if len(np.unique(directed)) != len(directed):
            return False  # same directed edge twice: inconsistent orientation
        reverse = e[:, 1] * n + e[:, 0]
        return bool(np.array_equal(np.sort(directed), np.sort(reverse)))

    @cached_property
    def index(self) -> "SpatialIndex":
        return SpatialIndex(self)

    def transformed(self, rotation: np.ndarray | None = None,
                    translation=(0.0, 0.0, 0.0), name: str | None = None) -> "MeshModel":
        """New mesh with vertices mapped through `rotation @ v + translation`."""
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=np.float64).T
        v = v + np.asarray(translation, dtype=np.float64)
        return MeshModel(v, self.triangles.copy(), name=self.name if name is None else name)


def is_closed(mesh: MeshModel) -> bool:
    return mesh.closed


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"ray direction not normalized (|d| = {n})")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d / n)


@dataclass(frozen=True)
class Segment:
    origin: np.ndarray
    endpoint: np.ndarray
    radius: float = 0.0

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        e = np.asarray(self.endpoint, dtype=np.float64).reshape(3)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "endpoint", e)
        if self.radius < 0:
            raise ValueError("segment radius must be >= 0")
        if self.length <= 0:
            raise ValueError("segment has zero length")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.endpoint - self.origin))


class SpatialIndex:
    """Median-split bounding-volume hierarchy over one mesh's triangles.

    Every triangle lands in exactly one leaf; node bounds contain all
    descendant triangle bounds. Immutable after construction.
    """

    def __init__(self, mesh: MeshModel, leaf_size: int = 8):
        self.mesh = mesh
        tv = mesh.triangle_vertices
        self._tri_lo = tv.min(axis=1)
        self._tri_hi = tv.max(axis=1)
        centroids = tv.mean(axis=1)

        node_lo: list[np.ndarray] = []
        node_hi: list[np.ndarray] = []
        node_child: list[tuple[int, int]] = []   # (left, right) or (-1, -1) for leaf
        node_span: list[tuple[int, int]] = []    # (start, count) into self._order
        order: list[np.ndarray] = []
        offset = 0

        def build(idx: np.ndarray) -> int:
            nonlocal offset
            node_id = len(node_lo)
            node_lo.append(self._tri_lo[idx].min(axis=0))
            node_hi.append(self._tri_hi[idx].max(axis=0))
            node_child.append((-1, -1))
            node_span.append((0, 0))
            if len(idx) <= leaf_size:
                node_span[node_id] = (offset, len(idx))
                order.append(idx)
                offset += len(idx)
                return node_id
            extent = node_hi[node_id] - node_lo[node_id]
            axis = int(np.argmax(extent))
            mid = len(idx) // 2
            part = idx[np.argsort(centroids[idx, axis], kind="stable")]
            left = build(part[:mid])
            right = build(part[mid:])
            node_child[node_id] = (left, right)
            return node_id

        build(np.arange(len(mesh.triangles)))
        self._node_lo = np.asarray(node_lo)
        self._node_hi = np.asarray(node_hi)
        self._node_child = node_child
        self._node_span = node_span
        self._order = np.concatenate(order)

    # -- candidate gathering ------------------------------------------------

    def _leaves_for_box(self, lo, hi) -> np.ndarray:
        out = []
        stack = [0]
        nlo, nhi = self._node_lo, self._node_hi
        while stack:
            n = stack.pop()
            if (nlo[n] > hi).any() or (nhi[n] < lo).any():
                continue
            left, right = self._node_child[n]
            if left < 0:
                start, count = self._node_span[n]
                out.append(self._order[start:start + count])
            else:
                stack.append(left)
                stack.append(right)
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)

    def box_candidates(self, lo, hi) -> np.ndarray:
        """Triangle ids whose bounds touch the axis-aligned box [lo, hi]."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        cand = self._leaves_for_box(lo, hi)
        if len(cand) == 0:
            return cand
        keep = ~((self._tri_lo[cand] > hi).any(axis=1) | (self._tri_hi[cand] < lo).any(axis=1))
        return cand[keep]

    def _ray_candidates(self, origin: np.ndarray, direction: np.ndarray) -> np.ndarray:
        out = []
        stack = [0]
        nlo, nhi = self._node_lo, self._node_hi
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / direction
        zero = direction == 0.0
        while stack:
            n = stack.pop()
            with np.errstate(invalid="ignore"):
                t1 = (nlo[n] - origin) * inv
                t2 = (nhi[n] - origin) * inv
            # where direction is 0, fall back to an in-slab check
            if zero.any():
                inside = (origin >= nlo[n]) & (origin <= nhi[n])
                if (~inside[zero]).any():
                    continue
                t1 = np.where(zero, -np.inf, t1)
                t2 = np.where(zero, np.inf, t2)
            tmin = float(np.minimum(t1, t2).max())
            tmax = float(np.maximum(t1, t2).min())
            if tmax < max(tmin, 0.0):
                continue
            left, right = self._node_child[n]
            if left < 0:
                start, count = self._node_span[n]
                out.append(self._order[start:start + count])
            else:
                stack.append(left)
                stack.append(right)
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)

    # -- queries --------------------------------------------------------------

    def ray_hits(self, origin, direction, with_flags: bool = False):
        """Ordered (distance, triangle_id) intersections along a ray.

        Edge and vertex hits register on several triangles at one distance;
        they are collapsed to a single hit (lowest triangle id). With
        `with_flags`, also returns whether every hit was cleanly interior
        (no grazing/edge ambiguity), which parity tests rely on.
        """
        origin = np.asarray(origin, dtype=np.float64).reshape(3)
        direction = np.asarray(direction, dtype=np.float64).reshape(3)
        cand = self._ray_candidates(origin, direction)
        hits, clean = _intersect_triangles(origin, direction, self.mesh.triangle_vertices, cand)
        if with_flags:
            return hits, clean
        return hits


def _intersect_triangles(origin, direction, tv, ids) -> tuple[list[tuple[float, int]], bool]:
    """Moller-Trumbore over the given triangle ids, sorted and deduplicated."""
    if len(ids) == 0:
        return [], True
    sub = tv[ids]
    v0 = sub[:, 0]
    e1 = sub[:, 1] - v0
    e2 = sub[:, 2] - v0
    pvec = np.cross(direction[None, :], e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    ok = np.abs(det) > 1e-14 * np.maximum(scale, 1e-30)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin[None, :] - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = np.einsum("j,ij->i", direction, qvec) * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    hit = ok & (u >= -_BARY_EPS) & (v >= -_BARY_EPS) & (u + v <= 1.0 + _BARY_EPS) & (t > HIT_EPS_MM)
    if not hit.any():
        return [], True
    graze = hit & (
        (u < _GRAZE_MARGIN) | (v < _GRAZE_MARGIN) | (u + v > 1.0 - _GRAZE_MARGIN)
    )
    ht = t[hit]
    hids = ids[hit]
    order = np.lexsort((hids, ht))
    ht = ht[order]
    hids = hids[order]
    kept: list[tuple[float, int]] = []
    clean = not bool(graze.any())
    last_t = -np.inf
    for dist, tid in zip(ht, hids):
        if dist - last_t <= HIT_EPS_MM:
            clean = False  # coincident hits imply an edge/vertex crossing
            continue
        kept.append((float(dist), int(tid)))
        last_t = dist
    return kept, clean


def ray_intersect(index: SpatialIndex, ray: Ray) -> list[tuple[float, int]]:
    """All mesh intersections along `ray`, ascending by distance (> 1e-6 mm)."""
    return index.ray_hits(ray.origin, ray.direction)


# Deterministic, irrationally oriented cast directions for parity tests.
def _parity_directions(seed: int, count: int = 32) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = [np.array([0.57735026918962, 0.577350269189626, 0.577350269189630])]
    while len(dirs) < count:
        d = rng.normal(size=3)
        n = np.linalg.norm(d)
        if n > 1e-6:
            dirs.append(d / n)
    return np.asarray(dirs)


_POINT_DIRECTIONS = _parity_directions(20240815)
_BATCH_DIRECTIONS = _parity_directions(71521031)


def point_in_mesh(index: SpatialIndex, p) -> bool:
    """Ray-parity containment test for a closed mesh.

    Casts along a fixed direction and counts crossings; when a hit grazes an
    edge or vertex the direction is perturbed deterministically and the cast
    repeated, so degenerate geometry cannot corrupt the parity.
    """
    mesh = index.mesh
    if not mesh.closed:
        raise OpenMeshError(f"mesh '{mesh.name}' is not closed")
    p = np.asarray(p, dtype=np.float64).reshape(3)
    lo, hi = mesh.bounds
    if (p < lo - HIT_EPS_MM).any() or (p > hi + HIT_EPS_MM).any():
        return False
    for d in _POINT_DIRECTIONS:
        hits, clean = index.ray_hits(p, d, with_flags=True)
        if clean:
            return len(hits) % 2 == 1
    raise MeshError(f"mesh '{mesh.name}': could not classify point {p.tolist()}")


def points_in_mesh(mesh: MeshModel, points: np.ndarray, *, chunk: int = 512,
                   require_closed: bool = True) -> np.ndarray:
    """Vectorized ray-parity containment for many points at once.

    Independent of the BVH path: intersects every triangle directly, in
    chunks. Points whose cast grazes an edge are re-cast along perturbed
    directions until clean.
    """
    if require_closed and not mesh.closed:
        raise OpenMeshError(f"mesh '{mesh.name}' is not closed")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    out = np.zeros(len(pts), dtype=bool)
    tv = mesh.triangle_vertices
    v0 = tv[:, 0]
    e1 = tv[:, 1] - v0
    e2 = tv[:, 2] - v0
    scale = np.maximum(np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1), 1e-30)
    lo, hi = mesh.bounds

    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        inside = np.zeros(len(block), dtype=bool)
        pending = np.ones(len(block), dtype=bool)
        pending &= ~(((block < lo - HIT_EPS_MM) | (block > hi + HIT_EPS_MM)).any(axis=1))
        for d in _BATCH_DIRECTIONS:
            if not pending.any():
                break
            sub = block[pending]
            parity, clean = _parity_many(sub, d, v0, e1, e2, scale)
            idx = np.flatnonzero(pending)
            done = idx[clean]
            inside[done] = parity[clean]
            pending[done] = False
        if pending.any():
            raise MeshError(f"mesh '{mesh.name}': could not classify {int(pending.sum())} points")
        out[start:start + chunk] = inside
    return out


def _parity_many(points, direction, v0, e1, e2, scale):
    """Crossing parity of +direction rays from each point; flags unclean casts."""
    pvec = np.cross(direction, e2)                      # (m, 3)
    det = np.einsum("ij,ij->i", e1, pvec)               # (m,)
    ok = np.abs(det) > 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = points[:, None, :] - v0[None, :, :]          # (p, m, 3)
    u = np.einsum("pmj,mj->pm", tvec, pvec) * inv
    qvec = np.cross(tvec, e1[None, :, :])
    v = np.einsum("j,pmj->pm", direction, qvec) * inv
    t = np.einsum("mj,pmj->pm", e2, qvec) * inv
    hit = ok[None, :] & (u >= -_BARY_EPS) & (v >= -_BARY_EPS) \
        & (u + v <= 1.0 + _BARY_EPS) & (t > HIT_EPS_MM)
    graze = hit & ((u < _GRAZE_MARGIN) | (v < _GRAZE_MARGIN) | (u + v > 1.0 - _GRAZE_MARGIN))
    ts = np.where(hit, t, np.inf)
    ts.sort(axis=1)
    finite = np.isfinite(ts)
    counts = finite.sum(axis=1)
    # coincident distances signal an edge crossing shared by two triangles
    with np.errstate(invalid="ignore"):
        diffs = np.diff(ts, axis=1)
    near_dupe = (np.abs(diffs) <= HIT_EPS_MM) & finite[:, 1:]
    clean = ~(graze.any(axis=1) | near_dupe.any(axis=1))
    # for clean rows every hit is distinct, so the raw count is the crossing count
    return (counts % 2 == 1), clean


def segment_blocked(index: SpatialIndex, seg: Segment) -> bool:
    """True iff any mesh triangle lies within `seg.radius` of the segment.

    Radius 0 degenerates to an exact segment-triangle intersection test.
    """
    lo = np.minimum(seg.origin, seg.endpoint) - seg.radius
    hi = np.maximum(seg.origin, seg.endpoint) + seg.radius
    cand = index.box_candidates(lo, hi)
    tv = index.mesh.triangle_vertices
    for tid in cand:
        if _segment_triangle_distance(seg.origin, seg.endpoint, tv[tid]) <= seg.radius:
            return True
    return False


def closest_triangle(mesh: MeshModel, p) -> tuple[float, int]:
    """(distance, triangle id) of the mesh triangle nearest to `p`."""
    p = np.asarray(p, dtype=np.float64).reshape(3)
    cp = closest_points_on_triangles(p, mesh.triangle_vertices)
    d2 = np.einsum("ij,ij->i", cp - p, cp - p)
    tid = int(np.argmin(d2))
    return float(math.sqrt(d2[tid])), tid


def closest_points_on_triangles(p: np.ndarray, tv: np.ndarray) -> np.ndarray:
    """Closest point to `p` on each triangle of `tv` (m, 3, 3); returns (m, 3).

    Vectorized Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
    """
    p = np.asarray(p, dtype=np.float64).reshape(3)
    a, b, c = tv[:, 0], tv[:, 1], tv[:, 2]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp_ = p - c
    d5 = np.einsum("ij,ij->i", ab, cp_)
    d6 = np.einsum("ij,ij->i", ac, cp_)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        t_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        denom_bc = (d4 - d3) + (d5 - d6)
        t_bc = np.where(denom_bc != 0, (d4 - d3) / denom_bc, 0.0)
        denom = va + vb + vc
        v_in = np.where(denom != 0, vb / denom, 0.0)
        w_in = np.where(denom != 0, vc / denom, 0.0)

    result = a + ab * v_in[:, None] + ac * w_in[:, None]  # interior default
    on_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    result = np.where(on_bc[:, None], b + (c - b) * t_bc[:, None], result)
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    result = np.where(on_ac[:, None], a + ac * t_ac[:, None], result)
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    result = np.where(on_ab[:, None], a + ab * t_ab[:, None], result)
    at_c = (d6 >= 0) & (d5 <= d6)
    result = np.where(at_c[:, None], c, result)
    at_b = (d3 >= 0) & (d4 <= d3)
    result = np.where(at_b[:, None], b, result)
    at_a = (d1 <= 0) & (d2 <= 0)
    result = np.where(at_a[:, None], a, result)
    return result


def _point_triangle_distance(p, tri) -> float:
    cp = closest_points_on_triangles(p, tri[None, :, :])[0]
    return float(np.linalg.norm(cp - np.asarray(p, dtype=np.float64)))


def _segment_segment_distance(p1, q1, p2, q2) -> float:
    """Minimum distance between segments p1-q1 and p2-q2 (Ericson 5.1.9)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    eps = 1e-12
    if a <= eps and e <= eps:
        return float(np.linalg.norm(r))
    if a <= eps:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = float(d1 @ r)
        if e <= eps:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > eps else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    c1 = p1 + d1 * s
    c2 = p2 + d2 * t
    return float(np.linalg.norm(c1 - c2))


def _segment_triangle_distance(p0, p1, tri) -> float:
    """Minimum distance between segment p0-p1 and a single triangle (3, 3)."""
    a, b, c = tri
    n = np.cross(b - a, c - a)
    s0 = float(n @ (p0 - a))
    s1 = float(n @ (p1 - a))
    if (s0 <= 0.0 <= s1) or (s1 <= 0.0 <= s0):
        if s0 != s1:
            x = p0 + (p1 - p0) * (s0 / (s0 - s1))
            # barycentric containment of the plane crossing
            v0 = b - a
            v1 = c - a
            v2 = x - a
            d00 = float(v0 @ v0)
            d01 = float(v0 @ v1)
            d11 = float(v1 @ v1)
            d20 = float(v2 @ v0)
            d21 = float(v2 @ v1)
            den = d00 * d11 - d01 * d01
            if den > 0:
                v = (d11 * d20 - d01 * d21) / den
                w = (d00 * d21 - d01 * d20) / den
                if v >= -1e-12 and w >= -1e-12 and v + w <= 1.0 + 1e-12:
                    return 0.0
    best = min(_point_triangle_distance(p0, tri), _point_triangle_distance(p1, tri))
    for e0, e1 in ((a, b), (b, c), (c, a)):
        best = min(best, _segment_segment_distance(p0, p1, e0, e1))
    return best


# -- OBJ ingestion -------------------------------------------------------------

def load_obj(path, name: str | None = None) -> MeshModel:
    """Load an ASCII OBJ (v/f records). Polygons are fan-triangulated,
    degenerate triangles dropped, coordinates taken as millimeters as-is.
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"OBJ file not found: {p}")
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(p, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            kw = parts[0]
            if kw == "v":
                if len(parts) < 4:
                    raise ObjFormatError(p, line_no, "vertex needs 3 coordinates")
                try:
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise ObjFormatError(p, line_no, f"bad vertex coordinate: {exc}") from None
            elif kw == "f":
                idxs = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ObjFormatError(p, line_no, f"bad face index {head!r}") from None
                    if i < 0:
                        raise ObjFormatError(p, line_no, "negative face indices are not supported")
                    if i == 0:
                        raise ObjFormatError(p, line_no, "face indices are 1-based")
                    if i > len(verts):
                        raise ObjFormatError(p, line_no, f"face index {i} out of range")
                    idxs.append(i - 1)
                if len(idxs) < 3:
                    raise ObjFormatError(p, line_no, "face needs at least 3 vertices")
                for k in range(1, len(idxs) - 1):
                    faces.append((idxs[0], idxs[k], idxs[k + 1]))
            # vn / vt / g / o / s / usemtl / mtllib carry no geometry; skipped
    if not verts or not faces:
        raise MeshError(f"{p}: empty mesh (no v/f records)")
    v = np.asarray(verts, dtype=np.float64)
    t = np.asarray(faces, dtype=np.int64)
    tv = v[t]
    areas = 0.5 * np.linalg.norm(np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0]), axis=1)
    t = t[areas > MIN_TRIANGLE_AREA]
    if len(t) == 0:
        raise MeshError(f"{p}: empty mesh (all triangles degenerate)")
    return MeshModel(v, t, name=name if name is not None else p.stem)


def save_obj(mesh: MeshModel, path) -> None:
    p = Path(path)
    with open(p, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.10g} {v[1]:.10g} {v[2]:.10g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
