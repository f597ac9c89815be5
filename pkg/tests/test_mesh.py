from __future__ import annotations

import math
import textwrap

import numpy as np
import pytest

from trocarplan.mesh import (
    HIT_EPS_MM,
    MeshError,
    MeshModel,
    ObjFormatError,
    OpenMeshError,
    Ray,
    Segment,
    SpatialIndex,
    closest_triangle,
    is_closed,
    load_obj,
    point_in_mesh,
    points_in_mesh,
    ray_intersect,
    save_obj,
    segment_blocked,
)
from trocarplan.synthetic import random_rotation, sphere_mesh


# -- independent hit oracle: exhaustive scalar-ish Moller-Trumbore ---------------

def brute_force_hits(mesh: MeshModel, origin, direction):
    """Reference ray intersection: every triangle, no spatial index."""
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    tv = mesh.triangle_vertices
    a, b, c = tv[:, 0], tv[:, 1], tv[:, 2]
    e1 = b - a
    e2 = c - a
    p = np.cross(direction[None, :], e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) >= 1e-14 * np.maximum(
        np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1), 1e-30)
    det = np.where(ok, det, 1.0)
    tvec = origin[None, :] - a
    u = np.einsum("ij,ij->i", tvec, p) / det
    q = np.cross(tvec, e1)
    v = (q @ direction) / det
    t = np.einsum("ij,ij->i", e2, q) / det
    good = ok & (u >= -1e-9) & (v >= -1e-9) & (u + v <= 1 + 1e-9) & (t > HIT_EPS_MM)
    raw = sorted(zip(t[good].tolist(), np.flatnonzero(good).tolist()))
    hits = []
    last = -math.inf
    for t_, tid in raw:
        if t_ - last <= HIT_EPS_MM:
            continue
        hits.append((t_, tid))
        last = t_
    return hits


# -- OBJ ingestion ---------------------------------------------------------------

def test_load_minimal_obj(tmp_path):
    p = tmp_path / "tri.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    m = load_obj(p)
    assert len(m.vertices) == 3
    assert len(m.triangles) == 1


def test_load_quad_cube_fan_triangulated(tmp_path):
    verts = [(x, y, z) for x in (0, 100) for y in (0, 100) for z in (0, 100)]
    # quads indexed against the (0/100)^3 corner ordering above, outward wound
    quads = [
        (1, 2, 4, 3), (5, 7, 8, 6),
        (1, 5, 6, 2), (3, 4, 8, 7),
        (1, 3, 7, 5), (2, 6, 8, 4),
    ]
    lines = [f"v {x} {y} {z}" for x, y, z in verts]
    lines += [f"f {a} {b} {c} {d}" for a, b, c, d in quads]
    p = tmp_path / "cube.obj"
    p.write_text("\n".join(lines) + "\n")
    m = load_obj(p)
    assert len(m.vertices) == 8
    assert len(m.triangles) == 12
    assert is_closed(m)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_obj(tmp_path / "nope.obj")


def test_malformed_records_report_line_numbers(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n")
    with pytest.raises(ObjFormatError) as exc:
        load_obj(p)
    assert exc.value.line_no == 4

    p2 = tmp_path / "neg.obj"
    p2.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n")
    with pytest.raises(ObjFormatError, match="negative"):
        load_obj(p2)


def test_degenerate_faces_dropped(tmp_path):
    p = tmp_path / "deg.obj"
    p.write_text(textwrap.dedent("""\
        v 0 0 0
        v 1 0 0
        v 0 1 0
        v 2 0 0
        f 1 2 3
        f 1 2 4
    """))
    m = load_obj(p)   # second face is collinear, area 0
    assert len(m.triangles) == 1


def test_ignores_normals_and_materials(tmp_path):
    p = tmp_path / "full.obj"
    p.write_text(textwrap.dedent("""\
        mtllib scene.mtl
        o thing
        v 0 0 0
        v 10 0 0
        v 0 10 0
        vn 0 0 1
        vt 0 0
        usemtl skin
        s off
        f 1/1/1 2/1/1 3/1/1
    """))
    m = load_obj(p)
    assert len(m.triangles) == 1


def test_obj_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    mesh = sphere_mesh((12.3456789, -4.2, 7.7), 53.123456, n_theta=12, n_phi=6)
    out = tmp_path / "roundtrip.obj"
    save_obj(mesh, out)
    back = load_obj(out)
    assert np.abs(back.vertices - mesh.vertices).max() < 1e-6
    assert np.array_equal(back.triangles, mesh.triangles)


def test_empty_mesh_rejected(tmp_path):
    p = tmp_path / "empty.obj"
    p.write_text("# nothing\n")
    with pytest.raises(MeshError, match="empty"):
        load_obj(p)


# -- closedness ------------------------------------------------------------------

def test_is_closed_cases(cube100):
    assert is_closed(cube100)
    single = MeshModel([(0, 0, 0), (10, 0, 0), (0, 10, 0)], [(0, 1, 2)])
    assert not is_closed(single)
    holed = MeshModel(cube100.vertices, cube100.triangles[:-1], name="holed")
    assert not is_closed(holed)


def test_is_closed_invariant_under_reorder_and_rigid(cube100):
    rng = np.random.default_rng(3)
    perm = rng.permutation(len(cube100.triangles))
    reordered = MeshModel(cube100.vertices, cube100.triangles[perm])
    assert is_closed(reordered)
    moved = cube100.transformed(random_rotation(rng), rng.uniform(-50, 50, 3))
    assert is_closed(moved)


# -- ray casting -----------------------------------------------------------------

def test_ray_hits_single_triangle():
    tri = MeshModel([(-10, -10, 0), (10, -10, 0), (0, 15, 0)], [(0, 1, 2)])
    hits = ray_intersect(tri.index, Ray((0, 0, -10), (0, 0, 1)))
    assert len(hits) == 1
    assert hits[0][1] == 0
    assert abs(hits[0][0] - 10.0) < 1e-12

    away = ray_intersect(tri.index, Ray((0, 0, -10), (0, 0, -1)))
    assert away == []


def test_ray_hits_match_brute_force_on_random_mesh():
    rng = np.random.default_rng(42)
    verts = rng.uniform(-100, 100, size=(120, 3))
    tris = rng.integers(0, 120, size=(500, 3))
    areas_ok = []
    for t in tris:
        a, b, c = verts[t]
        if len({*t}) == 3 and np.linalg.norm(np.cross(b - a, c - a)) > 1e-3:
            areas_ok.append(t)
    mesh = MeshModel(verts, np.asarray(areas_ok))
    index = SpatialIndex(mesh)
    mismatches = 0
    for _ in range(1000):
        origin = rng.uniform(-150, 150, 3)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        got = index.ray_hits(origin, d)
        want = brute_force_hits(mesh, origin, d)
        if len(got) != len(want) or any(
            abs(g[0] - w[0]) > 1e-9 or g[1] != w[1] for g, w in zip(got, want)
        ):
            mismatches += 1
    assert mismatches == 0


def test_closed_mesh_exterior_parity_is_even(cube100, unit_sphere_100):
    rng = np.random.default_rng(11)
    for mesh in (cube100, unit_sphere_100):
        index = mesh.index
        for _ in range(200):
            origin = rng.uniform(200, 400, 3) * rng.choice([-1, 1], 3)
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            hits = index.ray_hits(origin, d)
            assert len(hits) % 2 == 0


# -- segment / capsule queries ---------------------------------------------------

def test_segment_blocked_through_cube(cube100):
    assert segment_blocked(cube100.index, Segment((-200, 0, 0), (200, 0, 0)))
    assert not segment_blocked(cube100.index, Segment((-200, 0, 200), (200, 0, 200)))


def test_segment_blocked_respects_capsule_radius():
    # triangle in the z=0 plane; segment passes 4 mm above it
    tri = MeshModel([(-50, -50, 0), (50, -50, 0), (0, 50, 0)], [(0, 1, 2)])
    seg_near = Segment((-30, 0, 4.0), (30, 0, 4.0), radius=5.0)
    assert segment_blocked(tri.index, seg_near)
    seg_thin = Segment((-30, 0, 4.0), (30, 0, 4.0), radius=3.0)
    assert not segment_blocked(tri.index, seg_thin)
    # analytic check: the distance really is 4 mm
    from trocarplan.mesh import _segment_triangle_distance
    d = _segment_triangle_distance(np.array([-30.0, 0, 4]), np.array([30.0, 0, 4]),
                                   tri.triangle_vertices[0])
    assert abs(d - 4.0) < 1e-9


def test_point_in_mesh_cases(cube100):
    index = cube100.index
    assert point_in_mesh(index, (0, 0, 0))
    assert not point_in_mesh(index, (200, 0, 0))
    single = MeshModel([(0, 0, 0), (10, 0, 0), (0, 10, 0)], [(0, 1, 2)])
    with pytest.raises(OpenMeshError):
        point_in_mesh(single.index, (1, 1, 1))


def test_point_in_mesh_matches_analytic_sphere():
    sphere = sphere_mesh((0, 0, 0), 100.0, n_theta=64, n_phi=32)
    rng = np.random.default_rng(5)
    index = sphere.index
    pts = rng.uniform(-130, 130, size=(10_000, 3))
    r = np.linalg.norm(pts, axis=1)
    analytic = r < 100.0
    got = np.array([point_in_mesh(index, p) for p in pts])
    agree = got == analytic
    assert agree.mean() >= 0.999
    # disagreements live in the tessellation sliver hugging the surface
    assert np.all(np.abs(r[~agree] - 100.0) < 15.0)


def test_batch_parity_agrees_with_single(unit_sphere_100):
    rng = np.random.default_rng(17)
    pts = rng.uniform(-120, 120, size=(500, 3))
    batch = points_in_mesh(unit_sphere_100, pts)
    single = np.array([point_in_mesh(unit_sphere_100.index, p) for p in pts])
    assert np.array_equal(batch, single)


def test_closest_triangle(cube100):
    d, tid = closest_triangle(cube100, (0, 0, 70))
    assert abs(d - 20.0) < 1e-9
    d2, _ = closest_triangle(cube100, (0, 0, 50))
    assert d2 < 1e-9


def test_ray_direction_must_be_normalized():
    with pytest.raises(ValueError):
        Ray((0, 0, 0), (1, 1, 0))


def test_segment_zero_length_rejected():
    with pytest.raises(ValueError):
        Segment((1, 2, 3), (1, 2, 3))
