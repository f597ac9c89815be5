"""Procedural test geometry: primitive solids and the bundled synthetic thorax.

The thorax phantom stands in for patient anatomy: an ellipsoidal skin shell,
slab ribs with intercostal gaps, a vertebral column, a scapula block, and
display-only trachea/vasculature. Region triangle sets and the nominal plan
are derived numerically so the committed fixture is reproducible.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .mesh import MeshModel


def box_mesh(center, size, name: str = "box") -> MeshModel:
    """Axis-aligned closed box; `size` is the full edge length per axis."""
    c = np.asarray(center, dtype=np.float64)
    h = np.asarray(size, dtype=np.float64) / 2.0
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    verts = c + signs * h
    # outward-consistent winding per face of the (-,-,-) .. (+,+,+) corner cube
    faces = [
        (0, 1, 3), (0, 3, 2),   # -x
        (4, 6, 7), (4, 7, 5),   # +x
        (0, 4, 5), (0, 5, 1),   # -y
        (2, 3, 7), (2, 7, 6),   # +y
        (0, 2, 6), (0, 6, 4),   # -z
        (1, 5, 7), (1, 7, 3),   # +z
    ]
    return MeshModel(verts, np.asarray(faces, dtype=np.int64), name=name)


def merge_meshes(meshes: list[MeshModel], name: str = "merged") -> MeshModel:
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    return MeshModel(np.vstack(verts), np.vstack(tris), name=name)


def ellipsoid_mesh(center, radii, n_theta: int = 48, n_phi: int = 24,
                   name: str = "ellipsoid") -> MeshModel:
    """Closed latitude/longitude tessellation of an axis-aligned ellipsoid."""
    c = np.asarray(center, dtype=np.float64)
    r = np.asarray(radii, dtype=np.float64)
    verts = [c + r * np.array([0.0, 0.0, 1.0]), c + r * np.array([0.0, 0.0, -1.0])]
    rows = []
    for i in range(1, n_phi):
        phi = math.pi * i / n_phi
        row = []
        for j in range(n_theta):
            th = 2.0 * math.pi * j / n_theta
            row.append(len(verts))
            verts.append(c + r * np.array([
                math.sin(phi) * math.cos(th),
                math.sin(phi) * math.sin(th),
                math.cos(phi),
            ]))
        rows.append(row)
    tris = []
    top, bottom = 0, 1
    first = rows[0]
    for j in range(n_theta):
        tris.append((top, first[j], first[(j + 1) % n_theta]))
    for i in range(len(rows) - 1):
        a, b = rows[i], rows[i + 1]
        for j in range(n_theta):
            k = (j + 1) % n_theta
            tris.append((a[j], b[j], b[k]))
            tris.append((a[j], b[k], a[k]))
    last = rows[-1]
    for j in range(n_theta):
        tris.append((bottom, last[(j + 1) % n_theta], last[j]))
    return MeshModel(np.asarray(verts), np.asarray(tris, dtype=np.int64), name=name)


def sphere_mesh(center, radius: float, n_theta: int = 48, n_phi: int = 24,
                name: str = "sphere") -> MeshModel:
    return ellipsoid_mesh(center, (radius, radius, radius),
                          n_theta=n_theta, n_phi=n_phi, name=name)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix (QR of a Gaussian matrix, det fixed)."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def grid_aligned_rotation(rng: np.random.Generator) -> np.ndarray:
    """Random rotation from the octahedral group (maps grid axes to grid axes)."""
    perm = rng.permutation(3)
    signs = rng.choice([-1.0, 1.0], size=3)
    m = np.zeros((3, 3))
    for row, col in enumerate(perm):
        m[row, col] = signs[row]
    if np.linalg.det(m) < 0:
        m[0] = -m[0]
    return m


def random_closed_mesh(rng: np.random.Generator, name: str = "random") -> MeshModel:
    """A randomly sized, rotated, and translated closed solid (box, sphere, or cone)."""
    from .geometry import DofCone, tessellate_cone

    kind = rng.choice(["box", "sphere", "cone"])
    if kind == "box":
        base = box_mesh((0, 0, 0), rng.uniform(40.0, 120.0, size=3), name=name)
    elif kind == "sphere":
        base = sphere_mesh((0, 0, 0), rng.uniform(30.0, 70.0),
                           n_theta=16, n_phi=8, name=name)
    else:
        cone = DofCone(apex=(0, 0, 0), axis=(0, 0, 1),
                       half_angle_deg=rng.uniform(10.0, 35.0),
                       length_mm=rng.uniform(60.0, 140.0))
        base = tessellate_cone(cone, radial_segments=12)
    rot = random_rotation(rng)
    shift = rng.uniform(-40.0, 40.0, size=3)
    return base.transformed(rot, shift, name=name)


# -- synthetic thorax phantom ----------------------------------------------------
#
# Frame: +x toward the patient's right, +y posterior (so the chest faces -y),
# +z cranial. The convergent point stands in for the root of the right upper
# lobe. Rib slabs leave intercostal gaps so entry corridors exist but can be
# blocked.

THORAX_SKIN_RADII = (170.0, 120.0, 280.0)
THORAX_CONVERGENT_MM = (45.0, 15.0, 80.0)


def thorax_meshes() -> list[tuple[MeshModel, str]]:
    """(mesh, role) pairs of the synthetic thorax."""
    skin = ellipsoid_mesh((0, 0, 0), THORAX_SKIN_RADII, n_theta=48, n_phi=24,
                          name="skin")
    rib_boxes = []
    for i, z0 in enumerate((29.0, 79.0, 129.0)):       # anterior slabs
        rib_boxes.append(box_mesh((60.0, -82.0, z0), (120.0, 20.0, 18.0),
                                  name=f"rib_a{i}"))
    for i, z0 in enumerate((19.0, 69.0, 119.0)):       # posterior slabs
        rib_boxes.append(box_mesh((60.0, 82.0, z0), (120.0, 20.0, 18.0),
                                  name=f"rib_p{i}"))
    ribs = merge_meshes(rib_boxes, name="ribs")
    vertebra = box_mesh((0.0, 90.0, 0.0), (44.0, 30.0, 380.0), name="vertebrae")
    scapula = box_mesh((75.0, 71.0, 170.0), (70.0, 26.0, 80.0), name="scapula")
    trachea = box_mesh((0.0, 2.0, 185.0), (24.0, 24.0, 130.0), name="trachea")
    vasculature = box_mesh((45.0, 12.0, 102.0), (30.0, 25.0, 35.0), name="vasculature")
    return [(skin, "skin"), (ribs, "rib"), (vertebra, "vertebra"),
            (scapula, "scapula"), (trachea, "trachea"), (vasculature, "vasculature")]


def thorax_regions(skin: MeshModel) -> tuple[set[int], set[int]]:
    """(tool, camera) entry-region triangle sets on the thorax skin."""
    centroids = skin.triangle_vertices.mean(axis=1)
    tool = {
        int(i) for i, c in enumerate(centroids)
        if c[1] < -55.0 and 10.0 < c[0] < 150.0 and -150.0 < c[2] < 150.0
    }
    camera = {
        int(i) for i, c in enumerate(centroids)
        if c[1] > 70.0 and 25.0 < c[0] < 120.0 and -60.0 < c[2] < 55.0
    }
    return tool, camera


def thorax_scene(config=None):
    from .rules import AnatomicalScene, PlanningConfig, SceneMesh

    meshes = [SceneMesh(mesh, role, mesh.name) for mesh, role in thorax_meshes()]
    skin = next(sm.mesh for sm in meshes if sm.role == "skin")
    tool, camera = thorax_regions(skin)
    return AnatomicalScene(meshes, THORAX_CONVERGENT_MM, tool, camera,
                           config=config or PlanningConfig())


# Nominal fixture plan, frozen by search over the region candidates: skin
# triangles for the two tool entries and the camera entry, plus the scope
# slant parameters. Volume lands near the middle of the accepted band.
NOMINAL_LEFT_TRIANGLE = 1465
NOMINAL_RIGHT_TRIANGLE = 1192
NOMINAL_CAMERA_TRIANGLE = 1213
NOMINAL_CAMERA_ROLL_DEG = 0.0
NOMINAL_CAMERA_DEPTH_MM = 65.0


def nominal_thorax_plan(scene):
    from .geometry import aimed_camera_pose, make_trajectory

    tv = scene.skin.mesh.triangle_vertices
    c = scene.convergent_point
    left = make_trajectory(tv[NOMINAL_LEFT_TRIANGLE].mean(axis=0), c, "left")
    right = make_trajectory(tv[NOMINAL_RIGHT_TRIANGLE].mean(axis=0), c, "right")
    cam = aimed_camera_pose(tv[NOMINAL_CAMERA_TRIANGLE].mean(axis=0), c,
                            roll_deg=NOMINAL_CAMERA_ROLL_DEG,
                            depth_mm=NOMINAL_CAMERA_DEPTH_MM,
                            tilt_deg=scene.config.tilt_deg,
                            tube_length_mm=scene.config.tube_length_mm,
                            fov_deg=scene.config.fov_deg)
    return left, right, cam


def write_thorax_fixtures(out_dir) -> dict:
    """Write the thorax OBJ set, manifest, and the evaluated nominal plan.

    Regenerating produces byte-identical files; the plan is asserted valid
    and its operable volume checked against the accepted band before
    anything is written.
    """
    import json
    from pathlib import Path

    from .manifest import config_dict, plan_to_dict
    from .mesh import save_obj
    from .rules import evaluate_plan

    out = Path(out_dir)
    scene_dir = out / "synthetic_thorax"
    scene_dir.mkdir(parents=True, exist_ok=True)

    scene = thorax_scene()
    left, right, cam = nominal_thorax_plan(scene)
    report = evaluate_plan(left, right, cam, scene)
    assert report.overall_valid, [r.rule for r in report.rules if not r.passed]
    assert report.in_band
    assert 0.65 <= report.operable_volume_l <= 1.37, report.operable_volume_l

    mesh_entries = []
    for sm in scene.meshes:
        path = scene_dir / f"{sm.name}.obj"
        save_obj(sm.mesh, path)
        mesh_entries.append({"path": f"{sm.name}.obj", "role": sm.role, "name": sm.name})

    manifest = {
        "meshes": mesh_entries,
        "convergent_point_mm": list(THORAX_CONVERGENT_MM),
        "tool_entry_region": sorted(scene.tool_entry_region),
        "camera_entry_region": sorted(scene.camera_entry_region),
        "defaults": config_dict(scene.config),
    }
    (scene_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    plan = plan_to_dict(left, right, cam, report,
                        manifest="synthetic_thorax/manifest.json")
    (out / "plan_nominal.json").write_text(
        json.dumps(plan, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"volume_l": report.operable_volume_l,
            "angle_deg": report.manipulation_angle_deg,
            "left_mm": left.length_mm, "right_mm": right.length_mm}


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Regenerate the bundled fixtures.")
    parser.add_argument("--out", default="fixtures", help="output directory")
    args = parser.parse_args()
    summary = write_thorax_fixtures(args.out)
    print(json.dumps(summary))
