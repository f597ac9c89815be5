"""Placement rules and plan evaluation over a role-labeled anatomical scene.

Hard rules gate a plan: instrument reach, entry-region membership, bony
obstruction, camera aim/obstruction/region, and tube crowding. The
manipulation-angle band (45 to 75 degrees) is advisory: it is reported with
an in-band flag but never blocks a plan on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    CameraPose,
    DofCone,
    FovCone,
    TrocarTrajectory,
    aim_error,
    angle_between,
    cone_contains_many,
    dof_cone_of,
    fov_cone_of,
    tessellate_cone,
)
from .mesh import (
    MeshModel,
    Segment,
    SpatialIndex,
    closest_points_on_triangles,
    closest_triangle,
    point_in_mesh,
    segment_blocked,
)
from .voxel import build_grid, export_overlap_cells, fill_interior, overlap_volume, voxelize_surface

VALID_ROLES = ("skin", "rib", "vertebra", "scapula", "trachea", "vasculature", "other")
BONY_ROLES = frozenset({"rib", "vertebra", "scapula"})
ANGLE_BAND_DEG = (45.0, 75.0)


class SceneError(ValueError):
    pass


class PlacementError(ValueError):
    """A placement that cannot be checked (off-skin entry, mismatched targets, ...)."""


@dataclass(frozen=True)
class PlanningConfig:
    """Engine defaults; a scene manifest may override any of them."""

    spacing_mm: float = 15.0
    reach_mm: float = 280.0
    half_angle_deg: float = 20.0
    fov_deg: float = 60.0
    tilt_deg: float = 30.0
    aim_tol_mm: float = 5.0
    snap_tol_mm: float = 10.0
    capsule_radius_mm: float = 5.0
    skin_snap_mm: float = 1.0
    crowding_step_mm: float = 5.0
    fov_length_mm: float = 280.0
    camera_depth_mm: float = 80.0
    tube_length_mm: float = 300.0
    clip_to_skin: bool = False

    def merged(self, overrides: dict) -> "PlanningConfig":
        known = {k: v for k, v in overrides.items() if hasattr(self, k)}
        unknown = set(overrides) - set(known)
        if unknown:
            raise SceneError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **known)


@dataclass(frozen=True)
class SceneMesh:
    mesh: MeshModel
    role: str
    name: str

    @property
    def index(self) -> SpatialIndex:
        return self.mesh.index


class AnatomicalScene:
    """Role-labeled meshes, the convergent point, and the two entry regions."""

    def __init__(self, meshes: list[SceneMesh], convergent_point,
                 tool_entry_region, camera_entry_region,
                 config: PlanningConfig | None = None):
        self.meshes = list(meshes)
        self.convergent_point = np.asarray(convergent_point, dtype=np.float64).reshape(3)
        self.tool_entry_region = frozenset(int(i) for i in tool_entry_region)
        self.camera_entry_region = frozenset(int(i) for i in camera_entry_region)
        self.config = config or PlanningConfig()

        for sm in self.meshes:
            if sm.role not in VALID_ROLES:
                raise SceneError(f"invalid role {sm.role!r} for mesh {sm.name!r}")
        skins = [sm for sm in self.meshes if sm.role == "skin"]
        if len(skins) != 1:
            raise SceneError(f"scene needs exactly one skin mesh, found {len(skins)}")
        self._skin = skins[0]
        n_tris = len(self._skin.mesh.triangles)
        for label, region in (("tool", self.tool_entry_region),
                              ("camera", self.camera_entry_region)):
            bad = [i for i in region if not (0 <= i < n_tris)]
            if bad:
                raise SceneError(f"{label} entry region references invalid skin triangles {bad[:5]}")
        if self._skin.mesh.closed and not point_in_mesh(self._skin.index, self.convergent_point):
            raise SceneError("convergent point lies outside the skin mesh")

    @property
    def skin(self) -> SceneMesh:
        return self._skin

    @property
    def bony(self) -> list[SceneMesh]:
        return [sm for sm in self.meshes if sm.role in BONY_ROLES]

    def transformed(self, rotation: np.ndarray | None = None,
                    translation=(0.0, 0.0, 0.0)) -> "AnatomicalScene":
        """Rigidly transformed copy; regions keep their triangle indices."""
        meshes = [SceneMesh(sm.mesh.transformed(rotation, translation), sm.role, sm.name)
                  for sm in self.meshes]
        c = self.convergent_point
        if rotation is not None:
            c = np.asarray(rotation, dtype=np.float64) @ c
        c = c + np.asarray(translation, dtype=np.float64)
        return AnatomicalScene(meshes, c, self.tool_entry_region,
                               self.camera_entry_region, self.config)


@dataclass(frozen=True)
class RuleResult:
    rule: str
    passed: bool
    value: float | None
    unit: str
    threshold: str

    def to_dict(self) -> dict:
        v = self.value
        if v is not None and not math.isfinite(v):
            v = None  # infinity has no JSON representation
        return {"id": self.rule, "pass": bool(self.passed),
                "value": None if v is None else float(v),
                "unit": self.unit, "threshold": self.threshold}


@dataclass(frozen=True)
class PlanReport:
    rules: tuple[RuleResult, ...]
    manipulation_angle_deg: float
    in_band: bool
    operable_volume_l: float
    overall_valid: bool

    def rule(self, name: str) -> RuleResult:
        for r in self.rules:
            if r.rule == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "rules": [r.to_dict() for r in self.rules],
            "manipulation_angle_deg": float(self.manipulation_angle_deg),
            "in_band": bool(self.in_band),
            "operable_volume_l": float(self.operable_volume_l),
            "overall_valid": bool(self.overall_valid),
        }


def check_endpoint(p, scene: AnatomicalScene, label: str = "endpoint") -> RuleResult:
    """Endpoint snap: the chosen target must sit on the convergent point."""
    tol = scene.config.snap_tol_mm
    d = float(np.linalg.norm(np.asarray(p, dtype=np.float64) - scene.convergent_point))
    return RuleResult(label, d <= tol, d, "mm", f"<= {tol:g} mm from convergent point")


def project_entry_to_skin(scene: AnatomicalScene, p) -> tuple[np.ndarray, int]:
    """Snap a point to the skin surface; errors when it is more than 1 mm away.

    Points already on the surface (within 1e-6 mm) pass through unchanged so
    that stored plans and interactive submissions evaluate identically.
    """
    p = np.asarray(p, dtype=np.float64).reshape(3)
    dist, tri = closest_triangle(scene.skin.mesh, p)
    if dist > scene.config.skin_snap_mm:
        raise PlacementError(
            f"entry point is {dist:.2f} mm off the skin (limit {scene.config.skin_snap_mm:g} mm)")
    if dist <= 1e-6:
        return p, tri
    snapped = closest_points_on_triangles(p, scene.skin.mesh.triangle_vertices[tri][None])[0]
    return snapped, tri


def _obstruction_count(scene: AnatomicalScene, start, end) -> int:
    seg = Segment(start, end, radius=scene.config.capsule_radius_mm)
    return sum(1 for sm in scene.bony if segment_blocked(sm.index, seg))


def check_trajectory(traj: TrocarTrajectory, scene: AnatomicalScene) -> list[RuleResult]:
    """Reach, entry-region, and bony-obstruction rules for one trocar."""
    cfg = scene.config
    _, tri = project_entry_to_skin(scene, traj.entry)
    length = RuleResult(f"{traj.hand}_length", traj.length_mm <= cfg.reach_mm + 1e-9,
                        traj.length_mm, "mm", f"<= {cfg.reach_mm:g} mm")
    region = RuleResult(f"{traj.hand}_region", tri in scene.tool_entry_region,
                        float(tri), "triangle", "entry triangle in tool region")
    blocked = _obstruction_count(scene, traj.entry, traj.target)
    obstruction = RuleResult(
        f"{traj.hand}_obstruction", blocked == 0, float(blocked), "meshes",
        f"no bony structure within {cfg.capsule_radius_mm:g} mm of path")
    return [length, region, obstruction]


def manipulation_angle(left: TrocarTrajectory, right: TrocarTrajectory,
                       snap_tol_mm: float = 10.0) -> RuleResult:
    """Angle between the two trajectories at their shared target; advisory band.

    Targets may differ by at most twice the endpoint snap tolerance, the
    widest gap two individually snapped endpoints can have.
    """
    gap = float(np.linalg.norm(left.target - right.target))
    if gap > 2.0 * snap_tol_mm:
        raise PlacementError(
            f"trajectories target different points ({gap:.1f} mm apart, "
            f"limit {2.0 * snap_tol_mm:g})")
    ang = angle_between(left.entry - left.target, right.entry - right.target)
    lo, hi = ANGLE_BAND_DEG
    return RuleResult("manipulation_angle", lo - 1e-9 <= ang <= hi + 1e-9, ang, "deg",
                      f"{lo:g} to {hi:g} deg (advisory)")


def camera_skin_entry(cam: CameraPose, scene: AnatomicalScene) -> tuple[np.ndarray, int]:
    """Where the camera tube crosses the skin, walking tip -> handle."""
    hits = scene.skin.index.ray_hits(cam.tip, cam.tube_axis)
    for t, tri in hits:
        if t <= cam.tube_length_mm + 1e-9:
            return cam.tip + cam.tube_axis * t, tri
    raise PlacementError("camera tube does not cross the skin")


def check_camera(cam: CameraPose, scene: AnatomicalScene,
                 tool_cones: tuple[DofCone, DofCone]) -> list[RuleResult]:
    """Aim, obstruction, entry-region, and crowding rules for the endoscope."""
    cfg = scene.config
    _, tri = camera_skin_entry(cam, scene)

    err = aim_error(cam, scene.convergent_point)
    aim = RuleResult("camera_aim", err <= cfg.aim_tol_mm + 1e-9, err, "mm",
                     f"optical axis within {cfg.aim_tol_mm:g} mm of convergent point")

    blocked = _obstruction_count(scene, cam.tip, scene.convergent_point)
    obstruction = RuleResult(
        "camera_obstruction", blocked == 0, float(blocked), "meshes",
        f"no bony structure within {cfg.capsule_radius_mm:g} mm of view path")

    region = RuleResult("camera_region", tri in scene.camera_entry_region,
                        float(tri), "triangle", "entry triangle in camera region")

    samples = cam.tube_points(cfg.crowding_step_mm)
    inside = np.zeros(len(samples), dtype=bool)
    for cone in tool_cones:
        inside |= cone_contains_many(cone, samples)
    crowding = RuleResult(
        "camera_crowding", not inside.any(), float(inside.sum()), "samples",
        f"tube sampled every {cfg.crowding_step_mm:g} mm stays outside tool cones")
    return [aim, obstruction, region, crowding]


def plan_cones(left: TrocarTrajectory, right: TrocarTrajectory, cam: CameraPose,
               scene: AnatomicalScene) -> tuple[DofCone, DofCone, FovCone]:
    cfg = scene.config
    return (dof_cone_of(left, cfg.half_angle_deg, cfg.reach_mm),
            dof_cone_of(right, cfg.half_angle_deg, cfg.reach_mm),
            fov_cone_of(cam, cfg.fov_length_mm))


def _operable_grid(left, right, cam, scene, spacing_mm):
    cones = plan_cones(left, right, cam, scene)
    meshes = [tessellate_cone(c, radial_segments=64) for c in cones]
    # the grid is sized by the cones alone so clipping never shifts their
    # voxelization; the skin may extend past the grid, which fill handles
    grid = build_grid(meshes, spacing_mm)
    ids = list(range(len(meshes)))
    if scene.config.clip_to_skin:
        meshes.append(scene.skin.mesh)
        ids.append(len(ids))
    for i, m in zip(ids, meshes):
        voxelize_surface(grid, m, i)
        fill_interior(grid, m, i)
    return grid, ids


def operable_volume_l(left, right, cam, scene: AnatomicalScene,
                      spacing_mm: float | None = None) -> float:
    grid, ids = _operable_grid(left, right, cam, scene,
                               spacing_mm or scene.config.spacing_mm)
    return overlap_volume(grid, ids)


def operable_overlap_cells(left, right, cam, scene: AnatomicalScene,
                           spacing_mm: float | None = None) -> np.ndarray:
    grid, ids = _operable_grid(left, right, cam, scene,
                               spacing_mm or scene.config.spacing_mm)
    return export_overlap_cells(grid, ids)


def evaluate_plan(left: TrocarTrajectory, right: TrocarTrajectory, cam: CameraPose,
                  scene: AnatomicalScene, spacing_mm: float | None = None) -> PlanReport:
    """Run every rule, voxelize the three cones on one grid, report the overlap."""
    rules = check_trajectory(left, scene) + check_trajectory(right, scene)
    ang = manipulation_angle(left, right, scene.config.snap_tol_mm)
    cones = plan_cones(left, right, cam, scene)
    rules += check_camera(cam, scene, (cones[0], cones[1]))
    volume = operable_volume_l(left, right, cam, scene, spacing_mm)
    return PlanReport(
        rules=tuple(rules),
        manipulation_angle_deg=ang.value,
        in_band=ang.passed,
        operable_volume_l=volume,
        overall_valid=all(r.passed for r in rules),
    )
