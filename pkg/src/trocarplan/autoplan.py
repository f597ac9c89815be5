"""Exhaustive search for the rule-feasible plan with the largest operable volume.

Candidates are centroids of the entry-region triangles (optionally
subsampled by a stride). Tool endpoints are pinned to the convergent point;
the camera is posed through each candidate entry with its optical axis
aimed at the convergent point, at a discrete set of roll angles. Feasible
means every hard rule passes and the manipulation angle sits in the
advisory band; ties break on the lexicographic candidate index, so the
search is deterministic.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .geometry import (
    CameraPose,
    DofCone,
    GeometryError,
    TrocarTrajectory,
    aimed_camera_pose,
    dof_cone_of,
    make_trajectory,
)
from .rules import (
    AnatomicalScene,
    PlacementError,
    PlanReport,
    check_camera,
    check_trajectory,
    evaluate_plan,
    manipulation_angle,
)

DEFAULT_ROLLS_DEG = (0.0, 90.0, 180.0, 270.0)


class NoFeasiblePlanError(Exception):
    """No candidate combination satisfied the rules; carries a failure histogram."""

    def __init__(self, failures: Counter, candidates_tried: int):
        self.failures = dict(sorted(failures.items()))
        self.candidates_tried = candidates_tried
        detail = ", ".join(f"{k}: {v}" for k, v in self.failures.items()) or "no candidates"
        super().__init__(f"no feasible plan among {candidates_tried} combinations ({detail})")


@dataclass(frozen=True)
class CandidateSet:
    """Entry candidates: triangle centroids of the two skin regions."""

    tool_points: np.ndarray        # (k, 3)
    tool_triangles: np.ndarray     # (k,)
    camera_points: np.ndarray      # (j, 3)
    camera_triangles: np.ndarray   # (j,)
    rolls_deg: tuple[float, ...] = DEFAULT_ROLLS_DEG


def candidate_set(scene: AnatomicalScene, stride: int = 1,
                  rolls_deg: tuple[float, ...] = DEFAULT_ROLLS_DEG) -> CandidateSet:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    tv = scene.skin.mesh.triangle_vertices

    def centroids(region):
        tris = np.asarray(sorted(region), dtype=np.int64)[::stride]
        return tv[tris].mean(axis=1), tris

    tool_pts, tool_tris = centroids(scene.tool_entry_region)
    cam_pts, cam_tris = centroids(scene.camera_entry_region)
    return CandidateSet(tool_pts, tool_tris, cam_pts, cam_tris, tuple(rolls_deg))


@dataclass(frozen=True)
class AutoPlanResult:
    left: TrocarTrajectory
    right: TrocarTrajectory
    camera: CameraPose
    report: PlanReport
    choice: tuple[int, int, int, int]   # (left, right, camera, roll) candidate indices


def _tool_prechecks(scene, points):
    """Per-candidate trajectory rules, computed once per entry point."""
    out = []
    for p in points:
        try:
            traj = make_trajectory(p, scene.convergent_point, "left")
            results = check_trajectory(traj, scene)
        except (PlacementError, GeometryError):
            out.append((None, ["projection"]))
            continue
        failed = [r.rule.split("_", 1)[1] for r in results if not r.passed]
        out.append((traj, failed))
    return out


def _camera_prechecks(scene, points, rolls):
    """Aim/obstruction/region rules per (entry, roll); crowding is pair-dependent."""
    # crowding needs tool cones, so prechecks run against a negligible dummy
    # pair and the crowding outcome is recomputed per triple later
    dummy = DofCone(apex=scene.convergent_point, axis=(0.0, 0.0, 1.0),
                    half_angle_deg=1e-6, length_mm=1e-6)
    out = {}
    for ci, p in enumerate(points):
        for ri, roll in enumerate(rolls):
            try:
                pose = aimed_camera_pose(
                    p, scene.convergent_point, roll_deg=roll,
                    depth_mm=scene.config.camera_depth_mm,
                    tilt_deg=scene.config.tilt_deg,
                    tube_length_mm=scene.config.tube_length_mm,
                    fov_deg=scene.config.fov_deg)
                results = check_camera(pose, scene, (dummy, dummy))
            except (PlacementError, GeometryError):
                out[(ci, ri)] = (None, ["camera_projection"])
                continue
            failed = [r.rule for r in results[:3] if not r.passed]
            out[(ci, ri)] = (pose, failed)
    return out


def auto_plan(scene: AnatomicalScene, candidates: CandidateSet,
              spacing_mm: float | None = None) -> AutoPlanResult:
    """Deterministic exhaustive search maximizing the operable volume."""
    cfg = scene.config
    tool = _tool_prechecks(scene, candidates.tool_points)
    camera = _camera_prechecks(scene, candidates.camera_points, candidates.rolls_deg)

    failures: Counter = Counter()
    tried = 0
    best: AutoPlanResult | None = None
    band_lo, band_hi = 45.0, 75.0

    for li, (ltraj, lfail) in enumerate(tool):
        for ri_, (rtraj, rfail) in enumerate(tool):
            if li == ri_:
                continue
            pair_fail = [f"left_{f}" for f in lfail] + [f"right_{f}" for f in rfail]
            angle_ok = False
            if ltraj is not None and rtraj is not None:
                ang = manipulation_angle(ltraj, rtraj, cfg.snap_tol_mm)
                angle_ok = band_lo <= ang.value <= band_hi
                if not angle_ok:
                    pair_fail.append("manipulation_angle")
            left = ltraj
            right = None if rtraj is None else make_trajectory(rtraj.entry, rtraj.target, "right")
            for ci in range(len(candidates.camera_points)):
                for ri in range(len(candidates.rolls_deg)):
                    tried += 1
                    pose, cfail = camera[(ci, ri)]
                    combo_fail = pair_fail + cfail
                    if combo_fail or pose is None:
                        failures.update(combo_fail)
                        continue
                    cones = (dof_cone_of(left, cfg.half_angle_deg, cfg.reach_mm),
                             dof_cone_of(right, cfg.half_angle_deg, cfg.reach_mm))
                    crowding = check_camera(pose, scene, cones)[3]
                    if not crowding.passed:
                        failures.update(["camera_crowding"])
                        continue
                    report = evaluate_plan(left, right, pose, scene, spacing_mm)
                    if not report.overall_valid:
                        failures.update(r.rule for r in report.rules if not r.passed)
                        continue
                    if best is None or report.operable_volume_l > best.report.operable_volume_l:
                        best = AutoPlanResult(left, right, pose, report, (li, ri_, ci, ri))
    if best is None:
        raise NoFeasiblePlanError(failures, tried)
    return best
