"""Scene manifests, plan files, and the canonical report serialization.

Everything persists as JSON so fixtures stay human-diffable. Mesh paths in a
manifest resolve relative to the manifest file. The `TROCARPLAN_FIXTURES`
environment variable supplies a fallback root for resolving input paths
handed to the CLI.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__ as ENGINE_VERSION
from .geometry import CameraPose, TrocarTrajectory, make_trajectory
from .mesh import load_obj
from .rules import AnatomicalScene, PlanningConfig, PlanReport, RuleResult, SceneMesh, VALID_ROLES

FIXTURE_ROOT_ENV = "TROCARPLAN_FIXTURES"


class ManifestError(ValueError):
    pass


def resolve_input_path(path) -> Path:
    """Resolve a CLI input path, falling back to the fixture-root env var."""
    p = Path(path)
    if p.exists():
        return p
    root = os.environ.get(FIXTURE_ROOT_ENV)
    if root:
        candidate = Path(root) / p
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"input file not found: {p}")


def load_manifest(path) -> AnatomicalScene:
    """Load a scene manifest and its meshes into an AnatomicalScene."""
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{p}: invalid JSON ({exc})") from None
    return scene_from_manifest_dict(data, base_dir=p.parent)


def scene_from_manifest_dict(data: dict, base_dir: Path) -> AnatomicalScene:
    for key in ("meshes", "convergent_point_mm", "tool_entry_region", "camera_entry_region"):
        if key not in data:
            raise ManifestError(f"manifest missing required key {key!r}")
    config = PlanningConfig().merged(data.get("defaults", {}))
    meshes = []
    for entry in data["meshes"]:
        role = entry.get("role")
        if role not in VALID_ROLES:
            raise ManifestError(f"invalid mesh role {role!r}")
        mesh_path = Path(entry["path"])
        if not mesh_path.is_absolute():
            mesh_path = base_dir / mesh_path
        if not mesh_path.exists():
            raise ManifestError(f"mesh file not found: {mesh_path}")
        name = entry.get("name", mesh_path.stem)
        meshes.append(SceneMesh(load_obj(mesh_path, name=name), role, name))
    try:
        return AnatomicalScene(
            meshes,
            convergent_point=data["convergent_point_mm"],
            tool_entry_region=data["tool_entry_region"],
            camera_entry_region=data["camera_entry_region"],
            config=config,
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from None


def config_dict(config: PlanningConfig) -> dict:
    return asdict(config)


# -- plan files -----------------------------------------------------------------

def plan_to_dict(left: TrocarTrajectory, right: TrocarTrajectory, cam: CameraPose,
                 report: PlanReport | None = None, manifest: str | None = None) -> dict:
    out = {
        "engine_version": ENGINE_VERSION,
        "left": {"entry_mm": left.entry.tolist(), "target_mm": left.target.tolist()},
        "right": {"entry_mm": right.entry.tolist(), "target_mm": right.target.tolist()},
        "camera": {
            "tip_mm": cam.tip.tolist(),
            "tube_axis": cam.tube_axis.tolist(),
            "tube_length_mm": cam.tube_length_mm,
            "tilt_deg": cam.tilt_deg,
            "roll_deg": cam.roll_deg,
            "fov_deg": cam.fov_deg,
        },
    }
    if manifest is not None:
        out["manifest"] = manifest
    if report is not None:
        out["report"] = report.to_dict()
    return out


def load_plan(path) -> dict:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{p}: invalid JSON ({exc})") from None
    for key in ("left", "right", "camera"):
        if key not in data:
            raise ManifestError(f"plan file missing required key {key!r}")
    return data


def placements_from_plan(data: dict, scene: AnatomicalScene
                         ) -> tuple[TrocarTrajectory, TrocarTrajectory, CameraPose]:
    cfg = scene.config
    try:
        left = make_trajectory(data["left"]["entry_mm"], data["left"]["target_mm"], "left")
        right = make_trajectory(data["right"]["entry_mm"], data["right"]["target_mm"], "right")
        c = data["camera"]
        cam = CameraPose(
            tip=np.asarray(c["tip_mm"], dtype=np.float64),
            tube_axis=np.asarray(c["tube_axis"], dtype=np.float64),
            tube_length_mm=float(c.get("tube_length_mm", cfg.tube_length_mm)),
            tilt_deg=float(c.get("tilt_deg", cfg.tilt_deg)),
            roll_deg=float(c.get("roll_deg", 0.0)),
            fov_deg=float(c.get("fov_deg", cfg.fov_deg)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"malformed plan file: {exc}") from None
    return left, right, cam


# -- canonical report bytes ------------------------------------------------------

def report_json(report: PlanReport) -> str:
    """Canonical PlanReport JSON; the CLI and the API emit this same string."""
    return json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":"))


def results_json_list(results: list[RuleResult]) -> list[dict]:
    return [r.to_dict() for r in results]
