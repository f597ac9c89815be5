"""Command line tools: validate a plan, search for one, serve the API, export voxels.

Exit codes: 0 valid plan, 1 rule failure, 2 malformed input, 3 no feasible
plan (auto-plan only).
"""
from __future__ import annotations

import csv
import json
import sys
from dataclasses import replace

import click

from .autoplan import NoFeasiblePlanError, auto_plan, candidate_set
from .manifest import (
    ENGINE_VERSION,
    ManifestError,
    load_manifest,
    load_plan,
    placements_from_plan,
    plan_to_dict,
    report_json,
    resolve_input_path,
)
from .mesh import MeshError
from .rules import PlacementError, evaluate_plan, operable_overlap_cells
from .voxel import MM3_PER_LITER


def _fail_malformed(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load_scene(manifest_path, spacing, capsule_radius):
    try:
        scene = load_manifest(resolve_input_path(manifest_path))
    except (ManifestError, MeshError, FileNotFoundError, OSError) as exc:
        _fail_malformed(str(exc))
    overrides = {}
    if spacing is not None:
        overrides["spacing_mm"] = spacing
    if capsule_radius is not None:
        overrides["capsule_radius_mm"] = capsule_radius
    if overrides:
        scene.config = replace(scene.config, **overrides)
    return scene


@click.group()
def main():
    """Trocar placement planning engine."""


@main.command()
@click.argument("manifest_path")
@click.argument("plan_path")
@click.option("--spacing", type=float, default=None, help="Voxel spacing in mm.")
@click.option("--capsule-radius", type=float, default=None,
              help="Obstruction capsule radius in mm.")
def validate(manifest_path, plan_path, spacing, capsule_radius):
    """Evaluate a stored plan; exit 0 only when every rule passes."""
    scene = _load_scene(manifest_path, spacing, capsule_radius)
    try:
        plan = load_plan(resolve_input_path(plan_path))
        left, right, cam = placements_from_plan(plan, scene)
        report = evaluate_plan(left, right, cam, scene)
    except (ManifestError, FileNotFoundError, OSError) as exc:
        _fail_malformed(str(exc))
    except PlacementError as exc:
        _fail_malformed(f"placements cannot be checked: {exc}")
    stale = plan.get("engine_version")
    if stale is not None and stale != ENGINE_VERSION:
        click.echo(f"warning: plan was frozen by engine {stale}, this is {ENGINE_VERSION}; "
                   "the stored report may be stale", err=True)
    click.echo(report_json(report))
    sys.exit(0 if report.overall_valid else 1)


@main.command("auto-plan")
@click.argument("manifest_path")
@click.option("--spacing", type=float, default=None, help="Voxel spacing in mm.")
@click.option("--stride", type=int, default=1, show_default=True,
              help="Keep every n-th entry-region candidate.")
@click.option("--capsule-radius", type=float, default=None,
              help="Obstruction capsule radius in mm.")
def auto_plan_cmd(manifest_path, spacing, stride, capsule_radius):
    """Search entry candidates for the plan with the largest operable volume."""
    scene = _load_scene(manifest_path, spacing, capsule_radius)
    try:
        candidates = candidate_set(scene, stride=stride)
    except ValueError as exc:
        _fail_malformed(str(exc))
    try:
        result = auto_plan(scene, candidates, spacing)
    except NoFeasiblePlanError as exc:
        click.echo(f"error: {exc}", err=True)
        click.echo(json.dumps({"failures": exc.failures,
                               "candidates_tried": exc.candidates_tried}))
        sys.exit(3)
    out = plan_to_dict(result.left, result.right, result.camera, result.report,
                       manifest=str(manifest_path))
    click.echo(json.dumps(out, sort_keys=True, separators=(",", ":")))


@main.command()
@click.argument("manifest_path")
@click.option("--port", type=int, default=8008, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(manifest_path, port, host):
    """Serve the planning API for the browser UI."""
    import uvicorn

    from .api import create_app

    scene = _load_scene(manifest_path, None, None)
    uvicorn.run(create_app(scene), host=host, port=port)


@main.command("voxel-export")
@click.argument("manifest_path")
@click.argument("plan_path")
@click.option("--spacing", type=float, default=None, help="Voxel spacing in mm.")
@click.option("--csv", "csv_path", default="overlap_cells.csv", show_default=True,
              help="Where to write the overlap cell centers.")
def voxel_export(manifest_path, plan_path, spacing, csv_path):
    """Write overlap cell centers as CSV and print a JSON summary."""
    scene = _load_scene(manifest_path, spacing, None)
    try:
        plan = load_plan(resolve_input_path(plan_path))
        left, right, cam = placements_from_plan(plan, scene)
    except (ManifestError, FileNotFoundError, OSError) as exc:
        _fail_malformed(str(exc))
    cells = operable_overlap_cells(left, right, cam, scene)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_mm", "y_mm", "z_mm"])
        writer.writerows(cells.tolist())
    s = scene.config.spacing_mm
    click.echo(json.dumps({
        "spacing_mm": s,
        "cell_count": len(cells),
        "volume_l": len(cells) * s ** 3 / MM3_PER_LITER,
    }, sort_keys=True))


if __name__ == "__main__":
    main()
