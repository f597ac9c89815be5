from __future__ import annotations

import numpy as np
import pytest

from trocarplan.synthetic import box_mesh, sphere_mesh

ACCEPTANCE_LABELS = {
    "test_voxel_pipeline_accuracy": "voxel pipeline accuracy (sphere 10%/5%, <5s)",
    "test_scanline_fill_equals_parity_oracle": "scan-line fill == parity oracle (10 meshes)",
    "test_overlap_semantics": "overlap semantics (identical/disjoint/half-shift/monotone)",
    "test_rule_thresholds_exact_boundaries": "rule thresholds at exact boundaries",
    "test_end_to_end_fixture": "end-to-end thorax fixture (valid, 0.65-1.37 L, <10s)",
    "test_bvh_matches_exhaustive_on_thousand_rays": "BVH == exhaustive rays (1000 rays)",
    "test_crowding_sampling_matches_dense": "crowding 5mm == dense 0.5mm (100 pairs)",
    "test_auto_plan_optimality_and_determinism": "auto-plan optimal + deterministic (5 runs)",
    "test_rigid_invariance": "rigid invariance (rules + volume within 2 voxels)",
    "test_session_metrics_by_deterministic_replay": "session metrics via event-log replay",
}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    if "test_acceptance" in report.nodeid and name in ACCEPTANCE_LABELS:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {ACCEPTANCE_LABELS[name]}: {verdict}", flush=True)


@pytest.fixture
def cube100():
    return box_mesh((0.0, 0.0, 0.0), (100.0, 100.0, 100.0), name="cube100")


@pytest.fixture
def unit_sphere_100():
    return sphere_mesh((0.0, 0.0, 0.0), 100.0, n_theta=48, n_phi=24, name="sphere100")


def assert_close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
