"""Trocar placement planning engine for video-assisted thoracic surgery."""

from .mesh import (
    MeshModel,
    MeshError,
    ObjFormatError,
    OpenMeshError,
    Ray,
    Segment,
    SpatialIndex,
    is_closed,
    load_obj,
    save_obj,
    point_in_mesh,
    ray_intersect,
    segment_blocked,
)
from .geometry import (
    CameraPose,
    DofCone,
    FovCone,
    GeometryError,
    TrocarTrajectory,
    aim_error,
    aimed_camera_pose,
    angle_between,
    cone_contains,
    dof_cone_of,
    fov_cone_of,
    make_trajectory,
    tessellate_cone,
)
from .voxel import (
    VoxelError,
    VoxelGrid,
    build_grid,
    export_overlap_cells,
    fill_interior,
    overlap_volume,
    voxelize_surface,
)

__version__ = "0.1.0"

from .rules import (  # noqa: E402  (rules imports voxel, so it must follow)
    AnatomicalScene,
    PlacementError,
    PlanningConfig,
    PlanReport,
    RuleResult,
    SceneError,
    SceneMesh,
    check_camera,
    check_endpoint,
    check_trajectory,
    evaluate_plan,
    manipulation_angle,
)
from .session import Session, SessionMetrics, SessionState, advance  # noqa: E402
from .autoplan import CandidateSet, NoFeasiblePlanError, auto_plan, candidate_set  # noqa: E402
