// Wire types mirroring the planning engine's HTTP JSON API.
// Lengths are millimeters, volumes liters, angles degrees.

export type Vec3 = [number, number, number];

export interface RuleResult {
  id: string;
  pass: boolean;
  value: number | null;
  unit: string;
  threshold: string;
}

export interface SceneMeshWire {
  name: string;
  role: string;
  vertices_mm: number[];   // flat xyz triples
  triangles: number[];     // flat index triples
}

export interface SceneDefaults {
  spacing_mm: number;
  reach_mm: number;
  half_angle_deg: number;
  fov_deg: number;
  tilt_deg: number;
  aim_tol_mm: number;
  snap_tol_mm: number;
  capsule_radius_mm: number;
  tube_length_mm: number;
  camera_depth_mm: number;
  [key: string]: number | boolean;
}

export interface SceneWire {
  meshes: SceneMeshWire[];
  convergent_point_mm: Vec3;
  tool_entry_region: number[];
  camera_entry_region: number[];
  defaults: SceneDefaults;
  engine_version: string;
}

export type SessionStateName =
  | "Setup"
  | "ToolEndpoints"
  | "ToolEntries"
  | "ToolConfirm"
  | "CameraPlace"
  | "CameraConfirm"
  | "Summary";

export interface CameraPoseWire {
  tip_mm: Vec3;
  tube_axis: Vec3;
  tube_length_mm: number;
  tilt_deg: number;
  roll_deg: number;
  fov_deg: number;
}

export type SubmissionWire =
  | { type: "endpoints"; left_mm: Vec3; right_mm: Vec3 }
  | { type: "entries"; left_mm: Vec3; right_mm: Vec3 }
  | ({ type: "camera" } & CameraPoseWire);

export interface RuleFeedback {
  state: SessionStateName;
  rules: RuleResult[];
  valid: boolean;
}

export interface SubmitResponse extends RuleFeedback {
  accepted: boolean;
}

export interface FlowResponse {
  state: SessionStateName;
}

export interface PlanReportWire {
  rules: RuleResult[];
  manipulation_angle_deg: number;
  in_band: boolean;
  operable_volume_l: number;
  overall_valid: boolean;
}

export interface OverlapWire {
  spacing_mm: number;
  cell_count: number;
  volume_l: number;
  cells_mm: Vec3[];
}

export interface MetricsWire {
  tool_task_minutes: number;
  camera_task_minutes: number;
  tool_adjustments: number;
  camera_adjustments: number;
  left_distance_cm: number | null;
  right_distance_cm: number | null;
  manipulation_angle_deg: number | null;
  operable_volume_l: number | null;
}
