// A scriptable stand-in for the planning engine's HTTP API. It mirrors the
// wire schema and the session state machine; rule outcomes are produced
// server-side here exactly as the real engine would, with injectable
// verdict hooks so tests can script failures.

import type { Transport } from "../src/api.js";
import type {
  OverlapWire,
  PlanReportWire,
  RuleResult,
  SceneWire,
  SessionStateName,
  SubmissionWire,
  Vec3,
} from "../src/types.js";

export const SPACING_MM = 15;

export function sceneFixture(): SceneWire {
  return {
    meshes: [
      { name: "skin", role: "skin", vertices_mm: [0, 0, 0, 1, 0, 0, 0, 1, 0], triangles: [0, 1, 2] },
      { name: "ribs", role: "rib", vertices_mm: [0, 0, 0, 1, 0, 0, 0, 0, 1], triangles: [0, 1, 2] },
    ],
    convergent_point_mm: [45, 15, 80],
    tool_entry_region: [1, 2, 3],
    camera_entry_region: [7, 8],
    defaults: {
      spacing_mm: SPACING_MM,
      reach_mm: 280,
      half_angle_deg: 20,
      fov_deg: 60,
      tilt_deg: 30,
      aim_tol_mm: 5,
      snap_tol_mm: 10,
      capsule_radius_mm: 5,
      tube_length_mm: 300,
      camera_depth_mm: 80,
    },
    engine_version: "0.1.0",
  };
}

function rule(id: string, pass: boolean, value: number | null, unit: string): RuleResult {
  return { id, pass, value, unit, threshold: `${id} threshold` };
}

function dist(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

export type Verdict = (submission: SubmissionWire) => RuleResult[];

export class MockServer {
  state: SessionStateName = "ToolEndpoints";
  toolAdjustments = 0;
  cameraAdjustments = 0;
  readonly scene = sceneFixture();
  readonly log: { method: string; path: string; body?: unknown }[] = [];

  /** Scripted verdicts; shift()ed per call, falling back to geometry/all-pass. */
  entriesVerdicts: RuleResult[][] = [];
  cameraVerdicts: RuleResult[][] = [];

  reportFixture: PlanReportWire = {
    rules: [rule("left_length", true, 235.3, "mm")],
    manipulation_angle_deg: 47.6,
    in_band: true,
    operable_volume_l: (303 * SPACING_MM ** 3) / 1e6,
    overall_valid: true,
  };

  overlapFixture(): OverlapWire {
    const cells: Vec3[] = [];
    for (let i = 0; i < 303; i++) cells.push([i * SPACING_MM, 0, 0]);
    return {
      spacing_mm: SPACING_MM,
      cell_count: 303,
      volume_l: (303 * SPACING_MM ** 3) / 1e6,
      cells_mm: cells,
    };
  }

  private endpointRules(sub: Extract<SubmissionWire, { type: "endpoints" }>): RuleResult[] {
    const c = this.scene.convergent_point_mm;
    const snap = this.scene.defaults.snap_tol_mm as number;
    const dl = dist(sub.left_mm, c);
    const dr = dist(sub.right_mm, c);
    return [
      rule("left_endpoint", dl <= snap, dl, "mm"),
      rule("right_endpoint", dr <= snap, dr, "mm"),
    ];
  }

  private entryRules(sub: Extract<SubmissionWire, { type: "entries" }>): RuleResult[] {
    const scripted = this.entriesVerdicts.shift();
    if (scripted) return scripted;
    const c = this.scene.convergent_point_mm;
    return [
      rule("left_length", true, dist(sub.left_mm, c), "mm"),
      rule("left_region", true, 1, "triangle"),
      rule("left_obstruction", true, 0, "meshes"),
      rule("right_length", true, dist(sub.right_mm, c), "mm"),
      rule("right_region", true, 2, "triangle"),
      rule("right_obstruction", true, 0, "meshes"),
      rule("manipulation_angle", true, 47.6, "deg"),
    ];
  }

  private cameraRules(): RuleResult[] {
    const scripted = this.cameraVerdicts.shift();
    if (scripted) return scripted;
    return [
      rule("camera_aim", true, 0, "mm"),
      rule("camera_obstruction", true, 0, "meshes"),
      rule("camera_region", true, 7, "triangle"),
      rule("camera_crowding", true, 0, "samples"),
    ];
  }

  private expectedType(): SubmissionWire["type"] | null {
    if (this.state === "ToolEndpoints") return "endpoints";
    if (this.state === "ToolEntries") return "entries";
    if (this.state === "CameraPlace") return "camera";
    return null;
  }

  private rulesFor(sub: SubmissionWire): RuleResult[] {
    if (sub.type === "endpoints") return this.endpointRules(sub);
    if (sub.type === "entries") return this.entryRules(sub);
    return this.cameraRules();
  }

  transport(): Transport {
    return async (method, path, body) => {
      this.log.push({ method, path, body });
      if (method === "POST" && path === "/sessions") {
        this.state = "ToolEndpoints";
        return { status: 201, body: { session_id: "mock-1", state: this.state } };
      }
      if (method === "GET" && path === "/scene") {
        return { status: 200, body: this.scene };
      }
      if (path.endsWith("/validate") || path.endsWith("/submit")) {
        const sub = (body as { submission: SubmissionWire }).submission;
        if (sub.type !== this.expectedType()) {
          return { status: 409, body: { detail: `cannot submit ${sub.type} in ${this.state}` } };
        }
        const rules = this.rulesFor(sub);
        const hard = rules.filter((r) => r.id !== "manipulation_angle");
        const valid = hard.every((r) => r.pass);
        if (path.endsWith("/validate")) {
          return { status: 200, body: { state: this.state, rules, valid } };
        }
        if (valid) {
          this.state =
            sub.type === "endpoints" ? "ToolEntries"
            : sub.type === "entries" ? "ToolConfirm"
            : "CameraConfirm";
        }
        return {
          status: 200,
          body: { accepted: valid, state: this.state, rules, valid },
        };
      }
      if (path.endsWith("/confirm")) {
        if (this.state === "ToolConfirm") this.state = "CameraPlace";
        else if (this.state === "CameraConfirm") this.state = "Summary";
        else return { status: 409, body: { detail: `cannot confirm in ${this.state}` } };
        return { status: 200, body: { state: this.state } };
      }
      if (path.endsWith("/repeat")) {
        if (this.state === "ToolConfirm") {
          this.state = "ToolEndpoints";
          this.toolAdjustments += 1;
        } else if (this.state === "CameraConfirm") {
          this.state = "CameraPlace";
          this.cameraAdjustments += 1;
        } else return { status: 409, body: { detail: `cannot repeat in ${this.state}` } };
        return { status: 200, body: { state: this.state } };
      }
      if (path.endsWith("/report")) {
        if (this.state !== "Summary") return { status: 409, body: { detail: "not evaluated" } };
        return { status: 200, body: this.reportFixture };
      }
      if (path.endsWith("/overlap")) {
        if (this.state !== "Summary") return { status: 409, body: { detail: "not evaluated" } };
        return { status: 200, body: this.overlapFixture() };
      }
      if (path.endsWith("/metrics")) {
        return {
          status: 200,
          body: {
            tool_task_minutes: 0.5,
            camera_task_minutes: 0.4,
            tool_adjustments: this.toolAdjustments,
            camera_adjustments: this.cameraAdjustments,
            left_distance_cm: 23.5,
            right_distance_cm: 16.4,
            manipulation_angle_deg: 47.6,
            operable_volume_l: this.reportFixture.operable_volume_l,
          },
        };
      }
      return { status: 404, body: { detail: `no route ${method} ${path}` } };
    };
  }
}

export function failingRules(ids: string[], failing: string[]): RuleResult[] {
  return ids.map((id) => rule(id, !failing.includes(id), 1, "mm"));
}
