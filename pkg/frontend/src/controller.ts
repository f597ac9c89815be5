// Planner controller: owns the task flow, the debounced live-validation
// channel, and every handle's color state. Colors are never decided locally;
// each one is copied from a fetched server RuleResult set, and the trace log
// records which API exchange justified each change.

import { ApiClient, ApiError } from "./api.js";
import { colorFromRules, type HandleColor } from "./colors.js";
import type {
  CameraPoseWire,
  PlanReportWire,
  RuleFeedback,
  RuleResult,
  SessionStateName,
  SubmissionWire,
  Vec3,
} from "./types.js";
import { voxelRenderData, type VoxelRenderData } from "./voxels.js";

export type Task =
  | "tool-endpoints"
  | "tool-entries"
  | "tool-confirm"
  | "camera-place"
  | "camera-confirm"
  | "summary";

export type ViewPreset = "anterior" | "posterior";

export type HandleId =
  | "leftEndpoint"
  | "rightEndpoint"
  | "leftEntry"
  | "rightEntry"
  | "camera";

export interface HandleState {
  color: HandleColor;
  rules: RuleResult[];
  /** Sequence number of the API exchange the color came from; null only for
   *  neutral resets at task boundaries. */
  responseSeq: number | null;
}

export interface ColorChange {
  handle: HandleId;
  color: HandleColor;
  responseSeq: number | null;
}

export interface Readouts {
  leftLengthMm: number | null;
  rightLengthMm: number | null;
  manipulationAngleDeg: number | null;
  angleInBand: boolean | null;
}

const TASK_OF_STATE: Record<SessionStateName, Task> = {
  Setup: "tool-endpoints",
  ToolEndpoints: "tool-endpoints",
  ToolEntries: "tool-entries",
  ToolConfirm: "tool-confirm",
  CameraPlace: "camera-place",
  CameraConfirm: "camera-confirm",
  Summary: "summary",
};

function handleOfRule(ruleId: string): HandleId | null {
  if (ruleId === "left_endpoint") return "leftEndpoint";
  if (ruleId === "right_endpoint") return "rightEndpoint";
  if (ruleId.startsWith("left_")) return "leftEntry";
  if (ruleId.startsWith("right_")) return "rightEntry";
  if (ruleId.startsWith("camera_")) return "camera";
  return null; // manipulation_angle: advisory readout, never a handle color
}

const DEBOUNCE_MS = 100; // live validation capped at 10 Hz

export class PlannerController {
  task: Task = "tool-endpoints";
  sessionId: string | null = null;
  handles: Record<HandleId, HandleState> = PlannerController.neutralHandles();
  readouts: Readouts = {
    leftLengthMm: null,
    rightLengthMm: null,
    manipulationAngleDeg: null,
    angleInBand: null,
  };
  report: PlanReportWire | null = null;
  voxels: VoxelRenderData | null = null;
  lastError: string | null = null;

  /** Every color assignment, in order, with the exchange that justified it. */
  readonly colorTrace: ColorChange[] = [];

  private listeners: (() => void)[] = [];
  private cooldown = false;
  private pendingPreview: SubmissionWire | null = null;
  private previewGeneration = 0;

  constructor(readonly client: ApiClient) {}

  private static neutralHandles(): Record<HandleId, HandleState> {
    const neutral = (): HandleState => ({ color: "neutral", rules: [], responseSeq: null });
    return {
      leftEndpoint: neutral(),
      rightEndpoint: neutral(),
      leftEntry: neutral(),
      rightEntry: neutral(),
      camera: neutral(),
    };
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  viewPreset(): ViewPreset {
    return this.task.startsWith("tool") ? "anterior" : "posterior";
  }

  async start(): Promise<void> {
    this.sessionId = await this.client.createSession();
    this.task = "tool-endpoints";
    this.notify();
  }

  // -- live validation (drag feedback) ---------------------------------------

  /** Queue a drag state for validation; at most one request per 100 ms and
   *  only the latest queued payload is ever sent (latest-wins). */
  preview(submission: SubmissionWire): void {
    this.pendingPreview = submission;
    if (!this.cooldown) {
      void this.firePreview();
    }
  }

  private async firePreview(): Promise<void> {
    const payload = this.pendingPreview;
    if (payload === null || this.sessionId === null) return;
    this.pendingPreview = null;
    this.cooldown = true;
    setTimeout(() => {
      this.cooldown = false;
      if (this.pendingPreview !== null) void this.firePreview();
    }, DEBOUNCE_MS);

    const generation = ++this.previewGeneration;
    try {
      const { seq, data } = await this.client.validate(this.sessionId, payload);
      if (generation !== this.previewGeneration) return; // a newer preview superseded this one
      this.applyRules(data.rules, seq);
    } catch (err) {
      if (generation !== this.previewGeneration) return;
      this.lastError = err instanceof ApiError ? err.detail : String(err);
      this.notify();
    }
  }

  // -- committed submissions ---------------------------------------------------

  async submit(submission: SubmissionWire): Promise<boolean> {
    if (this.sessionId === null) throw new Error("session not started");
    this.lastError = null;
    let feedback: RuleFeedback & { accepted?: boolean };
    let seq: number;
    try {
      ({ seq, data: feedback } = await this.client.submit(this.sessionId, submission));
    } catch (err) {
      // 409/422: surface as a toast, change nothing
      this.lastError = err instanceof ApiError ? err.detail : String(err);
      this.notify();
      return false;
    }
    this.applyRules(feedback.rules, seq);
    if (feedback.accepted) {
      this.task = TASK_OF_STATE[feedback.state];
    }
    this.notify();
    return feedback.accepted === true;
  }

  submitEndpoints(leftMm: Vec3, rightMm: Vec3): Promise<boolean> {
    return this.submit({ type: "endpoints", left_mm: leftMm, right_mm: rightMm });
  }

  submitEntries(leftMm: Vec3, rightMm: Vec3): Promise<boolean> {
    return this.submit({ type: "entries", left_mm: leftMm, right_mm: rightMm });
  }

  submitCamera(pose: CameraPoseWire): Promise<boolean> {
    return this.submit({ type: "camera", ...pose });
  }

  async confirmTask(): Promise<void> {
    if (this.sessionId === null) throw new Error("session not started");
    const { data } = await this.client.confirm(this.sessionId);
    this.task = TASK_OF_STATE[data.state];
    if (this.task === "summary") {
      await this.loadSummary();
    }
    this.notify();
  }

  async repeatTask(): Promise<void> {
    if (this.sessionId === null) throw new Error("session not started");
    const { data } = await this.client.repeat(this.sessionId);
    this.task = TASK_OF_STATE[data.state];
    const toReset: HandleId[] =
      this.task === "tool-endpoints"
        ? ["leftEndpoint", "rightEndpoint", "leftEntry", "rightEntry"]
        : ["camera"];
    for (const handle of toReset) {
      this.setHandle(handle, "neutral", [], null);
    }
    this.readouts = {
      leftLengthMm: null,
      rightLengthMm: null,
      manipulationAngleDeg: null,
      angleInBand: null,
    };
    this.notify();
  }

  private async loadSummary(): Promise<void> {
    if (this.sessionId === null) return;
    const { data: report } = await this.client.report(this.sessionId);
    const { data: overlap } = await this.client.overlap(this.sessionId);
    this.report = report;
    this.voxels = voxelRenderData(overlap);
  }

  // -- color state ---------------------------------------------------------------

  private applyRules(rules: RuleResult[], responseSeq: number): void {
    const byHandle = new Map<HandleId, RuleResult[]>();
    for (const rule of rules) {
      if (rule.id === "manipulation_angle") {
        this.readouts.manipulationAngleDeg = rule.value;
        this.readouts.angleInBand = rule.pass;
        continue;
      }
      if (rule.id === "left_length") this.readouts.leftLengthMm = rule.value;
      if (rule.id === "right_length") this.readouts.rightLengthMm = rule.value;
      const handle = handleOfRule(rule.id);
      if (handle === null) continue;
      const bucket = byHandle.get(handle) ?? [];
      bucket.push(rule);
      byHandle.set(handle, bucket);
    }
    for (const [handle, handleRules] of byHandle) {
      this.setHandle(handle, colorFromRules(handleRules), handleRules, responseSeq);
    }
    this.notify();
  }

  private setHandle(
    handle: HandleId,
    color: HandleColor,
    rules: RuleResult[],
    responseSeq: number | null,
  ): void {
    const prev = this.handles[handle];
    this.handles[handle] = { color, rules, responseSeq };
    if (prev.color !== color) {
      this.colorTrace.push({ handle, color, responseSeq });
    }
  }

  /** Messages for the failed rules on a handle (drives the toast/tooltips). */
  failureMessages(handle: HandleId): string[] {
    return this.handles[handle].rules
      .filter((r) => !r.pass)
      .map((r) => `${r.id}: ${r.threshold}`);
  }
}
