// Application wiring: scene fetch, viewport, endoscope preview, task panels,
// and the drag interactions that feed the controller.

import * as THREE from "three";

import { ApiClient, fetchTransport } from "./api.js";
import { COLORBLIND_PALETTE, STANDARD_PALETTE, colorValue, type Palette } from "./colors.js";
import { PlannerController, type HandleId } from "./controller.js";
import { EndoscopePreview } from "./endoscope.js";
import { aimedPose, unit } from "./pose.js";
import type { CameraPoseWire, SceneWire, Vec3 } from "./types.js";
import { Viewport } from "./viewport.js";

const TASK_HINTS: Record<string, string> = {
  "tool-endpoints":
    "Task 1 - drag both endpoint spheres onto the pink convergent point " +
    "(they turn green when close enough), then press Place endpoints.",
  "tool-entries":
    "Task 1 - drag each entry sphere onto the skin inside the tool region. " +
    "Watch the live distance readouts; green means every rule passes.",
  "tool-confirm": "Review the manipulation angle, then Confirm or Repeat.",
  "camera-place":
    "Task 2 - drag the camera entry on the posterior skin; the scope aims at " +
    "the convergent point. Adjust roll and depth; green axis means valid.",
  "camera-confirm": "Confirm the camera placement or Repeat to adjust it.",
  summary: "Plan evaluated. Purple voxels show the operable volume.",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const client = new ApiClient(fetchTransport(""));
  const controller = new PlannerController(client);
  const { data: scene } = await client.getScene();

  let palette: Palette = STANDARD_PALETTE;
  const canvas = el<HTMLCanvasElement>("viewport");
  const viewport = new Viewport(canvas, scene, palette);
  const preview = new EndoscopePreview(scene.defaults.fov_deg as number);
  const previewCanvas = el<HTMLCanvasElement>("endoscope");
  const previewRenderer = new THREE.WebGLRenderer({ canvas: previewCanvas });

  const app = new App(controller, viewport, preview, previewRenderer, scene);
  el<HTMLButtonElement>("palette-toggle").addEventListener("click", () => {
    palette = palette === STANDARD_PALETTE ? COLORBLIND_PALETTE : STANDARD_PALETTE;
    viewport.setPalette(palette);
    app.palette = palette;
    app.refresh();
  });

  await controller.start();
  app.refresh();
  app.animate();
}

class App {
  palette: Palette = STANDARD_PALETTE;
  private endpoints: { left: Vec3; right: Vec3 };
  private entries: { left: Vec3 | null; right: Vec3 | null } = { left: null, right: null };
  private cameraEntry: Vec3 | null = null;
  private rollDeg = 0;
  private depthMm: number;
  private dragging: HandleId | null = null;

  constructor(
    readonly controller: PlannerController,
    readonly viewport: Viewport,
    readonly endoscope: EndoscopePreview,
    readonly previewRenderer: THREE.WebGLRenderer,
    readonly scene: SceneWire,
  ) {
    const c = scene.convergent_point_mm;
    this.depthMm = scene.defaults.camera_depth_mm as number;
    this.endpoints = {
      left: [c[0] - 60, c[1] - 120, c[2]],
      right: [c[0] + 60, c[1] - 120, c[2]],
    };
    controller.onChange(() => this.refresh());
    this.bindPointer();
    this.bindButtons();
  }

  private get convergent(): Vec3 {
    return this.scene.convergent_point_mm;
  }

  private bindButtons(): void {
    el<HTMLButtonElement>("place-endpoints").addEventListener("click", () => {
      void this.controller.submitEndpoints(this.endpoints.left, this.endpoints.right);
    });
    el<HTMLButtonElement>("place-entries").addEventListener("click", () => {
      if (this.entries.left && this.entries.right) {
        void this.controller.submitEntries(this.entries.left, this.entries.right);
      }
    });
    el<HTMLButtonElement>("place-camera").addEventListener("click", () => {
      const pose = this.currentPose();
      if (pose) void this.controller.submitCamera(pose);
    });
    el<HTMLButtonElement>("confirm").addEventListener("click", () => {
      void this.controller.confirmTask();
    });
    el<HTMLButtonElement>("repeat").addEventListener("click", () => {
      void this.controller.repeatTask();
    });
    const roll = el<HTMLInputElement>("roll");
    roll.addEventListener("input", () => {
      this.rollDeg = Number(roll.value);
      this.onCameraDrag();
    });
    const depth = el<HTMLInputElement>("depth");
    depth.addEventListener("input", () => {
      this.depthMm = Number(depth.value);
      this.onCameraDrag();
    });
  }

  private bindPointer(): void {
    const canvas = this.viewport.renderer.domElement;
    const ndc = (e: PointerEvent): [number, number] => {
      const rect = canvas.getBoundingClientRect();
      return [
        ((e.clientX - rect.left) / rect.width) * 2 - 1,
        (-(e.clientY - rect.top) / rect.height) * 2 + 1,
      ];
    };
    canvas.addEventListener("pointerdown", (e) => {
      if (e.button !== 0 || e.shiftKey) return;
      this.dragging = this.activeHandle(e);
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const [x, y] = ndc(e);
      this.onDrag(this.dragging, x, y);
    });
    canvas.addEventListener("pointerup", () => {
      this.dragging = null;
    });
  }

  private activeHandle(e: PointerEvent): HandleId | null {
    const task = this.controller.task;
    if (task === "tool-endpoints") return e.ctrlKey ? "rightEndpoint" : "leftEndpoint";
    if (task === "tool-entries") return e.ctrlKey ? "rightEntry" : "leftEntry";
    if (task === "camera-place") return "camera";
    return null;
  }

  private onDrag(handle: HandleId, ndcX: number, ndcY: number): void {
    if (handle === "leftEndpoint" || handle === "rightEndpoint") {
      // endpoints float toward the target: constrain to the camera-facing
      // plane through the convergent point
      const cam = this.viewport.camera;
      const plane = new THREE.Plane().setFromNormalAndCoplanarPoint(
        cam.getWorldDirection(new THREE.Vector3()),
        new THREE.Vector3(...this.convergent),
      );
      const caster = new THREE.Raycaster();
      caster.setFromCamera(new THREE.Vector2(ndcX, ndcY), cam);
      const hit = new THREE.Vector3();
      if (!caster.ray.intersectPlane(plane, hit)) return;
      const p: Vec3 = [hit.x, hit.y, hit.z];
      if (handle === "leftEndpoint") this.endpoints.left = p;
      else this.endpoints.right = p;
      this.viewport.placeHandle(handle, p);
      this.controller.preview({
        type: "endpoints",
        left_mm: this.endpoints.left,
        right_mm: this.endpoints.right,
      });
      return;
    }

    const onSkin = this.viewport.pickSkin(ndcX, ndcY);
    if (!onSkin) return;
    if (handle === "leftEntry" || handle === "rightEntry") {
      if (handle === "leftEntry") this.entries.left = onSkin;
      else this.entries.right = onSkin;
      this.viewport.placeHandle(handle, onSkin);
      if (this.entries.left && this.entries.right) {
        this.controller.preview({
          type: "entries",
          left_mm: this.entries.left,
          right_mm: this.entries.right,
        });
      }
      this.drawTrajectories();
    } else if (handle === "camera") {
      this.cameraEntry = onSkin;
      this.viewport.placeHandle("camera", onSkin);
      this.onCameraDrag();
    }
  }

  private currentPose(): CameraPoseWire | null {
    if (!this.cameraEntry) return null;
    try {
      return aimedPose(
        this.cameraEntry,
        this.convergent,
        this.rollDeg,
        this.depthMm,
        this.scene.defaults.tilt_deg as number,
        this.scene.defaults.tube_length_mm as number,
        this.scene.defaults.fov_deg as number,
      );
    } catch {
      return null;
    }
  }

  private onCameraDrag(): void {
    const pose = this.currentPose();
    if (!pose) return;
    this.controller.preview({ type: "camera", ...pose });
    this.endoscope.aim(pose);
    this.viewport.drawScopeAxis(
      pose,
      colorValue(this.controller.handles.camera.color, this.palette),
    );
  }

  private drawTrajectories(): void {
    const { leftEntry, rightEntry } = this.controller.handles;
    if (this.entries.left) {
      this.viewport.drawTrajectory(
        "left", this.entries.left, this.endpoints.left,
        colorValue(leftEntry.color, this.palette));
    }
    if (this.entries.right) {
      this.viewport.drawTrajectory(
        "right", this.entries.right, this.endpoints.right,
        colorValue(rightEntry.color, this.palette));
    }
    this.viewport.clearCones();
    const half = this.scene.defaults.half_angle_deg as number;
    const reach = this.scene.defaults.reach_mm as number;
    if (this.entries.left) {
      const axis = unit([
        this.endpoints.left[0] - this.entries.left[0],
        this.endpoints.left[1] - this.entries.left[1],
        this.endpoints.left[2] - this.entries.left[2],
      ]);
      this.viewport.drawCone(this.entries.left, axis, half, reach, this.palette.dofLeft);
    }
    if (this.entries.right) {
      const axis = unit([
        this.endpoints.right[0] - this.entries.right[0],
        this.endpoints.right[1] - this.entries.right[1],
        this.endpoints.right[2] - this.entries.right[2],
      ]);
      this.viewport.drawCone(this.entries.right, axis, half, reach, this.palette.dofRight);
    }
  }

  refresh(): void {
    this.viewport.syncFrom(this.controller);
    el<HTMLDivElement>("hint").textContent = TASK_HINTS[this.controller.task] ?? "";
    const r = this.controller.readouts;
    el<HTMLDivElement>("readouts").textContent = [
      r.leftLengthMm !== null ? `left ${(r.leftLengthMm / 10).toFixed(1)} cm` : "",
      r.rightLengthMm !== null ? `right ${(r.rightLengthMm / 10).toFixed(1)} cm` : "",
      r.manipulationAngleDeg !== null
        ? `angle ${r.manipulationAngleDeg.toFixed(1)} deg ${r.angleInBand ? "(in band)" : "(outside 45-75)"}`
        : "",
    ]
      .filter(Boolean)
      .join("  |  ");
    const summary = el<HTMLDivElement>("summary");
    if (this.controller.report && this.controller.voxels) {
      const rep = this.controller.report;
      summary.textContent =
        `Operable volume ${rep.operable_volume_l.toFixed(3)} L over ` +
        `${this.controller.voxels.centers.length} voxels - ` +
        `${rep.overall_valid ? "plan valid" : "plan INVALID"}`;
    } else {
      summary.textContent = "";
    }
    el<HTMLDivElement>("toast").textContent = this.controller.lastError ?? "";
  }

  animate(): void {
    const tick = () => {
      this.viewport.render();
      if (this.controller.task.startsWith("camera") && this.currentPose()) {
        this.endoscope.render(this.previewRenderer, this.viewport.scene);
      }
      requestAnimationFrame(tick);
    };
    tick();
  }
}

void boot();
