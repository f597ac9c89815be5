// Three.js viewport: anatomy rendering, draggable placement handles, cone and
// voxel overlays, and the two task view presets. All rule colors come from
// the controller; this layer only draws them.

import * as THREE from "three";

import { colorValue, type Palette } from "./colors.js";
import type { HandleId, PlannerController, ViewPreset } from "./controller.js";
import { add, opticalAxis, scale, unit } from "./pose.js";
import type { CameraPoseWire, SceneWire, Vec3 } from "./types.js";

const ROLE_STYLE: Record<string, { color: number; opacity: number }> = {
  skin: { color: 0xd9b38c, opacity: 0.32 },
  rib: { color: 0xf4f1ea, opacity: 0.55 },
  vertebra: { color: 0x8b5a2b, opacity: 1.0 },
  scapula: { color: 0xd4c24a, opacity: 1.0 },
  trachea: { color: 0x4aa3d4, opacity: 1.0 },
  vasculature: { color: 0xc0392b, opacity: 1.0 },
  other: { color: 0x999999, opacity: 1.0 },
};

const HANDLE_RADII: Record<HandleId, number> = {
  leftEndpoint: 8,
  rightEndpoint: 8,
  leftEntry: 10,
  rightEntry: 10,
  camera: 12,
};

export class Viewport {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly renderer: THREE.WebGLRenderer;
  private readonly handleMeshes = new Map<HandleId, THREE.Mesh>();
  private readonly trajectoryLines = new Map<"left" | "right", THREE.Line>();
  private readonly cones = new THREE.Group();
  private scopeLine: THREE.Line | null = null;
  private voxelMesh: THREE.InstancedMesh | null = null;
  private skinMesh: THREE.Mesh | null = null;
  private orbitTheta = 0;
  private orbitPhi = Math.PI / 2;
  private orbitRadius = 900;
  private target = new THREE.Vector3();

  constructor(
    canvas: HTMLCanvasElement,
    readonly wire: SceneWire,
    private palette: Palette,
  ) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(
      45,
      canvas.clientWidth / Math.max(canvas.clientHeight, 1),
      1,
      8000,
    );
    this.scene.background = new THREE.Color(0x10151c);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.55));
    const key = new THREE.DirectionalLight(0xffffff, 1.1);
    key.position.set(1, -2, 1.5);
    this.scene.add(key);
    this.scene.add(this.cones);

    this.buildAnatomy();
    this.buildConvergentMarker();
    this.buildHandles();
    this.applyPreset("anterior");
    this.bindOrbit(canvas);
  }

  setPalette(palette: Palette): void {
    this.palette = palette;
  }

  // -- construction -----------------------------------------------------------

  private static geometryFrom(vertices: number[], triangles: number[]): THREE.BufferGeometry {
    const geo = new THREE.BufferGeometry();
    geo.setAttribute("position", new THREE.Float32BufferAttribute(vertices, 3));
    geo.setIndex(triangles);
    geo.computeVertexNormals();
    return geo;
  }

  private buildAnatomy(): void {
    for (const mesh of this.wire.meshes) {
      const style = ROLE_STYLE[mesh.role] ?? ROLE_STYLE.other;
      const material = new THREE.MeshStandardMaterial({
        color: style.color,
        transparent: style.opacity < 1,
        opacity: style.opacity,
        side: THREE.DoubleSide,
        depthWrite: style.opacity >= 1,
      });
      const obj = new THREE.Mesh(Viewport.geometryFrom(mesh.vertices_mm, mesh.triangles), material);
      obj.name = `anatomy:${mesh.name}`;
      if (mesh.role === "skin") this.skinMesh = obj;
      this.scene.add(obj);
    }
    const [cx, cy, cz] = this.wire.convergent_point_mm;
    this.target.set(cx, cy, cz);
  }

  private buildConvergentMarker(): void {
    const [x, y, z] = this.wire.convergent_point_mm;
    const marker = new THREE.Mesh(
      new THREE.SphereGeometry(7, 24, 16),
      new THREE.MeshBasicMaterial({ color: 0xff69b4 }),
    );
    marker.position.set(x, y, z);
    marker.name = "convergent-point";
    this.scene.add(marker);
  }

  private buildHandles(): void {
    for (const id of Object.keys(HANDLE_RADII) as HandleId[]) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(HANDLE_RADII[id], 24, 16),
        new THREE.MeshStandardMaterial({ color: this.palette.neutral }),
      );
      mesh.name = `handle:${id}`;
      mesh.visible = false;
      this.handleMeshes.set(id, mesh);
      this.scene.add(mesh);
    }
  }

  // -- state sync ----------------------------------------------------------------

  syncFrom(controller: PlannerController): void {
    for (const [id, mesh] of this.handleMeshes) {
      const state = controller.handles[id];
      (mesh.material as THREE.MeshStandardMaterial).color.setHex(
        colorValue(state.color, this.palette),
      );
    }
    this.applyPreset(controller.viewPreset());
    if (controller.voxels !== null && this.voxelMesh === null) {
      this.showVoxels(controller.voxels.centers, controller.voxels.spacingMm);
    }
  }

  placeHandle(id: HandleId, positionMm: Vec3): void {
    const mesh = this.handleMeshes.get(id);
    if (!mesh) return;
    mesh.visible = true;
    mesh.position.set(positionMm[0], positionMm[1], positionMm[2]);
  }

  /** Red/green/neutral trajectory line from an entry handle to its endpoint. */
  drawTrajectory(handId: "left" | "right", entryMm: Vec3, targetMm: Vec3, colorHex: number): void {
    const old = this.trajectoryLines.get(handId);
    if (old) this.scene.remove(old);
    const geo = new THREE.BufferGeometry().setFromPoints([
      new THREE.Vector3(...entryMm),
      new THREE.Vector3(...targetMm),
    ]);
    const line = new THREE.Line(geo, new THREE.LineBasicMaterial({ color: colorHex }));
    this.trajectoryLines.set(handId, line);
    this.scene.add(line);
  }

  /** Truncated maneuver/viewing cone: apex at `apexMm` opening along `axis`. */
  drawCone(apexMm: Vec3, axis: Vec3, halfAngleDeg: number, lengthMm: number, colorHex: number): void {
    const radius = lengthMm * Math.tan((halfAngleDeg * Math.PI) / 180);
    const geo = new THREE.ConeGeometry(radius, lengthMm, 48, 1, true);
    const material = new THREE.MeshStandardMaterial({
      color: colorHex,
      transparent: true,
      opacity: 0.25,
      side: THREE.DoubleSide,
      depthWrite: false,
    });
    const cone = new THREE.Mesh(geo, material);
    // ConeGeometry points +y with its apex at +h/2; steer apex->axis
    const dir = new THREE.Vector3(...unit(axis));
    cone.quaternion.setFromUnitVectors(new THREE.Vector3(0, -1, 0), dir);
    const mid = add(apexMm, scale(unit(axis), lengthMm / 2));
    cone.position.set(mid[0], mid[1], mid[2]);
    this.cones.add(cone);
  }

  clearCones(): void {
    this.cones.clear();
  }

  drawScopeAxis(pose: CameraPoseWire, colorHex: number, lengthMm = 400): void {
    if (this.scopeLine) this.scene.remove(this.scopeLine);
    const axis = opticalAxis(pose);
    const end = add(pose.tip_mm, scale(axis, lengthMm));
    const geo = new THREE.BufferGeometry().setFromPoints([
      new THREE.Vector3(...pose.tip_mm),
      new THREE.Vector3(...end),
    ]);
    this.scopeLine = new THREE.Line(geo, new THREE.LineBasicMaterial({ color: colorHex }));
    this.scene.add(this.scopeLine);
  }

  /** Operable-volume voxels: one instanced cube per overlap cell. */
  showVoxels(centers: Vec3[], spacingMm: number): void {
    if (this.voxelMesh) this.scene.remove(this.voxelMesh);
    const geo = new THREE.BoxGeometry(spacingMm, spacingMm, spacingMm);
    const material = new THREE.MeshStandardMaterial({
      color: this.palette.voxel,
      transparent: true,
      opacity: 0.8,
    });
    const mesh = new THREE.InstancedMesh(geo, material, centers.length);
    const m = new THREE.Matrix4();
    centers.forEach((c, i) => {
      m.makeTranslation(c[0], c[1], c[2]);
      mesh.setMatrixAt(i, m);
    });
    this.voxelMesh = mesh;
    this.scene.add(mesh);
  }

  get voxelCount(): number {
    return this.voxelMesh?.count ?? 0;
  }

  /** Raycast a pointer event onto the skin; used to drag entry handles. */
  pickSkin(ndcX: number, ndcY: number): Vec3 | null {
    if (!this.skinMesh) return null;
    const caster = new THREE.Raycaster();
    caster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    const hits = caster.intersectObject(this.skinMesh, false);
    if (hits.length === 0) return null;
    const p = hits[0].point;
    return [p.x, p.y, p.z];
  }

  // -- camera ----------------------------------------------------------------------

  /** Anterior for the tool task (surgeon side), posterior for the camera task. */
  applyPreset(preset: ViewPreset): void {
    this.orbitTheta = preset === "anterior" ? -Math.PI / 2 : Math.PI / 2;
    this.orbitPhi = Math.PI / 2;
    this.updateCamera();
  }

  private bindOrbit(canvas: HTMLCanvasElement): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener("pointerdown", (e) => {
      if (e.button === 2 || e.shiftKey) {
        dragging = true;
        lastX = e.clientX;
        lastY = e.clientY;
      }
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.orbitTheta -= (e.clientX - lastX) * 0.005;
      this.orbitPhi = Math.min(
        Math.PI - 0.05,
        Math.max(0.05, this.orbitPhi - (e.clientY - lastY) * 0.005),
      );
      lastX = e.clientX;
      lastY = e.clientY;
      this.updateCamera();
    });
    canvas.addEventListener("pointerup", () => {
      dragging = false;
    });
    canvas.addEventListener("wheel", (e) => {
      this.orbitRadius = Math.min(3000, Math.max(300, this.orbitRadius * (1 + e.deltaY * 1e-3)));
      this.updateCamera();
    });
    canvas.addEventListener("contextmenu", (e) => e.preventDefault());
  }

  private updateCamera(): void {
    const sp = Math.sin(this.orbitPhi);
    this.camera.position.set(
      this.target.x + this.orbitRadius * sp * Math.cos(this.orbitTheta),
      this.target.y + this.orbitRadius * sp * Math.sin(this.orbitTheta),
      this.target.z + this.orbitRadius * Math.cos(this.orbitPhi),
    );
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(this.target);
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
