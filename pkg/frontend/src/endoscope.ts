// Simulated endoscope feed: a second camera at the scope tip looking along
// the optical axis, rendered to a texture and blitted into a small canvas.
// The frustum parameters are the engine's scope numbers (60 degree field of
// view), never invented here.

import * as THREE from "three";

import { add, opticalAxis, perpendicularTo } from "./pose.js";
import type { CameraPoseWire } from "./types.js";

export class EndoscopePreview {
  readonly camera: THREE.PerspectiveCamera;
  private readonly target: THREE.WebGLRenderTarget;
  private readonly blitScene = new THREE.Scene();
  private readonly blitCamera = new THREE.OrthographicCamera(-1, 1, 1, -1, 0, 1);

  constructor(fovDeg: number, size = 384) {
    this.camera = new THREE.PerspectiveCamera(fovDeg, 1.0, 2, 4000);
    this.target = new THREE.WebGLRenderTarget(size, size);
    const quad = new THREE.Mesh(
      new THREE.PlaneGeometry(2, 2),
      new THREE.MeshBasicMaterial({ map: this.target.texture }),
    );
    this.blitScene.add(quad);
  }

  /** Point the preview camera out of the scope tip. */
  aim(pose: CameraPoseWire): void {
    const axis = opticalAxis(pose);
    const [tx, ty, tz] = pose.tip_mm;
    this.camera.fov = pose.fov_deg;
    this.camera.position.set(tx, ty, tz);
    const look = add(pose.tip_mm, axis);
    // a stable up vector perpendicular to the viewing axis
    const up = perpendicularTo(axis);
    this.camera.up.set(up[0], up[1], up[2]);
    this.camera.lookAt(look[0], look[1], look[2]);
    this.camera.updateProjectionMatrix();
  }

  /** Render `scene` from the scope into the preview renderer's canvas. */
  render(renderer: THREE.WebGLRenderer, scene: THREE.Scene): void {
    const previous = renderer.getRenderTarget();
    renderer.setRenderTarget(this.target);
    renderer.render(scene, this.camera);
    renderer.setRenderTarget(previous);
    renderer.render(this.blitScene, this.blitCamera);
  }
}
