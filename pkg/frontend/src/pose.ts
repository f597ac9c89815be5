// Scope pose math for rendering: the optical axis of the angled endoscope,
// matching the engine's derivation exactly (same reference-perpendicular and
// Rodrigues conventions). Used only to aim the preview camera and draw the
// axis line; rule outcomes always come from the server.

import type { CameraPoseWire, Vec3 } from "./types.js";

export function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

export function unit(v: Vec3): Vec3 {
  const n = norm(v);
  return [v[0] / n, v[1] / n, v[2] / n];
}

export function scale(v: Vec3, s: number): Vec3 {
  return [v[0] * s, v[1] * s, v[2] * s];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function rotateAbout(v: Vec3, axis: Vec3, angleDeg: number): Vec3 {
  const k = unit(axis);
  const th = (angleDeg * Math.PI) / 180;
  const c = Math.cos(th);
  const s = Math.sin(th);
  const kxv = cross(k, v);
  const kd = dot(k, v) * (1 - c);
  return [
    v[0] * c + kxv[0] * s + k[0] * kd,
    v[1] * c + kxv[1] * s + k[1] * kd,
    v[2] * c + kxv[2] * s + k[2] * kd,
  ];
}

/** Deterministic perpendicular: unit basis vector of the smallest component,
 *  projected off `v`. Must match the engine's convention. */
export function perpendicularTo(v: Vec3): Vec3 {
  const w = unit(v);
  const abs = [Math.abs(w[0]), Math.abs(w[1]), Math.abs(w[2])];
  let i = 0;
  if (abs[1] < abs[i]) i = 1;
  if (abs[2] < abs[i]) i = 2;
  const e: Vec3 = [0, 0, 0];
  e[i] = 1;
  const d = dot(w, e);
  return unit([e[0] - w[0] * d, e[1] - w[1] * d, e[2] - w[2] * d]);
}

/** Viewing direction of the tilted scope: the tube's inward direction rotated
 *  by the tilt within the plane selected by the roll angle. */
export function opticalAxis(pose: CameraPoseWire): Vec3 {
  const view = scale(unit(pose.tube_axis), -1);
  const pivot = rotateAbout(perpendicularTo(view), view, pose.roll_deg);
  return rotateAbout(view, pivot, pose.tilt_deg);
}

export function tubeHandle(pose: CameraPoseWire): Vec3 {
  return add(pose.tip_mm, scale(unit(pose.tube_axis), pose.tube_length_mm));
}

/** Pose a tilted scope through a skin entry so its optical axis passes
 *  through the target, with the tip `depthMm` inside along the tube. Port of
 *  the engine's construction (bisection on the in-plane slant); used to turn
 *  drag input into a camera pose, which the server then validates. */
export function aimedPose(
  entryMm: Vec3,
  targetMm: Vec3,
  rollDeg: number,
  depthMm: number,
  tiltDeg: number,
  tubeLengthMm: number,
  fovDeg: number,
): CameraPoseWire {
  const span: Vec3 = [
    targetMm[0] - entryMm[0],
    targetMm[1] - entryMm[1],
    targetMm[2] - entryMm[2],
  ];
  const dist = norm(span);
  if (depthMm <= 0 || depthMm >= dist) {
    throw new Error(`tip depth ${depthMm} must be in (0, ${dist.toFixed(1)})`);
  }
  const b = unit(span);
  const e2 = rotateAbout(perpendicularTo(b), b, rollDeg);
  const tilt = (tiltDeg * Math.PI) / 180;

  const f = (theta: number) =>
    theta - tilt - Math.atan2(-depthMm * Math.sin(theta), dist - depthMm * Math.cos(theta));
  let lo = 0;
  let hi = tilt;
  let theta = 0;
  if (tilt > 0) {
    for (let i = 0; i < 80; i++) {
      const mid = (lo + hi) / 2;
      if (f(mid) < 0) lo = mid;
      else hi = mid;
    }
    theta = (lo + hi) / 2;
  }

  const u = add(scale(b, Math.cos(theta)), scale(e2, Math.sin(theta)));
  const v = add(scale(b, Math.cos(theta - tilt)), scale(e2, Math.sin(theta - tilt)));
  const tip = add(entryMm, scale(u, depthMm));
  let rollOut = 0;
  if (tiltDeg !== 0) {
    const pivot = unit(cross(u, v));
    const ref = perpendicularTo(u);
    rollOut = (Math.atan2(dot(cross(ref, pivot), u), dot(ref, pivot)) * 180) / Math.PI;
  }
  return {
    tip_mm: tip,
    tube_axis: scale(u, -1),
    tube_length_mm: tubeLengthMm,
    tilt_deg: tiltDeg,
    roll_deg: rollOut,
    fov_deg: fovDeg,
  };
}
