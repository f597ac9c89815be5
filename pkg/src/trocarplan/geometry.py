"""Trajectories, instrument maneuver cones, and the angled-endoscope model.

Conventions: the maneuver cone sits with its apex at the skin entry point
(the physical pivot of a trocar sleeve) and opens inward along the
trajectory, truncated flat at the instrument reach. The endoscope tube axis
points from tip to handle; its optical axis is the viewing direction tilted
by the scope angle, with the tilt plane selected by a roll angle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import MeshModel

DEFAULT_DOF_HALF_ANGLE_DEG = 20.0
DEFAULT_REACH_MM = 280.0
DEFAULT_FOV_DEG = 60.0
DEFAULT_TILT_DEG = 30.0
DEFAULT_TUBE_LENGTH_MM = 300.0
DEFAULT_FOV_LENGTH_MM = 280.0


class GeometryError(ValueError):
    pass


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=np.float64).reshape(3)


def unit(v) -> np.ndarray:
    v = _vec(v)
    n = np.linalg.norm(v)
    if n <= 1e-12:
        raise GeometryError("zero-length vector")
    return v / n


def rotate_about(v, axis, angle_deg: float) -> np.ndarray:
    """Rodrigues rotation of `v` about the unit vector `axis`."""
    v = _vec(v)
    k = unit(axis)
    th = math.radians(angle_deg)
    return (v * math.cos(th)
            + np.cross(k, v) * math.sin(th)
            + k * (k @ v) * (1.0 - math.cos(th)))


def perpendicular_to(v) -> np.ndarray:
    """A deterministic unit vector perpendicular to `v`."""
    w = unit(v)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(w)))] = 1.0
    return unit(e - w * (w @ e))


def angle_between(a, b) -> float:
    """Angle between two nonzero vectors, degrees in [0, 180]."""
    ua = unit(a)
    ub = unit(b)
    return math.degrees(math.acos(min(1.0, max(-1.0, float(ua @ ub)))))


@dataclass(frozen=True)
class TrocarTrajectory:
    """Straight instrument path from a skin entry point to its target."""

    entry: np.ndarray
    target: np.ndarray
    hand: str
    length_mm: float = 0.0   # derived
    axis: np.ndarray = None  # derived, unit entry -> target

    def __post_init__(self):
        if self.hand not in ("left", "right"):
            raise GeometryError(f"hand must be 'left' or 'right', got {self.hand!r}")
        e = _vec(self.entry)
        t = _vec(self.target)
        d = t - e
        n = float(np.linalg.norm(d))
        if n <= 1e-9:
            raise GeometryError("zero-length trajectory (entry equals target)")
        object.__setattr__(self, "entry", e)
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "length_mm", n)
        object.__setattr__(self, "axis", d / n)


def make_trajectory(entry, target, hand: str) -> TrocarTrajectory:
    return TrocarTrajectory(entry=entry, target=target, hand=hand)


@dataclass(frozen=True)
class DofCone:
    """Truncated cone of instrument maneuverability about a trocar pivot.

    half_angle 0 is permitted as the degenerate limiting case (a bare ray).
    """

    apex: np.ndarray
    axis: np.ndarray
    half_angle_deg: float = DEFAULT_DOF_HALF_ANGLE_DEG
    length_mm: float = DEFAULT_REACH_MM

    def __post_init__(self):
        if not (0.0 <= self.half_angle_deg < 90.0):
            raise GeometryError(f"half angle must be in [0, 90), got {self.half_angle_deg}")
        if self.length_mm <= 0:
            raise GeometryError("cone length must be > 0")
        object.__setattr__(self, "apex", _vec(self.apex))
        object.__setattr__(self, "axis", unit(self.axis))

    @property
    def base_radius_mm(self) -> float:
        return self.length_mm * math.tan(math.radians(self.half_angle_deg))

    @property
    def analytic_volume_mm3(self) -> float:
        return math.pi * self.base_radius_mm ** 2 * self.length_mm / 3.0


class FovCone(DofCone):
    """Endoscope viewing frustum approximated as a cone; same shape as DofCone."""


def dof_cone_of(traj: TrocarTrajectory,
                half_angle_deg: float = DEFAULT_DOF_HALF_ANGLE_DEG,
                reach_mm: float = DEFAULT_REACH_MM) -> DofCone:
    """Maneuver cone of a trajectory: apex at the entry, opening inward."""
    return DofCone(apex=traj.entry, axis=traj.axis,
                   half_angle_deg=half_angle_deg, length_mm=reach_mm)


def cone_contains(cone: DofCone, p, tol_deg: float = 1e-9) -> bool:
    u = _vec(p) - cone.apex
    t = float(u @ cone.axis)
    if t < -1e-9 or t > cone.length_mm + 1e-9:
        return False
    n = float(np.linalg.norm(u))
    if n <= 1e-12:
        return True  # the apex itself
    ang = math.degrees(math.acos(min(1.0, max(-1.0, t / n))))
    return ang <= cone.half_angle_deg + tol_deg


def cone_contains_many(cone: DofCone, pts: np.ndarray, tol_deg: float = 1e-9) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
    u = pts - cone.apex
    t = u @ cone.axis
    n = np.linalg.norm(u, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = np.where(n > 1e-12, t / np.maximum(n, 1e-12), 1.0)
    ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return (t >= -1e-9) & (t <= cone.length_mm + 1e-9) & (ang <= cone.half_angle_deg + tol_deg)


def tessellate_cone(cone: DofCone, radial_segments: int = 64) -> MeshModel:
    """Closed triangulated cone: lateral fan plus a flat base disk."""
    if radial_segments < 3:
        raise GeometryError("radial_segments must be >= 3")
    if cone.half_angle_deg <= 0:
        raise GeometryError("cannot tessellate a degenerate (zero-angle) cone")
    r = cone.base_radius_mm
    base_center = cone.apex + cone.axis * cone.length_mm
    u0 = perpendicular_to(cone.axis)
    u1 = np.cross(cone.axis, u0)
    angles = 2.0 * math.pi * np.arange(radial_segments) / radial_segments
    ring = base_center[None, :] + r * (np.cos(angles)[:, None] * u0[None, :]
                                       + np.sin(angles)[:, None] * u1[None, :])
    verts = np.vstack([cone.apex[None, :], base_center[None, :], ring])
    k = radial_segments
    tris = []
    for i in range(k):
        j = (i + 1) % k
        tris.append((0, 2 + i, 2 + j))       # lateral
        tris.append((1, 2 + j, 2 + i))       # base disk
    return MeshModel(verts, np.asarray(tris, dtype=np.int64), name="cone")


@dataclass(frozen=True)
class CameraPose:
    """Rigid angled endoscope: tube with the camera at its tip.

    `tube_axis` points from the tip toward the handle; the viewing direction
    is its opposite. `roll_deg` selects the plane in which the optical axis
    is tilted away from the viewing direction.
    """

    tip: np.ndarray
    tube_axis: np.ndarray
    tube_length_mm: float = DEFAULT_TUBE_LENGTH_MM
    tilt_deg: float = DEFAULT_TILT_DEG
    roll_deg: float = 0.0
    fov_deg: float = DEFAULT_FOV_DEG

    def __post_init__(self):
        if self.tube_length_mm <= 0:
            raise GeometryError("tube length must be > 0")
        if not (0.0 <= self.tilt_deg < 90.0):
            raise GeometryError("tilt must be in [0, 90)")
        if not (0.0 < self.fov_deg < 180.0):
            raise GeometryError("field of view must be in (0, 180)")
        object.__setattr__(self, "tip", _vec(self.tip))
        object.__setattr__(self, "tube_axis", unit(self.tube_axis))

    @cached_property
    def optical_axis(self) -> np.ndarray:
        view = -self.tube_axis
        pivot = rotate_about(perpendicular_to(view), view, self.roll_deg)
        ax = rotate_about(view, pivot, self.tilt_deg)
        ax.flags.writeable = False
        return ax

    @property
    def fov_half_angle_deg(self) -> float:
        return self.fov_deg / 2.0

    @property
    def handle(self) -> np.ndarray:
        return self.tip + self.tube_axis * self.tube_length_mm

    def tube_points(self, step_mm: float) -> np.ndarray:
        """Points sampled along the tube every `step_mm`, endpoints included."""
        s = np.arange(0.0, self.tube_length_mm, step_mm)
        s = np.append(s, self.tube_length_mm)
        return self.tip[None, :] + s[:, None] * self.tube_axis[None, :]

    def transformed(self, rotation: np.ndarray | None = None,
                    translation=(0.0, 0.0, 0.0)) -> "CameraPose":
        """Rigidly moved pose whose optical axis moves with the scope.

        The roll angle is measured against a world-fixed reference
        perpendicular, so it is recomputed such that the derived optical axis
        equals the rotated original.
        """
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        tube = unit(rot @ self.tube_axis)
        view = -tube
        if self.tilt_deg == 0.0:
            roll = 0.0
        else:
            optical = unit(rot @ self.optical_axis)
            pivot = unit(np.cross(view, optical))
            ref = perpendicular_to(view)
            roll = math.degrees(math.atan2(float(np.cross(ref, pivot) @ view),
                                           float(ref @ pivot)))
        return CameraPose(tip=rot @ self.tip + t, tube_axis=tube,
                          tube_length_mm=self.tube_length_mm, tilt_deg=self.tilt_deg,
                          roll_deg=roll, fov_deg=self.fov_deg)


def fov_cone_of(camera: CameraPose, length_mm: float = DEFAULT_FOV_LENGTH_MM) -> FovCone:
    return FovCone(apex=camera.tip, axis=camera.optical_axis,
                   half_angle_deg=camera.fov_half_angle_deg, length_mm=length_mm)


def aim_error(camera: CameraPose, target) -> float:
    """Perpendicular distance from `target` to the optical-axis ray, in mm.

    Infinite when the target lies behind the tip (the scope cannot see it).
    """
    u = _vec(target) - camera.tip
    t = float(u @ camera.optical_axis)
    if t < 0.0:
        return math.inf
    return float(np.linalg.norm(u - t * camera.optical_axis))


def aimed_camera_pose(entry, target, roll_deg: float = 0.0,
                      depth_mm: float = 80.0,
                      tilt_deg: float = DEFAULT_TILT_DEG,
                      tube_length_mm: float = DEFAULT_TUBE_LENGTH_MM,
                      fov_deg: float = DEFAULT_FOV_DEG) -> CameraPose:
    """Pose a tilted scope through `entry` so its optical axis hits `target`.

    The tube pierces the skin at `entry`, the tip sits `depth_mm` inside
    along the tube, and the tube is slanted (within the plane chosen by
    `roll_deg`) by exactly the amount that brings the tilted optical axis
    back onto the target. Solved by bisection on the in-plane slant angle.
    """
    entry = _vec(entry)
    target = _vec(target)
    span = target - entry
    dist = float(np.linalg.norm(span))
    if dist <= 1e-9:
        raise GeometryError("entry coincides with target")
    if depth_mm <= 0 or depth_mm >= dist:
        raise GeometryError(f"tip depth {depth_mm} must be in (0, {dist:.1f})")
    b = span / dist
    e2 = rotate_about(perpendicular_to(b), b, roll_deg)
    tilt = math.radians(tilt_deg)

    def f(theta: float) -> float:
        return (theta - tilt) - math.atan2(-depth_mm * math.sin(theta),
                                           dist - depth_mm * math.cos(theta))

    lo, hi = 0.0, tilt
    if tilt <= 0:
        theta = 0.0
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        theta = 0.5 * (lo + hi)

    u = math.cos(theta) * b + math.sin(theta) * e2            # tube direction, inward
    v = math.cos(theta - tilt) * b + math.sin(theta - tilt) * e2  # optical direction
    tip = entry + depth_mm * u
    if tilt_deg == 0.0:
        roll_out = 0.0
    else:
        pivot = unit(np.cross(u, v))
        ref = perpendicular_to(u)
        roll_out = math.degrees(math.atan2(float(np.cross(ref, pivot) @ u),
                                           float(ref @ pivot)))
    return CameraPose(tip=tip, tube_axis=-u, tube_length_mm=tube_length_mm,
                      tilt_deg=tilt_deg, roll_deg=roll_out, fov_deg=fov_deg)
