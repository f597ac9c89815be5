"""Two-task planning session: tool trocars first, then the endoscope.

The state machine walks Setup -> ToolEndpoints -> ToolEntries -> ToolConfirm
-> CameraPlace -> CameraConfirm -> Summary. A repeat at either confirm state
returns to the start of that task and bumps its adjustment counter. Every
call appends an event, and all metrics derive purely from the event log, so
replaying a log reproduces the session exactly.
"""
from __future__ import annotations

import hashlib
import json
import time
import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .geometry import CameraPose, TrocarTrajectory, make_trajectory
from .rules import (
    AnatomicalScene,
    PlanReport,
    RuleResult,
    check_camera,
    check_endpoint,
    check_trajectory,
    evaluate_plan,
    manipulation_angle,
    plan_cones,
    project_entry_to_skin,
)


class SessionState(str, Enum):
    SETUP = "Setup"
    TOOL_ENDPOINTS = "ToolEndpoints"
    TOOL_ENTRIES = "ToolEntries"
    TOOL_CONFIRM = "ToolConfirm"
    CAMERA_PLACE = "CameraPlace"
    CAMERA_CONFIRM = "CameraConfirm"
    SUMMARY = "Summary"


TOOL_TASK_STATES = frozenset({SessionState.TOOL_ENDPOINTS, SessionState.TOOL_ENTRIES,
                              SessionState.TOOL_CONFIRM})
CAMERA_TASK_STATES = frozenset({SessionState.CAMERA_PLACE, SessionState.CAMERA_CONFIRM})


class WrongStateError(Exception):
    def __init__(self, state: SessionState, submission: str):
        super().__init__(f"cannot submit {submission!r} while in state {state.value}")
        self.state = state
        self.submission = submission


class ValidationFailed(Exception):
    """Submission checked out geometrically but failed one or more rules."""

    def __init__(self, results: list[RuleResult]):
        failed = [r.rule for r in results if not r.passed]
        super().__init__(f"rules failed: {', '.join(failed)}")
        self.results = results


# -- submissions ----------------------------------------------------------------

@dataclass(frozen=True)
class EndpointPair:
    left: np.ndarray
    right: np.ndarray

    kind = "endpoints"

    def payload(self) -> dict:
        return {"left_mm": _pt(self.left), "right_mm": _pt(self.right)}


@dataclass(frozen=True)
class EntryPair:
    left: np.ndarray
    right: np.ndarray

    kind = "entries"

    def payload(self) -> dict:
        return {"left_mm": _pt(self.left), "right_mm": _pt(self.right)}


@dataclass(frozen=True)
class CameraSubmission:
    pose: CameraPose

    kind = "camera"

    def payload(self) -> dict:
        p = self.pose
        return {"tip_mm": _pt(p.tip), "tube_axis": _pt(p.tube_axis),
                "tube_length_mm": p.tube_length_mm, "tilt_deg": p.tilt_deg,
                "roll_deg": p.roll_deg, "fov_deg": p.fov_deg}


@dataclass(frozen=True)
class Confirm:
    kind = "confirm"

    def payload(self) -> dict:
        return {}


@dataclass(frozen=True)
class Repeat:
    kind = "repeat"

    def payload(self) -> dict:
        return {}


Submission = EndpointPair | EntryPair | CameraSubmission | Confirm | Repeat


def _pt(p) -> list[float]:
    return [float(x) for x in np.asarray(p, dtype=np.float64).reshape(-1)]


def submission_from_payload(kind: str, payload: dict) -> Submission:
    if kind == "endpoints":
        return EndpointPair(np.asarray(payload["left_mm"]), np.asarray(payload["right_mm"]))
    if kind == "entries":
        return EntryPair(np.asarray(payload["left_mm"]), np.asarray(payload["right_mm"]))
    if kind == "camera":
        return CameraSubmission(CameraPose(
            tip=np.asarray(payload["tip_mm"]), tube_axis=np.asarray(payload["tube_axis"]),
            tube_length_mm=payload["tube_length_mm"], tilt_deg=payload["tilt_deg"],
            roll_deg=payload["roll_deg"], fov_deg=payload["fov_deg"]))
    if kind == "confirm":
        return Confirm()
    if kind == "repeat":
        return Repeat()
    raise ValueError(f"unknown submission kind {kind!r}")


@dataclass(frozen=True)
class Event:
    timestamp: float
    state_from: SessionState
    state_to: SessionState
    kind: str          # submission kind, or "start" / "rejected:<kind>"
    payload: dict

    def digest(self) -> str:
        blob = json.dumps(self.payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def export(self) -> dict:
        return {"timestamp": self.timestamp, "state_from": self.state_from.value,
                "state_to": self.state_to.value, "kind": self.kind,
                "payload_digest": self.digest()}


@dataclass
class SessionMetrics:
    tool_task_minutes: float = 0.0
    camera_task_minutes: float = 0.0
    tool_adjustments: int = 0
    camera_adjustments: int = 0
    left_distance_cm: float | None = None
    right_distance_cm: float | None = None
    manipulation_angle_deg: float | None = None
    operable_volume_l: float | None = None

    def to_dict(self) -> dict:
        return {
            "tool_task_minutes": self.tool_task_minutes,
            "camera_task_minutes": self.camera_task_minutes,
            "tool_adjustments": self.tool_adjustments,
            "camera_adjustments": self.camera_adjustments,
            "left_distance_cm": self.left_distance_cm,
            "right_distance_cm": self.right_distance_cm,
            "manipulation_angle_deg": self.manipulation_angle_deg,
            "operable_volume_l": self.operable_volume_l,
        }


class Session:
    """Single-writer planning session over an immutable scene."""

    def __init__(self, scene: AnatomicalScene, session_id: str | None = None,
                 clock: Callable[[], float] = time.time):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.scene = scene
        self.clock = clock
        self.state = SessionState.SETUP
        self.events: list[Event] = []
        self.tool_adjustments = 0
        self.camera_adjustments = 0
        self.endpoints: dict[str, np.ndarray] = {}
        self.trajectories: dict[str, TrocarTrajectory] = {}
        self.camera: CameraPose | None = None
        self.report: PlanReport | None = None
        self.last_results: list[RuleResult] = []
        self._transition(SessionState.TOOL_ENDPOINTS, "start", {})

    # -- internals --------------------------------------------------------------

    def _transition(self, to: SessionState, kind: str, payload: dict) -> None:
        self.events.append(Event(self.clock(), self.state, to, kind, payload))
        self.state = to

    def _reject(self, kind: str, payload: dict, results: list[RuleResult]) -> None:
        self.events.append(Event(self.clock(), self.state, self.state,
                                 f"rejected:{kind}", payload))
        self.last_results = results
        raise ValidationFailed(results)

    # -- the state machine --------------------------------------------------------

    def advance(self, submission: Submission) -> "Session":
        handler = {
            SessionState.TOOL_ENDPOINTS: self._on_endpoints,
            SessionState.TOOL_ENTRIES: self._on_entries,
            SessionState.TOOL_CONFIRM: self._on_tool_confirm,
            SessionState.CAMERA_PLACE: self._on_camera,
            SessionState.CAMERA_CONFIRM: self._on_camera_confirm,
        }.get(self.state)
        if handler is None:
            raise WrongStateError(self.state, submission.kind)
        handler(submission)
        return self

    def _on_endpoints(self, sub: Submission) -> None:
        if not isinstance(sub, EndpointPair):
            raise WrongStateError(self.state, sub.kind)
        results = [check_endpoint(sub.left, self.scene, "left_endpoint"),
                   check_endpoint(sub.right, self.scene, "right_endpoint")]
        payload = sub.payload()
        if not all(r.passed for r in results):
            self._reject(sub.kind, payload, results)
        self.endpoints = {"left": np.asarray(sub.left, dtype=np.float64),
                          "right": np.asarray(sub.right, dtype=np.float64)}
        self.last_results = results
        self._transition(SessionState.TOOL_ENTRIES, sub.kind, payload)

    def _on_entries(self, sub: Submission) -> None:
        if not isinstance(sub, EntryPair):
            raise WrongStateError(self.state, sub.kind)
        trajs = {}
        results = []
        for hand, point in (("left", sub.left), ("right", sub.right)):
            snapped, _ = project_entry_to_skin(self.scene, point)
            traj = make_trajectory(snapped, self.endpoints[hand], hand)
            trajs[hand] = traj
            results += check_trajectory(traj, self.scene)
        angle = manipulation_angle(trajs["left"], trajs["right"],
                                   self.scene.config.snap_tol_mm)
        payload = sub.payload()
        payload["left_length_mm"] = trajs["left"].length_mm
        payload["right_length_mm"] = trajs["right"].length_mm
        payload["manipulation_angle_deg"] = angle.value
        payload["in_band"] = angle.passed
        if not all(r.passed for r in results):
            self._reject(sub.kind, payload, results + [angle])
        self.trajectories = trajs
        self.last_results = results + [angle]
        self._transition(SessionState.TOOL_CONFIRM, sub.kind, payload)

    def _on_tool_confirm(self, sub: Submission) -> None:
        if isinstance(sub, Confirm):
            self._transition(SessionState.CAMERA_PLACE, sub.kind, {})
        elif isinstance(sub, Repeat):
            self.tool_adjustments += 1
            self.endpoints = {}
            self.trajectories = {}
            self._transition(SessionState.TOOL_ENDPOINTS, sub.kind, {"task": "tool"})
        else:
            raise WrongStateError(self.state, sub.kind)

    def _on_camera(self, sub: Submission) -> None:
        if not isinstance(sub, CameraSubmission):
            raise WrongStateError(self.state, sub.kind)
        cones = plan_cones(self.trajectories["left"], self.trajectories["right"],
                           sub.pose, self.scene)
        results = check_camera(sub.pose, self.scene, (cones[0], cones[1]))
        payload = sub.payload()
        if not all(r.passed for r in results):
            self._reject(sub.kind, payload, results)
        self.camera = sub.pose
        self.last_results = results
        self._transition(SessionState.CAMERA_CONFIRM, sub.kind, payload)

    def _on_camera_confirm(self, sub: Submission) -> None:
        if isinstance(sub, Confirm):
            report = evaluate_plan(self.trajectories["left"], self.trajectories["right"],
                                   self.camera, self.scene)
            self.report = report
            self._transition(SessionState.SUMMARY, sub.kind,
                             {"operable_volume_l": report.operable_volume_l,
                              "manipulation_angle_deg": report.manipulation_angle_deg,
                              "left_length_mm": self.trajectories["left"].length_mm,
                              "right_length_mm": self.trajectories["right"].length_mm,
                              "overall_valid": report.overall_valid})
        elif isinstance(sub, Repeat):
            self.camera_adjustments += 1
            self.camera = None
            self._transition(SessionState.CAMERA_PLACE, sub.kind, {"task": "camera"})
        else:
            raise WrongStateError(self.state, sub.kind)

    # -- derived views ------------------------------------------------------------

    def metrics(self) -> SessionMetrics:
        return metrics_from_events(self.events)

    def export_event_log(self) -> str:
        """Event log as JSON lines (timestamp, states, kind, payload digest)."""
        return "\n".join(json.dumps(e.export(), sort_keys=True) for e in self.events)

    @classmethod
    def replay(cls, scene: AnatomicalScene, events: list[Event],
               session_id: str | None = None) -> "Session":
        """Rebuild a session by re-running the logged submissions.

        Timestamps come from the log (injected clock), so the result is
        deterministic and its metrics match the original exactly.
        """
        times = iter([e.timestamp for e in events])
        session = cls(scene, session_id=session_id, clock=lambda: next(times))
        for ev in events[1:]:  # the first event is the automatic start
            kind = ev.kind.removeprefix("rejected:")
            sub = submission_from_payload(kind, ev.payload)
            try:
                session.advance(sub)
            except ValidationFailed:
                pass
        return session


def advance(session: Session, submission: Submission) -> Session:
    return session.advance(submission)


def metrics_from_events(events: list[Event]) -> SessionMetrics:
    """Recompute all session metrics from the event log alone."""
    m = SessionMetrics()
    for ev, nxt in zip(events, events[1:]):
        dt_min = (nxt.timestamp - ev.timestamp) / 60.0
        if ev.state_to in TOOL_TASK_STATES:
            m.tool_task_minutes += dt_min
        elif ev.state_to in CAMERA_TASK_STATES:
            m.camera_task_minutes += dt_min
    for ev in events:
        if ev.kind == "repeat" and ev.state_from == SessionState.TOOL_CONFIRM:
            m.tool_adjustments += 1
        elif ev.kind == "repeat" and ev.state_from == SessionState.CAMERA_CONFIRM:
            m.camera_adjustments += 1
        elif ev.kind == "entries" and ev.state_to == SessionState.TOOL_CONFIRM:
            m.left_distance_cm = ev.payload["left_length_mm"] / 10.0
            m.right_distance_cm = ev.payload["right_length_mm"] / 10.0
            m.manipulation_angle_deg = ev.payload["manipulation_angle_deg"]
        elif ev.kind == "confirm" and ev.state_to == SessionState.SUMMARY:
            m.operable_volume_l = ev.payload["operable_volume_l"]
    return m
