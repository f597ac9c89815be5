"""HTTP JSON API for the interactive planner UI.

Sessions live in process memory (documented volatility); the scene geometry
endpoint is pure. Submissions within one session are serialized behind a
lock, wrong-state submissions return 409, and resubmitting the payload that
produced the current state replays the stored success response, so client
retries are idempotent.
"""
from __future__ import annotations

import threading
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import __version__
from .geometry import GeometryError
from .manifest import config_dict, report_json, results_json_list
from .rules import AnatomicalScene, PlacementError
from .session import (
    CameraSubmission,
    Confirm,
    EndpointPair,
    EntryPair,
    Repeat,
    Session,
    SessionState,
    ValidationFailed,
    WrongStateError,
)
from .voxel import MM3_PER_LITER

Point3 = tuple[float, float, float]


class EndpointsIn(BaseModel):
    type: Literal["endpoints"]
    left_mm: Point3
    right_mm: Point3


class EntriesIn(BaseModel):
    type: Literal["entries"]
    left_mm: Point3
    right_mm: Point3


class CameraIn(BaseModel):
    type: Literal["camera"]
    tip_mm: Point3
    tube_axis: Point3
    tube_length_mm: float | None = None
    tilt_deg: float | None = None
    roll_deg: float = 0.0
    fov_deg: float | None = None


SubmissionIn = EndpointsIn | EntriesIn | CameraIn


class SubmissionBody(BaseModel):
    submission: SubmissionIn = Field(discriminator="type")


def _to_submission(body: SubmissionIn, scene: AnatomicalScene):
    if body.type == "endpoints":
        return EndpointPair(np.asarray(body.left_mm), np.asarray(body.right_mm))
    if body.type == "entries":
        return EntryPair(np.asarray(body.left_mm), np.asarray(body.right_mm))
    cfg = scene.config
    from .geometry import CameraPose

    try:
        pose = CameraPose(
            tip=np.asarray(body.tip_mm),
            tube_axis=np.asarray(body.tube_axis),
            tube_length_mm=body.tube_length_mm or cfg.tube_length_mm,
            tilt_deg=cfg.tilt_deg if body.tilt_deg is None else body.tilt_deg,
            roll_deg=body.roll_deg,
            fov_deg=body.fov_deg or cfg.fov_deg,
        )
    except GeometryError as exc:
        raise HTTPException(422, detail=str(exc)) from None
    return CameraSubmission(pose)


class _SessionBox:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.last_accepted: tuple[str, dict] | None = None
        self.last_response: dict | None = None


def scene_geometry(scene: AnatomicalScene) -> dict:
    return {
        "meshes": [
            {
                "name": sm.name,
                "role": sm.role,
                "vertices_mm": sm.mesh.vertices.ravel().tolist(),
                "triangles": sm.mesh.triangles.ravel().tolist(),
            }
            for sm in scene.meshes
        ],
        "convergent_point_mm": scene.convergent_point.tolist(),
        "tool_entry_region": sorted(scene.tool_entry_region),
        "camera_entry_region": sorted(scene.camera_entry_region),
        "defaults": config_dict(scene.config),
        "engine_version": __version__,
    }


def create_app(scene: AnatomicalScene) -> FastAPI:
    app = FastAPI(title="trocarplan", version=__version__)
    boxes: dict[str, _SessionBox] = {}

    def box_of(session_id: str) -> _SessionBox:
        box = boxes.get(session_id)
        if box is None:
            raise HTTPException(404, detail=f"unknown session {session_id!r}")
        return box

    @app.post("/sessions", status_code=201)
    def create_session():
        session = Session(scene)
        boxes[session.id] = _SessionBox(session)
        return {"session_id": session.id, "state": session.state.value}

    @app.get("/scene")
    def get_scene():
        return scene_geometry(scene)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        s = box_of(session_id).session
        return {
            "session_id": s.id,
            "state": s.state.value,
            "tool_adjustments": s.tool_adjustments,
            "camera_adjustments": s.camera_adjustments,
            "placements": {
                "endpoints": bool(s.endpoints),
                "entries": bool(s.trajectories),
                "camera": s.camera is not None,
            },
        }

    @app.post("/sessions/{session_id}/validate")
    def validate(session_id: str, body: SubmissionBody):
        """Rule feedback for the current state without advancing it."""
        box = box_of(session_id)
        sub = _to_submission(body.submission, scene)
        with box.lock:
            session = box.session
            state = session.state
            try:
                results = _dry_run(session, sub)
            except WrongStateError as exc:
                raise HTTPException(409, detail=str(exc)) from None
            except (PlacementError, GeometryError) as exc:
                raise HTTPException(422, detail=str(exc)) from None
            assert session.state == state
        hard = [r for r in results if r.rule != "manipulation_angle"]
        return {"state": state.value, "rules": results_json_list(results),
                "valid": all(r.passed for r in hard)}

    @app.post("/sessions/{session_id}/submit")
    def submit(session_id: str, body: SubmissionBody):
        box = box_of(session_id)
        sub = _to_submission(body.submission, scene)
        with box.lock:
            session = box.session
            key = (sub.kind, sub.payload())
            if box.last_accepted == key and box.last_response is not None:
                return box.last_response   # idempotent retry of the accepted payload
            try:
                session.advance(sub)
            except WrongStateError as exc:
                raise HTTPException(409, detail=str(exc)) from None
            except ValidationFailed as exc:
                return {"accepted": False, "state": session.state.value,
                        "rules": results_json_list(exc.results), "valid": False}
            except (PlacementError, GeometryError) as exc:
                raise HTTPException(422, detail=str(exc)) from None
            response = {"accepted": True, "state": session.state.value,
                        "rules": results_json_list(session.last_results), "valid": True}
            box.last_accepted = key
            box.last_response = response
        return response

    @app.post("/sessions/{session_id}/confirm")
    def confirm(session_id: str):
        return _flow(box_of(session_id), Confirm())

    @app.post("/sessions/{session_id}/repeat")
    def repeat(session_id: str):
        return _flow(box_of(session_id), Repeat())

    def _flow(box: _SessionBox, sub):
        with box.lock:
            try:
                box.session.advance(sub)
            except WrongStateError as exc:
                raise HTTPException(409, detail=str(exc)) from None
            box.last_accepted = None
            box.last_response = None
            return {"state": box.session.state.value}

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        s = box_of(session_id).session
        if s.report is None:
            raise HTTPException(409, detail="plan is not evaluated yet (confirm the camera)")
        return Response(content=report_json(s.report), media_type="application/json")

    @app.get("/sessions/{session_id}/overlap")
    def overlap(session_id: str):
        from .rules import operable_overlap_cells

        s = box_of(session_id).session
        if s.report is None:
            raise HTTPException(409, detail="plan is not evaluated yet (confirm the camera)")
        cells = operable_overlap_cells(s.trajectories["left"], s.trajectories["right"],
                                       s.camera, scene)
        spacing = scene.config.spacing_mm
        return {
            "spacing_mm": spacing,
            "cell_count": len(cells),
            "volume_l": len(cells) * spacing ** 3 / MM3_PER_LITER,
            "cells_mm": cells.tolist(),
        }

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        return box_of(session_id).session.metrics().to_dict()

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        return Response(content=box_of(session_id).session.export_event_log(),
                        media_type="application/x-ndjson")

    return app


def _dry_run(session: Session, sub):
    """Evaluate a submission's rules against the session without mutating it."""
    from .rules import check_camera, check_endpoint, check_trajectory, manipulation_angle, plan_cones
    from .geometry import make_trajectory
    from .rules import project_entry_to_skin

    scene = session.scene
    state = session.state
    if isinstance(sub, EndpointPair):
        if state != SessionState.TOOL_ENDPOINTS:
            raise WrongStateError(state, sub.kind)
        return [check_endpoint(sub.left, scene, "left_endpoint"),
                check_endpoint(sub.right, scene, "right_endpoint")]
    if isinstance(sub, EntryPair):
        if state != SessionState.TOOL_ENTRIES:
            raise WrongStateError(state, sub.kind)
        results = []
        trajs = {}
        for hand, point in (("left", sub.left), ("right", sub.right)):
            snapped, _ = project_entry_to_skin(scene, point)
            traj = make_trajectory(snapped, session.endpoints[hand], hand)
            trajs[hand] = traj
            results += check_trajectory(traj, scene)
        results.append(manipulation_angle(trajs["left"], trajs["right"],
                                          scene.config.snap_tol_mm))
        return results
    if isinstance(sub, CameraSubmission):
        if state != SessionState.CAMERA_PLACE:
            raise WrongStateError(state, sub.kind)
        cones = plan_cones(session.trajectories["left"], session.trajectories["right"],
                           sub.pose, scene)
        return check_camera(sub.pose, scene, (cones[0], cones[1]))
    raise WrongStateError(state, sub.kind)
