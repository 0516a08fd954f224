"""HTTP service exposing the target-resolution loop for live steering.

Plain request/response with JSON bodies: GET /model for the skeleton and
ranges, POST /ik for multi-target resolution, POST /amo for lower-body
reference poses, POST /retarget for hand retargeting. Sessions (an optional
`session` field on requests) carry solver warm starts and nothing else;
replaying a request sequence against a fresh session reproduces the
responses. Model and network parameters are immutable shared state; each
session's warm start is guarded by its own lock.

Every response carries solver statistics and the elapsed time; the 50 ms
per-request budget is soft and reported, never enforced.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .dataset import SamplingRanges
from .geometry import matrix_to_rpy
from .ik import IkTargets, IkWeights, solve_ik, upper_submodel
from .kinematics import fk, foot_corners_world, standing_base_pose, support_polygon
from .model import RobotModel, load_hand, load_humanoid
from .net import MlpParams, forward, load_params
from .retarget import HandKeypoints, compute_keypoint_vectors, retarget
from .wbc import _com_only, base_from_feet

API_VERSION = 1


class PoseTarget(BaseModel):
    position: list[float]
    rotation: list[list[float]]


class IkRequest(BaseModel):
    session: str = "default"
    head: PoseTarget
    left: PoseTarget
    right: PoseTarget
    rotation_weight: float | None = None


class AmoRequest(BaseModel):
    session: str = "default"
    q_upper: list[float]
    rpy: list[float]
    h: float
    q_head: list[float] | None = None


class RetargetRequest(BaseModel):
    session: str = "default"
    hand: str  # "left" | "right"
    keypoints: dict


@dataclass
class SessionState:
    lock: threading.Lock = field(default_factory=threading.Lock)
    ik_warm: np.ndarray | None = None
    retarget_warm: dict = field(default_factory=dict)  # hand -> q


def pose_snapshot(model: RobotModel, base, q: np.ndarray) -> dict:
    """Drawable stick-figure geometry: the client renders exactly this."""
    res = fk(model, base, q)
    root = model.link_index[model.root_link]
    joint_world = {model.joints[j].name: res.joint_pos[j].tolist()
                   for j in range(model.nq)}
    segments = []
    for j in range(model.nq):
        pl = model.joint_parent_link[j]
        pj = model.parent_joint_of_link[pl]
        start = res.link_pos[root] if pj < 0 else res.joint_pos[pj]
        segments.append([start.tolist(), res.joint_pos[j].tolist()])
    frames = {}
    for name in model.frames:
        p, R = res.frames[name]
        frames[name] = {"position": p.tolist(), "rotation": R.tolist()}
        li = model.link_index[model.frames[name].link]
        pj = model.parent_joint_of_link[li]
        if pj >= 0:
            segments.append([res.joint_pos[pj].tolist(), p.tolist()])
    out = {"joints": joint_world, "segments": segments, "frames": frames,
           "base": {"position": np.asarray(base.position).tolist(),
                    "rpy": np.asarray(base.rpy).tolist()}}
    if model.feet is not None:
        corners = foot_corners_world(model, res)
        out["foot_patches"] = [corners[:4].tolist(), corners[4:].tolist()]
    return out


def create_app(model: RobotModel | None = None,
               params: MlpParams | None = None,
               hand: RobotModel | None = None,
               ui_dir: str | None = None) -> FastAPI:
    model = model or load_humanoid()
    hand = hand or load_hand()
    chain = upper_submodel(model)
    base0 = standing_base_pose(model)
    poly = support_polygon(model, base0, np.zeros(model.nq))
    ranges = SamplingRanges()
    app = FastAPI(title="whole-body steering service", version=str(API_VERSION))
    sessions: dict[str, SessionState] = {}
    sessions_lock = threading.Lock()

    def session(name: str) -> SessionState:
        with sessions_lock:
            if name not in sessions:
                sessions[name] = SessionState()
            return sessions[name]

    model_payload = {
        "api_version": API_VERSION,
        "package_version": __version__,
        "name": "g1_desk",
        "joints": [{
            "name": j.name, "parent": j.parent_link, "child": j.child_link,
            "axis": j.axis.tolist(), "limit": [j.lower, j.upper],
        } for j in model.joints],
        "groups": {g: list(names) for g, names in model.groups.items()},
        "feet_size": list(model.feet.size),
        "standing_height": float(base0.position[2]),
        "command_ranges": {
            "height": list(ranges.height), "roll": list(ranges.roll),
            "pitch": list(ranges.pitch), "yaw": list(ranges.yaw),
        },
        "default_pose": pose_snapshot(model, base0, np.zeros(model.nq)),
    }

    @app.get("/model")
    def get_model():
        return model_payload

    @app.post("/ik")
    def post_ik(req: IkRequest):
        t0 = time.perf_counter()
        try:
            targets = IkTargets(
                head=(np.array(req.head.position), np.array(req.head.rotation)),
                left=(np.array(req.left.position), np.array(req.left.rotation)),
                right=(np.array(req.right.position), np.array(req.right.rotation)))
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e))
        weights = IkWeights() if req.rotation_weight is None else \
            IkWeights(rotation=req.rotation_weight)
        st = session(req.session)
        with st.lock:
            sol = solve_ik(model, targets, weights, q_init=st.ik_warm, chain=chain)
            st.ik_warm = sol.q_vector()
        return {
            "q_head": sol.q_head.tolist(),
            "q_left_arm": sol.q_left_arm.tolist(),
            "q_right_arm": sol.q_right_arm.tolist(),
            "q_upper": np.concatenate([sol.q_left_arm, sol.q_right_arm]).tolist(),
            "command": {"rpy": sol.command.rpy.tolist(),
                        "h": sol.command.height},
            "pos_residuals": sol.pos_residuals,
            "rot_residuals": sol.rot_residuals,
            "iterations": sol.iterations,
            "converged": sol.converged,
            "elapsed_ms": 1000.0 * (time.perf_counter() - t0),
            "budget_ms": 50.0,
        }

    @app.post("/amo")
    def post_amo(req: AmoRequest):
        if params is None:
            raise HTTPException(status_code=503,
                                detail="no adaptation-network parameters loaded")
        t0 = time.perf_counter()
        if len(req.q_upper) != 14:
            raise HTTPException(status_code=422, detail="q_upper must have 14 entries")
        if len(req.rpy) != 3:
            raise HTTPException(status_code=422, detail="rpy must have 3 entries")
        x = np.array([*req.q_upper, *req.rpy, req.h], dtype=float)
        if not np.all(np.isfinite(x)):
            raise HTTPException(status_code=422, detail="non-finite input")
        q_low = forward(params, x)
        q = np.zeros(model.nq)
        q[model.upper_indices()] = req.q_upper
        q[model.lower_indices()] = q_low
        if req.q_head is not None:
            hi = model.head_indices()
            if len(req.q_head) != len(hi):
                raise HTTPException(status_code=422,
                                    detail=f"q_head must have {len(hi)} entries")
            q[hi] = req.q_head
        base = base_from_feet(model, q)
        res = fk(model, base, q)
        _, R_t = res.frames["torso"]
        achieved_rpy = matrix_to_rpy(R_t)
        margin = poly.margin(_com_only(model, res)[:2])
        idx = model.lower_indices()
        within = bool(np.all(q_low >= model.limits_lower[idx])
                      and np.all(q_low <= model.limits_upper[idx]))
        return {
            "q_ref_lower": q_low.tolist(),
            "achieved": {"rpy": achieved_rpy.tolist(),
                         "h": float(base.position[2])},
            "com_margin": float(margin),
            "within_limits": within,
            "pose": pose_snapshot(model, base, q),
            "elapsed_ms": 1000.0 * (time.perf_counter() - t0),
        }

    @app.post("/retarget")
    def post_retarget(req: RetargetRequest):
        t0 = time.perf_counter()
        if req.hand not in ("left", "right"):
            raise HTTPException(status_code=422, detail="hand must be left or right")
        try:
            kp = HandKeypoints.from_json(req.keypoints)
        except (KeyError, ValueError) as e:
            raise HTTPException(status_code=422, detail=f"bad keypoints: {e}")
        vectors = compute_keypoint_vectors(kp)
        st = session(req.session)
        with st.lock:
            warm = st.retarget_warm.get(req.hand)
            result = retarget(hand, vectors, q_init=warm)
            st.retarget_warm[req.hand] = result.q.copy()
        return {
            "hand": req.hand,
            "q_hand": result.q.tolist(),
            "objective": result.objective,
            "iterations": result.iterations,
            "converged": result.converged,
            "elapsed_ms": 1000.0 * (time.perf_counter() - t0),
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(port: int, params_path: str | None = None,
          model_path: str | None = None, ui_dir: str | None = None,
          host: str = "127.0.0.1") -> None:
    import uvicorn

    model = load_humanoid(model_path)
    params = load_params(params_path) if params_path else None
    app = create_app(model=model, params=params, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
