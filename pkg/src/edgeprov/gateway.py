"""North-bound HTTP API: sessions, simulator control, SBI-style service
surfaces and the JSON-lines event stream.

One FastAPI application exposes everything the UI and scripts drive:

* ``/sessions...``      conversational provisioning sessions
* ``/npcf/...``         policy control (PCF-style SBI)
* ``/edge/...``         edge node registry and service lifecycle
* ``/sim/...``          explicit simulated-time control (test mode)
* ``/stream``           long-lived JSON-lines event channel (one event per
                        line; resume with ?last_event_id=N)

Simulated time advances explicitly through POST /sim/advance, or on wall
clock when the server runs with a realtime ratio.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import errors as E
from .corenf import QosPolicy
from .edgemgr import Resources
from .env import Environment

_STATUS_BY_ERROR = [
    # 404: unknown ids in the path or addressed entities
    (
        (
            E.PolicyNotFound,
            E.UnknownUe,
            E.ServiceNotFound,
            E.UnknownNode,
            E.ModelNotFound,
            E.XAppNotFound,
            E.SessionNotFound,
            E.UnknownFlow,
            E.UnknownCell,
            E.UnknownSlice,
        ),
        404,
    ),
    # 409: valid request at the wrong moment
    ((E.OutOfTurn, E.ServiceUnavailable), 409),
    # 502: upstream backends
    ((E.BackendUnavailable, E.RemoteUnreachable), 502),
    # 400: anything else the caller phrased wrongly
    (
        (
            E.SchemaError,
            E.BrokenReference,
            E.TickMisaligned,
            E.PolicyValidationError,
            E.UnknownTarget,
            E.EmptySelector,
            E.BadPeriod,
            E.BadSubscription,
            E.OutOfRange,
            E.SpecInvalid,
            E.DuplicateNode,
            E.InvalidNode,
            E.InsufficientCapacity,
            E.NotServable,
            E.UnknownTask,
            E.NoCandidates,
            E.EmptyIntent,
            E.NoFeasibleNode,
            E.TooShort,
            E.BadParams,
            E.NoData,
        ),
        400,
    ),
]


class CreateSessionBody(BaseModel):
    description: str


class MessageBody(BaseModel):
    text: str


class ModelChoiceBody(BaseModel):
    index: int


class DeployConfirmBody(BaseModel):
    accept: bool
    node_id: str | None = None


class AdvanceBody(BaseModel):
    ms: int


class PolicyBody(BaseModel):
    policy_id: str | None = None
    target_ue_ids: list[str]
    slice_id: str | None = None
    gbr_ul_mbps: float | None = None
    gbr_dl_mbps: float | None = None
    mbr_ul_mbps: float | None = None
    mbr_dl_mbps: float | None = None
    priority_level: int | None = None
    steering_dest_node_id: str | None = None

    def to_policy(self) -> QosPolicy:
        return QosPolicy(**self.model_dump())


class DeployServiceBody(BaseModel):
    model_id: str
    node_id: str
    resources: dict | None = None


@dataclass
class ApiSession:
    session_id: str
    created_at: float


class RealtimeTicker:
    """Advances simulated time at ratio x wall clock in 10 ms quanta."""

    def __init__(self, env: Environment, ratio: float):
        self._env = env
        self._ratio = ratio
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._carry = 0.0

    def start(self):
        self._thread.start()

    def stop(self):
        self._stop.set()

    def _loop(self):
        last = time.monotonic()
        while not self._stop.wait(0.05):
            now = time.monotonic()
            self._carry += (now - last) * 1000.0 * self._ratio
            last = now
            ticks = int(self._carry // 10)
            if ticks > 0:
                self._carry -= ticks * 10
                self._env.advance(ticks * 10)


def create_app(
    env: Environment,
    *,
    realtime_ratio: float | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="edgeprov gateway", version="0.1.0")
    app.state.env = env
    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    api_sessions: dict[str, ApiSession] = {}
    ticker: RealtimeTicker | None = None
    if realtime_ratio:
        ticker = RealtimeTicker(env, realtime_ratio)

        @app.on_event("startup")
        def _start_ticker():
            ticker.start()

        @app.on_event("shutdown")
        def _stop_ticker():
            ticker.stop()

    @app.exception_handler(E.EdgeProvError)
    async def _domain_error(request: Request, exc: E.EdgeProvError):
        for classes, status in _STATUS_BY_ERROR:
            if isinstance(exc, classes):
                return JSONResponse(
                    status_code=status,
                    content={"error": type(exc).__name__, "detail": str(exc)},
                )
        return JSONResponse(status_code=500, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "ValueError", "detail": str(exc)})

    def _session(session_id: str):
        session = env.agent.sessions.get(session_id)
        if session is None:
            raise E.SessionNotFound(session_id)
        return session

    # -- sessions ------------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = env.agent.start_session(body.description)
        api_sessions[session.session_id] = ApiSession(session.session_id, time.time())
        reply = session.transcript[-1]["text"]
        return {"session_id": session.session_id, "stage": session.stage, "reply": reply}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        session = _session(session_id)
        reply = env.agent.handle_message(session, body.text)
        env.agent.run_until_blocked(session)
        return {"session_id": session_id, "stage": session.stage, "reply": reply.text}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session(session_id).as_dict()

    @app.post("/sessions/{session_id}/model-choice")
    def model_choice(session_id: str, body: ModelChoiceBody):
        session = _session(session_id)
        env.agent.choose_model(session, body.index)
        env.agent.run_until_blocked(session)
        return {"session_id": session_id, "stage": session.stage, "plan": session.plan.as_dict()}

    @app.post("/sessions/{session_id}/deploy-confirm")
    def deploy_confirm(session_id: str, body: DeployConfirmBody):
        session = _session(session_id)
        env.agent.confirm_deploy(session, body.accept, node_id=body.node_id)
        env.agent.run_until_blocked(session)
        return {
            "session_id": session_id,
            "stage": session.stage,
            "plan": session.plan.as_dict() if session.plan else None,
        }

    # -- policy control (PCF SBI) ------------------------------------------------------

    @app.post("/npcf/policies", status_code=201)
    def create_policy(body: PolicyBody):
        policy_id = env.pcf.create_policy(body.to_policy())
        return env.pcf.get_policy(policy_id).as_dict()

    @app.put("/npcf/policies/{policy_id}")
    def update_policy(policy_id: str, body: PolicyBody):
        env.pcf.update_policy(policy_id, body.to_policy())
        return env.pcf.get_policy(policy_id).as_dict()

    @app.get("/npcf/policies/{policy_id}")
    def get_policy(policy_id: str):
        return env.pcf.get_policy(policy_id).as_dict()

    @app.get("/npcf/ues/{ue_id}/effective-rules")
    def effective_rules(ue_id: str):
        return env.pcf.resolve_effective_rules(ue_id).as_dict()

    # -- edge infrastructure ---------------------------------------------------------------

    @app.get("/edge/nodes")
    def edge_nodes():
        return [n.as_dict() for n in env.edge.list_nodes()]

    @app.post("/edge/services", status_code=201)
    def deploy_edge_service(body: DeployServiceBody):
        card = env.models.card(body.model_id)
        env.models.assess(card)
        res = body.resources or {}
        resources = Resources(
            cpu=int(res.get("cpu", card.min_cpu)),
            mem_mb=int(res.get("mem_mb", card.min_mem_mb)),
            gpu=int(res.get("gpu", 1 if card.gpu_required else 0)),
        )
        instance = env.edge.deploy_service(card, body.node_id, resources)
        return instance.as_dict()

    @app.get("/edge/services/{instance_id}")
    def get_edge_service(instance_id: str):
        return env.edge.get_service(instance_id).as_dict()

    @app.delete("/edge/services/{instance_id}")
    def delete_edge_service(instance_id: str):
        env.edge.terminate_service(instance_id)
        return {"instance_id": instance_id, "state": "terminated"}

    @app.get("/services")
    def list_services():
        return [i.as_dict() for i in env.edge.list_services()]

    # -- simulated time ------------------------------------------------------------------------

    @app.get("/sim/time")
    def sim_time():
        return {"t_ms": env.now}

    @app.post("/sim/advance")
    def sim_advance(body: AdvanceBody):
        return {"t_ms": env.advance(body.ms)}

    # -- event stream -----------------------------------------------------------------------------

    @app.get("/stream")
    def stream(last_event_id: int = 0, max_events: int = 0, timeout_s: float = 0.0):
        """JSON-lines event stream; one event object per line.

        max_events/timeout_s bound the connection for polling clients and
        tests; the defaults keep it open indefinitely.
        """
        sub_id, live, replayed = env.hub.subscribe(last_event_id)
        deadline = time.monotonic() + timeout_s if timeout_s > 0 else None

        def generate():
            sent = 0
            try:
                for event in replayed:
                    yield json.dumps(event.as_dict(), sort_keys=True) + "\n"
                    sent += 1
                    if max_events and sent >= max_events:
                        return
                while True:
                    if deadline is not None and time.monotonic() > deadline:
                        return
                    try:
                        event = live.get(timeout=0.2)
                    except queue.Empty:
                        if deadline is not None:
                            continue
                        yield json.dumps({"event": "heartbeat", "id": 0}) + "\n"
                        continue
                    yield json.dumps(event.as_dict(), sort_keys=True) + "\n"
                    sent += 1
                    if max_events and sent >= max_events:
                        return
            finally:
                env.hub.unsubscribe(sub_id)

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    return app
