"""The orchestrator: a five-stage task pipeline with an auditable transcript.

Stages: INTENT -> MODEL_MATCH -> AWAIT_MODEL_CHOICE -> AWAIT_DEPLOY_CONFIRM
-> DEPLOY -> ADAPT -> MONITOR -> COMPLETE (FAILED from any stage on error;
MODEL_MATCH may fall back to INTENT when filtering leaves no candidate).

Every externally visible side effect goes through a recorded tool call, so
the transcript pairs one tool_result with each tool_call.  The planner
backend (scripted or remote) is consulted for requirement interpretation
and for adaptation decisions; whatever it proposes is validated against
the permissible action catalog before anything executes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .corenf import QosPolicy
from .edgemgr import Resources
from .errors import (
    CatalogViolation,
    EdgeProvError,
    EmptyIntent,
    NoCandidates,
    NoFeasibleNode,
    OutOfTurn,
)
from .monitor import Predictor, Threshold, XAppSpec
from .planner import (
    ActionsDecision,
    PlannerContext,
    ProfileDecision,
    ScriptedPlanner,
    load_planner_rules,
)
from .ric import ControlRequest

INTENT = "INTENT"
MODEL_MATCH = "MODEL_MATCH"
AWAIT_MODEL_CHOICE = "AWAIT_MODEL_CHOICE"
AWAIT_DEPLOY_CONFIRM = "AWAIT_DEPLOY_CONFIRM"
DEPLOY = "DEPLOY"
ADAPT = "ADAPT"
MONITOR = "MONITOR"
COMPLETE = "COMPLETE"
FAILED = "FAILED"

STAGE_ORDER = [
    INTENT,
    MODEL_MATCH,
    AWAIT_MODEL_CHOICE,
    AWAIT_DEPLOY_CONFIRM,
    DEPLOY,
    ADAPT,
    MONITOR,
    COMPLETE,
]
INTERACTIVE_STAGES = (INTENT, AWAIT_MODEL_CHOICE, AWAIT_DEPLOY_CONFIRM)
RUNNABLE_STAGES = (MODEL_MATCH, DEPLOY, ADAPT, MONITOR)

SEARCH_LIMIT = 10
MAX_DEPLOY_WAIT_TICKS = 50


@dataclass
class UseCaseProfile:
    description: str
    application_category: str | None = None
    max_latency_ms: float | None = None
    min_ul_mbps: float | None = None
    min_dl_mbps: float | None = None
    device_count: int | None = None
    device_type: str | None = None
    coverage_cell_ids: list[str] = field(default_factory=list)
    deployment_deadline: str | None = None

    REQUIRED = ("application_category", "max_latency_ms", "min_ul_mbps", "device_count", "coverage_cell_ids")

    @property
    def status(self) -> str:
        return "complete" if self.is_complete() else "collecting"

    def is_complete(self) -> bool:
        return (
            bool(self.application_category)
            and (self.max_latency_ms or 0) > 0
            and (self.min_ul_mbps or 0) > 0
            and (self.device_count or 0) > 0
            and len(self.coverage_cell_ids) > 0
        )

    def update(self, fields: dict) -> list[str]:
        updated = []
        for key, value in fields.items():
            if value is None or not hasattr(self, key) or key == "description":
                continue
            if key == "coverage_cell_ids" and not isinstance(value, list):
                value = [str(value)]
            if key == "device_count":
                value = int(value)
            setattr(self, key, value)
            updated.append(key)
        return sorted(updated)

    def as_dict(self) -> dict:
        return {
            "description": self.description,
            "application_category": self.application_category,
            "max_latency_ms": self.max_latency_ms,
            "min_ul_mbps": self.min_ul_mbps,
            "min_dl_mbps": self.min_dl_mbps,
            "device_count": self.device_count,
            "device_type": self.device_type,
            "coverage_cell_ids": list(self.coverage_cell_ids),
            "deployment_deadline": self.deployment_deadline,
            "status": self.status,
        }


@dataclass
class DeploymentPlan:
    model_id: str
    node_id: str
    resources: Resources
    deploy_at: int
    score: float
    scores_by_node: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "node_id": self.node_id,
            "resources": self.resources.as_dict(),
            "deploy_at": self.deploy_at,
            "score": self.score,
            "scores_by_node": dict(self.scores_by_node),
        }


@dataclass
class NetworkAction:
    kind: str
    payload: dict
    rationale: str
    result: dict | None = None

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "payload": dict(self.payload),
            "rationale": self.rationale,
            "result": self.result,
        }


@dataclass
class AgentReply:
    session_id: str
    stage: str
    text: str


@dataclass
class SessionState:
    session_id: str
    stage: str
    profile: UseCaseProfile
    candidates: list = field(default_factory=list)
    chosen_model: object | None = None
    plan: DeploymentPlan | None = None
    instance_id: str | None = None
    service_endpoint: dict | None = None
    applied_actions: list[NetworkAction] = field(default_factory=list)
    policy_ids: list[str] = field(default_factory=list)
    xapp_ids: list[str] = field(default_factory=list)
    transcript: list[dict] = field(default_factory=list)
    failure: str | None = None
    _seq: int = 0

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def add_message(self, role: str, text: str) -> None:
        self.transcript.append(
            {"seq": self._next_seq(), "kind": "message", "role": role, "text": text}
        )

    def add_tool_call(self, name: str, args: dict) -> int:
        seq = self._next_seq()
        self.transcript.append({"seq": seq, "kind": "tool_call", "name": name, "args": args})
        return seq

    def add_tool_result(self, call_seq: int, name: str, ok: bool, payload) -> None:
        self.transcript.append(
            {
                "seq": self._next_seq(),
                "kind": "tool_result",
                "call_seq": call_seq,
                "name": name,
                "ok": ok,
                "result" if ok else "error": payload,
            }
        )

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "stage": self.stage,
            "profile": self.profile.as_dict(),
            "candidates": [c.as_dict() for c in self.candidates],
            "chosen_model": self.chosen_model.as_dict() if self.chosen_model else None,
            "plan": self.plan.as_dict() if self.plan else None,
            "instance_id": self.instance_id,
            "service_endpoint": self.service_endpoint,
            "applied_actions": [a.as_dict() for a in self.applied_actions],
            "policy_ids": list(self.policy_ids),
            "xapp_ids": list(self.xapp_ids),
            "failure": self.failure,
            "transcript": [dict(e) for e in self.transcript],
        }


class Orchestrator:
    """Drives sessions against an environment (sim + network + edge tools)."""

    def __init__(self, env, planner=None, rules: dict | None = None):
        self.env = env
        self.planner = planner or ScriptedPlanner()
        self.rules = rules or load_planner_rules()
        self._session_counter = 0
        self.sessions: dict[str, SessionState] = {}
        self.on_stage_change = []  # callbacks (session, old, new)

    # -- session lifecycle ---------------------------------------------------------

    def start_session(self, description: str) -> SessionState:
        if not description or not description.strip():
            raise EmptyIntent("use case description must be non-empty")
        self._session_counter += 1
        session = SessionState(
            session_id=f"session-{self._session_counter:04d}",
            stage=INTENT,
            profile=UseCaseProfile(description=description.strip()),
        )
        self.sessions[session.session_id] = session
        session.add_message("user", description.strip())
        reply = self._intent_step(session, description)
        session.add_message("agent", reply)
        return session

    def handle_message(self, session: SessionState, text: str) -> AgentReply:
        if session.stage not in INTERACTIVE_STAGES:
            raise OutOfTurn(f"session is in stage {session.stage}")
        session.add_message("user", text)
        if session.stage == INTENT:
            reply = self._intent_step(session, text)
        elif session.stage == AWAIT_MODEL_CHOICE:
            reply = self._choice_step(session, text)
        else:
            reply = self._confirm_step(session, text)
        session.add_message("agent", reply)
        return AgentReply(session.session_id, session.stage, reply)

    def _set_stage(self, session: SessionState, new_stage: str) -> None:
        old = session.stage
        if old == new_stage:
            return
        session.stage = new_stage
        for hook in self.on_stage_change:
            hook(session, old, new_stage)

    # -- interactive steps ------------------------------------------------------------

    def _intent_step(self, session: SessionState, text: str) -> str:
        decision = self.planner.decide(self._context(session, last_user_text=text))
        if not isinstance(decision, ProfileDecision):
            return "Could you describe the use case requirements?"
        updated = session.profile.update(decision.fields)
        noted = f"Noted {', '.join(updated)}. " if updated else ""
        if session.profile.is_complete():
            self._set_stage(session, MODEL_MATCH)
            return noted + "Requirements are complete; searching for suitable AI models."
        question = decision.question or "Could you tell me more about the requirements?"
        return noted + question

    def _choice_step(self, session: SessionState, text: str) -> str:
        match = re.search(r"-?\d+", text)
        if not match:
            return (
                f"Please pick a model by index (0..{len(session.candidates) - 1}) "
                "from the list above."
            )
        try:
            self.choose_model(session, int(match.group()))
        except (ValueError, NoFeasibleNode) as exc:
            return f"That choice did not work ({exc}). Pick another index."
        plan = session.plan
        return (
            f"Planned deployment of {plan.model_id} on node {plan.node_id} "
            f"(score {plan.score:.4f}). Deploy now? (yes/no)"
        )

    def _confirm_step(self, session: SessionState, text: str) -> str:
        lowered = text.strip().lower()
        if re.search(r"\b(yes|y|ok|okay|accept|confirm|deploy|go)\b", lowered):
            self.confirm_deploy(session, True)
            return "Deploying the service now."
        if re.search(r"\b(no|n|reject|cancel|wait)\b", lowered):
            return "Keeping the plan on hold. Say yes to deploy, or name another node."
        return "Please answer yes or no."

    def choose_model(self, session: SessionState, index: int):
        if session.stage != AWAIT_MODEL_CHOICE:
            raise OutOfTurn(f"session is in stage {session.stage}")
        if not 0 <= index < len(session.candidates):
            raise ValueError(f"model index {index} out of range 0..{len(session.candidates) - 1}")
        session.chosen_model = session.candidates[index]
        plan = self._call(session, "plan_deployment", {"model_id": session.chosen_model.model_id},
                          lambda: self.plan_deployment(session, session.chosen_model))
        session.plan = plan
        self._set_stage(session, AWAIT_DEPLOY_CONFIRM)
        return session.chosen_model

    def confirm_deploy(self, session: SessionState, accept: bool, node_id: str | None = None) -> None:
        if session.stage != AWAIT_DEPLOY_CONFIRM:
            raise OutOfTurn(f"session is in stage {session.stage}")
        if node_id is not None and node_id != session.plan.node_id:
            plan = self._call(
                session,
                "plan_deployment",
                {"model_id": session.chosen_model.model_id, "pinned_node_id": node_id},
                lambda: self.plan_deployment(session, session.chosen_model, pinned_node_id=node_id),
            )
            session.plan = plan
        if accept:
            self._set_stage(session, DEPLOY)

    # -- stage runner -------------------------------------------------------------------

    def run_stage(self, session: SessionState) -> SessionState:
        if session.stage not in RUNNABLE_STAGES:
            raise OutOfTurn(f"stage {session.stage} is not runnable")
        runner = {
            MODEL_MATCH: self._run_model_match,
            DEPLOY: self._run_deploy,
            ADAPT: self._run_adapt,
            MONITOR: self._run_monitor,
        }[session.stage]
        try:
            runner(session)
        except EdgeProvError as exc:
            session.failure = f"{type(exc).__name__}: {exc}"
            session.add_message("agent", f"Stage {session.stage} failed: {session.failure}")
            self._set_stage(session, FAILED)
        return session

    def run_until_blocked(self, session: SessionState) -> SessionState:
        while session.stage in RUNNABLE_STAGES:
            self.run_stage(session)
        return session

    def _call(self, session: SessionState, name: str, args: dict, fn):
        """Execute one tool call with transcript bookkeeping."""
        seq = session.add_tool_call(name, args)
        try:
            result = fn()
        except Exception as exc:
            session.add_tool_result(seq, name, False, f"{type(exc).__name__}: {exc}")
            raise
        session.add_tool_result(seq, name, True, _summarize(result))
        return result

    # -- MODEL_MATCH ----------------------------------------------------------------------

    def _run_model_match(self, session: SessionState) -> None:
        task = session.profile.application_category
        cards = self._call(
            session,
            "search_models",
            {"task_tag": task, "limit": SEARCH_LIMIT},
            lambda: self.env.models.search_models(task, SEARCH_LIMIT),
        )
        for card in cards:
            self._call(
                session,
                "fetch_readme",
                {"model_id": card.model_id},
                lambda card=card: self.env.models.fetch_readme(card.model_id),
            )
            self._call(
                session,
                "assess_servability",
                {"model_id": card.model_id},
                lambda card=card: self.env.models.assess(card),
            )
        try:
            kept = self._call(
                session,
                "filter_and_rank",
                {"cards": [c.model_id for c in cards]},
                lambda: self.env.models.filter_and_rank(cards, session.profile, self.env.edge.list_nodes()),
            )
        except NoCandidates:
            self._set_stage(session, INTENT)
            session.add_message(
                "agent",
                "No servable, deployable model matched; could you relax the requirements "
                "or describe the task differently?",
            )
            return
        session.candidates = kept
        self._set_stage(session, AWAIT_MODEL_CHOICE)
        listing = "; ".join(
            f"[{i}] {c.model_id} ({c.downloads} downloads, {c.size_mb:g} MB)"
            for i, c in enumerate(kept)
        )
        session.add_message(
            "agent",
            f"Found {len(kept)} deployable models for '{task}': {listing}. "
            "Reply with the index to select one.",
        )

    # -- deployment planning ----------------------------------------------------------------

    def plan_deployment(self, session: SessionState, model, pinned_node_id: str | None = None) -> DeploymentPlan:
        profile = session.profile
        if not profile.is_complete() or model is None:
            raise NoFeasibleNode("profile incomplete or no model chosen")
        planning = self.rules["planning"]
        budget = planning["latency_budget_fraction"] * profile.max_latency_ms
        resources = Resources(
            cpu=model.min_cpu, mem_mb=model.min_mem_mb, gpu=1 if model.gpu_required else 0
        )
        scores: dict[str, float] = {}
        feasible = []
        for node in self.env.edge.list_nodes():
            if pinned_node_id is not None and node.node_id != pinned_node_id:
                continue
            if node.free_cpu < resources.cpu or node.free_mem < resources.mem_mb:
                continue
            if resources.gpu and node.free_gpu < resources.gpu:
                continue
            attach = [node.attach_latency_ms.get(c) for c in profile.coverage_cell_ids]
            if any(a is None for a in attach):
                continue
            score = (
                planning["latency_weight"] * (1.0 - max(attach) / budget)
                + planning["cpu_weight"] * (node.free_cpu / node.cpu_cores)
            )
            scores[node.node_id] = score
            feasible.append((node, score))
        if not feasible:
            raise NoFeasibleNode(
                f"no node can host {model.model_id} with {resources.as_dict()} "
                f"covering {profile.coverage_cell_ids}"
            )
        feasible.sort(key=lambda pair: (-pair[1], pair[0].node_id))
        best, best_score = feasible[0]
        return DeploymentPlan(
            model_id=model.model_id,
            node_id=best.node_id,
            resources=resources,
            deploy_at=self.env.sim.now,
            score=best_score,
            scores_by_node=scores,
        )

    # -- DEPLOY ------------------------------------------------------------------------------

    def _run_deploy(self, session: SessionState) -> None:
        plan = session.plan
        instance = self._call(
            session,
            "deploy_service",
            {"model_id": plan.model_id, "node_id": plan.node_id, "resources": plan.resources.as_dict()},
            lambda: self.env.edge.deploy_service(session.chosen_model, plan.node_id, plan.resources),
        )
        session.instance_id = instance.instance_id

        def wait_running():
            for _ in range(MAX_DEPLOY_WAIT_TICKS):
                state = self.env.edge.get_service(instance.instance_id).state
                if state == "running":
                    return {"state": state, "waited_ms": self.env.sim.now - instance.started_at_ms}
                self.env.advance(10)
            raise NoFeasibleNode(f"service did not reach running state: {state}")

        self._call(session, "await_service_running", {"instance_id": instance.instance_id}, wait_running)
        session.service_endpoint = self.env.edge.get_service(instance.instance_id).endpoint
        session.add_message(
            "agent",
            f"Service {instance.instance_id} is running at "
            f"{session.service_endpoint['host']}:{session.service_endpoint['port']}.",
        )
        self._set_stage(session, ADAPT)

    # -- ADAPT --------------------------------------------------------------------------------

    def decide_adaptation(self, session: SessionState) -> list[NetworkAction]:
        ctx = self._context(session)
        decision = self.planner.decide(ctx)
        if not isinstance(decision, ActionsDecision):
            raise CatalogViolation(
                f"planner returned a non-action decision for ADAPT: {type(decision).__name__}"
            )
        catalog = set(self.rules["action_catalog"])
        actions = []
        for raw in decision.actions:
            kind = raw.get("kind")
            if kind not in catalog:
                raise CatalogViolation(f"action kind '{kind}' is outside the permissible catalog")
            payload = raw.get("payload")
            if not isinstance(payload, dict):
                raise CatalogViolation(f"action '{kind}' carries no payload object")
            actions.append(NetworkAction(kind=kind, payload=payload, rationale=raw.get("rationale", "")))
        return actions

    def _run_adapt(self, session: SessionState) -> None:
        actions = self._call(
            session,
            "decide_adaptation",
            {"planner": self.planner.name},
            lambda: self.decide_adaptation(session),
        )
        for action in actions:
            result = self._call(
                session,
                action.kind,
                action.payload,
                lambda action=action: self._execute_action(session, action),
            )
            action.result = result
            session.applied_actions.append(action)
        if actions:
            self._call(
                session,
                "await_adaptation_effective",
                {"ms": 30},
                lambda: self.env.advance(30),
            )
        self._set_stage(session, MONITOR)

    def _execute_action(self, session: SessionState, action: NetworkAction) -> dict:
        if action.kind in ("create_qos_policy", "steer_traffic"):
            payload = dict(action.payload)
            policy = QosPolicy(
                policy_id=None,
                target_ue_ids=list(payload.get("target_ue_ids", [])),
                slice_id=payload.get("slice_id"),
                gbr_ul_mbps=payload.get("gbr_ul_mbps"),
                gbr_dl_mbps=payload.get("gbr_dl_mbps"),
                mbr_ul_mbps=payload.get("mbr_ul_mbps"),
                mbr_dl_mbps=payload.get("mbr_dl_mbps"),
                priority_level=payload.get("priority_level"),
                steering_dest_node_id=payload.get("steering_dest_node_id"),
            )
            policy_id = self.env.pcf.create_policy(policy)
            session.policy_ids.append(policy_id)
            return {"policy_id": policy_id}
        if action.kind == "update_qos_policy":
            payload = dict(action.payload)
            policy_id = payload.pop("policy_id")
            policy = QosPolicy(policy_id=policy_id, **payload)
            self.env.pcf.update_policy(policy_id, policy)
            return {"policy_id": policy_id}
        if action.kind == "ran_slice_control":
            request = ControlRequest(
                request_id=None,
                cell_id=action.payload["cell_id"],
                slice_id=action.payload["slice_id"],
                new_scheduling_weight=action.payload.get("new_scheduling_weight"),
                new_dedicated_ratio=action.payload.get("new_dedicated_ratio"),
            )
            ack = self.env.ric.send_control(request)
            return ack.as_dict()
        raise CatalogViolation(f"no executor for action kind '{action.kind}'")

    # -- MONITOR -----------------------------------------------------------------------------

    def generate_xapp_spec(self, session: SessionState) -> XAppSpec:
        mon = self.rules["monitoring"]
        profile = session.profile
        thresholds = [
            Threshold("latency_ms", "gt", float(profile.max_latency_ms), mon["consecutive_k"]),
            Threshold(
                "throughput_mbps",
                "lt",
                mon["throughput_alert_fraction"] * float(profile.min_ul_mbps),
                mon["consecutive_k"],
            ),
            Threshold("available", "lt", 1.0, mon["consecutive_k"]),
        ]
        return XAppSpec(
            metrics=["latency_ms", "throughput_mbps", "loss_rate", "jitter_ms", "available"],
            selector={"ue_ids": self._target_ues(session)},
            period_ms=mon["period_ms"],
            thresholds=thresholds,
            predictor=Predictor(
                alpha=mon["holt_alpha"], beta=mon["holt_beta"], horizon_steps=mon["holt_horizon"]
            ),
            track_inference=True,
            report_every_periods=mon["report_every_periods"],
        )

    def _run_monitor(self, session: SessionState) -> None:
        spec = self._call(
            session,
            "generate_xapp_spec",
            {"session_id": session.session_id},
            lambda: self.generate_xapp_spec(session),
        )
        xapp_id = self._call(
            session, "deploy_xapp", {"spec": spec.as_dict()}, lambda: self.env.ric.deploy_xapp(spec)
        )
        session.xapp_ids.append(xapp_id)
        session.add_message(
            "agent",
            f"Monitoring xApp {xapp_id} deployed (latency threshold "
            f"{session.profile.max_latency_ms} ms). Provisioning complete.",
        )
        self._set_stage(session, COMPLETE)

    # -- shared helpers -----------------------------------------------------------------------

    def _target_ues(self, session: SessionState) -> list[str]:
        profile = session.profile
        cells = set(profile.coverage_cell_ids)
        out = []
        for ue in self.env.sim.topology.ues:
            if ue.cell_id not in cells:
                continue
            if profile.device_type is not None and ue.device_type != profile.device_type:
                continue
            out.append(ue.ue_id)
        return sorted(out)

    def _context(self, session: SessionState, last_user_text: str = "") -> PlannerContext:
        utilization = {
            cell_id: self.env.sim.cell_utilization(cell_id)
            for cell_id in session.profile.coverage_cell_ids
            if cell_id in self.env.sim.topology.cell_map()
        }
        last_results = [
            e for e in session.transcript if e["kind"] == "tool_result"
        ][-3:]
        return PlannerContext(
            stage=session.stage,
            profile=session.profile.as_dict(),
            last_user_text=last_user_text,
            target_ue_ids=self._target_ues(session),
            service_node_id=session.plan.node_id if session.plan else None,
            cell_utilization=utilization,
            action_catalog=list(self.rules["action_catalog"]),
            last_results=last_results,
            transcript_tail=session.transcript[-8:],
        )


def _summarize(result):
    """Compact, JSON-friendly view of a tool result for the transcript."""
    from .edgemgr import ServiceInstance
    from .registry import ModelCard

    if result is None:
        return None
    if isinstance(result, (bool, int, float, str)):
        return result
    if isinstance(result, ModelCard):
        return {"model_id": result.model_id, "servable": result.servable,
                "servability_reasons": list(result.servability_reasons)}
    if isinstance(result, ServiceInstance):
        return result.as_dict()
    if isinstance(result, DeploymentPlan):
        return result.as_dict()
    if isinstance(result, XAppSpec):
        return result.as_dict()
    if isinstance(result, list):
        return [_summarize(x) for x in result]
    if isinstance(result, dict):
        return {k: _summarize(v) for k, v in result.items()}
    if isinstance(result, NetworkAction):
        return result.as_dict()
    if hasattr(result, "as_dict"):
        return result.as_dict()
    return repr(result)
