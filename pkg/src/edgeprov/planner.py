"""Planner backends: the deterministic rule engine and the remote client.

The orchestrator consults a planner at two decision points: interpreting a
user message while collecting requirements, and choosing network actions
during adaptation.  The scripted backend is a pure function of its context,
which is what the reproducible test path runs on.  The remote backend
speaks a small chat-completion wire protocol::

    request:  {"messages": [...], "tools": [{"name", "description",
               "parameters"}], "temperature": 0}
    response: {"tool_call": {"name": ..., "arguments": {...}}}
              or {"text": "..."}

Malformed replies are retried up to 2 times, then the stage fails.  The
remote endpoint and key come from the EDGEPROV_PLANNER_URL and
EDGEPROV_PLANNER_API_KEY environment variables; when unset, the scripted
backend is used.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Protocol

import requests

from .errors import MalformedReply, RemoteUnreachable
from .extraction import extract_fields

ENV_PLANNER_URL = "EDGEPROV_PLANNER_URL"
ENV_PLANNER_KEY = "EDGEPROV_PLANNER_API_KEY"
MAX_RETRIES = 2

STAGE_INTENT = "INTENT"
STAGE_ADAPT = "ADAPT"


@lru_cache(maxsize=1)
def load_planner_rules() -> dict:
    text = resources.files("edgeprov.data").joinpath("planner_rules.json").read_text("utf-8")
    return json.loads(text)


@dataclass
class PlannerContext:
    stage: str
    profile: dict
    last_user_text: str = ""
    target_ue_ids: list[str] = field(default_factory=list)
    service_node_id: str | None = None
    cell_utilization: dict[str, float] = field(default_factory=dict)
    action_catalog: list[str] = field(default_factory=list)
    last_results: list[dict] = field(default_factory=list)
    transcript_tail: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "profile": dict(self.profile),
            "last_user_text": self.last_user_text,
            "target_ue_ids": list(self.target_ue_ids),
            "service_node_id": self.service_node_id,
            "cell_utilization": dict(self.cell_utilization),
            "action_catalog": list(self.action_catalog),
            "last_results": list(self.last_results),
        }


@dataclass
class ProfileDecision:
    fields: dict
    question: str | None


@dataclass
class ActionsDecision:
    actions: list[dict]  # [{"kind", "payload", "rationale"}]


@dataclass
class TextDecision:
    text: str


PlannerDecision = ProfileDecision | ActionsDecision | TextDecision


class PlannerBackend(Protocol):
    name: str

    def decide(self, ctx: PlannerContext) -> PlannerDecision: ...


class ScriptedPlanner:
    """Deterministic planner: extraction rules + the published rule table."""

    name = "scripted"

    def __init__(self, rules: dict | None = None):
        self.rules = rules or load_planner_rules()

    def decide(self, ctx: PlannerContext) -> PlannerDecision:
        if ctx.stage == STAGE_INTENT:
            return self._intent(ctx)
        if ctx.stage == STAGE_ADAPT:
            return ActionsDecision(actions=self.adaptation_actions(ctx))
        return TextDecision(text="nothing to decide at this stage")

    # -- intent --------------------------------------------------------------

    def _intent(self, ctx: PlannerContext) -> ProfileDecision:
        fields = extract_fields(ctx.last_user_text) if ctx.last_user_text else {}
        merged = dict(ctx.profile)
        merged.update({k: v for k, v in fields.items() if v is not None})
        question = None
        for name in self.rules["required_fields"]:
            if not _field_set(merged.get(name)):
                question = self.rules["questions"][name]
                break
        return ProfileDecision(fields=fields, question=question)

    # -- adaptation rule table --------------------------------------------------

    def adaptation_actions(self, ctx: PlannerContext) -> list[dict]:
        rules = self.rules["adaptation"]
        profile = ctx.profile
        priority = (
            rules["priority_fast"]
            if profile.get("max_latency_ms", float("inf")) <= rules["latency_priority_cutoff_ms"]
            else rules["priority_slow"]
        )
        gbr_ul = float(profile.get("device_count", 0)) * float(profile.get("min_ul_mbps", 0.0))
        policy_payload = {
            "target_ue_ids": list(ctx.target_ue_ids),
            "slice_id": rules["qos_slice_id"],
            "gbr_ul_mbps": gbr_ul,
            "priority_level": priority,
        }
        if profile.get("min_dl_mbps"):
            policy_payload["gbr_dl_mbps"] = float(profile["device_count"]) * float(
                profile["min_dl_mbps"]
            )
        actions = [
            {
                "kind": "create_qos_policy",
                "payload": policy_payload,
                "rationale": (
                    f"guarantee {gbr_ul:g} Mbps aggregate uplink "
                    f"({profile.get('device_count')} devices x {profile.get('min_ul_mbps')} Mbps) "
                    f"at priority {priority} on slice '{rules['qos_slice_id']}'"
                ),
            },
            {
                "kind": "steer_traffic",
                "payload": {
                    "target_ue_ids": list(ctx.target_ue_ids),
                    "steering_dest_node_id": ctx.service_node_id,
                },
                "rationale": f"steer device traffic to the serving node '{ctx.service_node_id}'",
            },
        ]
        for cell_id in sorted(ctx.cell_utilization):
            if ctx.cell_utilization[cell_id] > rules["cell_utilization_trigger"]:
                actions.append(
                    {
                        "kind": "ran_slice_control",
                        "payload": {
                            "cell_id": cell_id,
                            "slice_id": rules["qos_slice_id"],
                            "new_scheduling_weight": rules["ran_weight_boost"],
                        },
                        "rationale": (
                            f"cell '{cell_id}' utilization "
                            f"{ctx.cell_utilization[cell_id]:.2f} exceeds "
                            f"{rules['cell_utilization_trigger']}; boost slice scheduling weight"
                        ),
                    }
                )
        return actions


def _field_set(value) -> bool:
    if value is None:
        return False
    if isinstance(value, str):
        return bool(value.strip())
    if isinstance(value, (list, tuple)):
        return len(value) > 0
    if isinstance(value, (int, float)):
        return value > 0
    return True


# -- remote backend ----------------------------------------------------------------


TOOL_SCHEMAS = [
    {
        "name": "update_use_case_profile",
        "description": "Record requirement fields extracted from the user's last message "
        "and optionally ask a follow-up question.",
        "parameters": {
            "type": "object",
            "properties": {
                "fields": {"type": "object"},
                "question": {"type": "string"},
            },
            "required": ["fields"],
        },
    },
    {
        "name": "propose_network_actions",
        "description": "Propose network adaptation actions drawn from the permissible "
        "action catalog.",
        "parameters": {
            "type": "object",
            "properties": {
                "actions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "kind": {"type": "string"},
                            "payload": {"type": "object"},
                            "rationale": {"type": "string"},
                        },
                        "required": ["kind", "payload"],
                    },
                }
            },
            "required": ["actions"],
        },
    },
]


class RemotePlanner:
    """Wire-protocol client for an externally hosted planner."""

    name = "remote"

    def __init__(self, endpoint_url: str, api_key: str | None = None, *, timeout_s: float = 30.0):
        self.endpoint_url = endpoint_url
        self.api_key = api_key
        self.timeout_s = timeout_s
        self._session = requests.Session()
        self.last_retries = 0

    def decide(self, ctx: PlannerContext) -> PlannerDecision:
        payload = {
            "messages": self._messages(ctx),
            "tools": TOOL_SCHEMAS,
            "temperature": 0,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self.last_retries = 0
        last_error = "no reply"
        for attempt in range(MAX_RETRIES + 1):
            self.last_retries = attempt
            try:
                resp = self._session.post(
                    self.endpoint_url, json=payload, headers=headers, timeout=self.timeout_s
                )
            except requests.RequestException as exc:
                raise RemoteUnreachable(f"planner endpoint unreachable: {exc}") from exc
            try:
                return self._parse(resp)
            except MalformedReply as exc:
                last_error = str(exc)
                continue
        raise MalformedReply(f"planner reply malformed after {MAX_RETRIES} retries: {last_error}")

    @staticmethod
    def _messages(ctx: PlannerContext) -> list[dict]:
        system = (
            "You are the orchestration planner for an edge AI provisioning system. "
            f"Current stage: {ctx.stage}. Permissible network action kinds: "
            f"{', '.join(ctx.action_catalog)}. Reply with exactly one tool call."
        )
        messages = [{"role": "system", "content": system}]
        messages.append({"role": "system", "content": "context: " + json.dumps(ctx.as_dict(), sort_keys=True)})
        for entry in ctx.transcript_tail:
            if entry.get("kind") == "message":
                role = "user" if entry.get("role") == "user" else "assistant"
                messages.append({"role": role, "content": entry.get("text", "")})
        if ctx.last_user_text:
            messages.append({"role": "user", "content": ctx.last_user_text})
        return messages

    @staticmethod
    def _parse(resp) -> PlannerDecision:
        if resp.status_code != 200:
            raise MalformedReply(f"status {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedReply(f"non-JSON reply: {exc}") from exc
        if not isinstance(body, dict):
            raise MalformedReply("reply is not an object")
        if "tool_call" in body:
            call = body["tool_call"]
            name = call.get("name")
            args = call.get("arguments")
            if not isinstance(args, dict):
                raise MalformedReply("tool_call.arguments must be an object")
            if name == "update_use_case_profile":
                fields = args.get("fields")
                if not isinstance(fields, dict):
                    raise MalformedReply("update_use_case_profile needs a fields object")
                return ProfileDecision(fields=fields, question=args.get("question"))
            if name == "propose_network_actions":
                actions = args.get("actions")
                if not isinstance(actions, list):
                    raise MalformedReply("propose_network_actions needs an actions array")
                return ActionsDecision(actions=actions)
            raise MalformedReply(f"unknown tool '{name}'")
        if "text" in body and isinstance(body["text"], str):
            return TextDecision(text=body["text"])
        raise MalformedReply("reply has neither tool_call nor text")


def make_default_planner(environ: dict | None = None) -> PlannerBackend:
    """Remote planner when the endpoint env var is set, scripted otherwise."""
    environ = environ if environ is not None else os.environ
    url = environ.get(ENV_PLANNER_URL)
    if url:
        return RemotePlanner(url, environ.get(ENV_PLANNER_KEY))
    return ScriptedPlanner()
