"""Headless scenario runner: scripted conversations against a scenario.

A script file is a JSON document::

    {
      "description": "...initial use case text...",
      "steps": [
        {"say": "latency under 50 ms, 4 drones, ..."},
        {"choose_model": 3},
        {"confirm_deploy": {"accept": true, "node_id": null}},
        {"advance_ms": 2000},
        {"infer": {"count": 3, "payload_kb": 128}}
      ]
    }

The runner executes the conversation under the configured planner
(scripted unless a remote endpoint is set), advances simulated time only
where the script says so, and emits a canonical JSON result file: final
session state, every alert, control acks and summary QoS statistics.
Exit status is 0 exactly when the session reaches COMPLETE.  Two runs with
the same scenario, script and seed produce byte-identical result files.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import agent as ag
from .env import Environment
from .errors import NoData, SchemaError
from .scenario import load_scenario


def load_script(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict) or "description" not in raw:
        raise SchemaError(f"{path}: script must be an object with a 'description'")
    steps = raw.get("steps", [])
    if not isinstance(steps, list):
        raise SchemaError(f"{path}: 'steps' must be a list")
    return raw


def run_scenario(
    scenario_file: str | Path,
    script_file: str | Path,
    *,
    seed: int | None = None,
    out_file: str | Path | None = None,
    planner=None,
) -> tuple[dict, int]:
    """Execute a script; returns (result document, exit code)."""
    scenario = load_scenario(scenario_file)
    script = load_script(script_file)
    env = Environment(scenario, seed=seed, planner=planner)
    orch = env.agent

    session = orch.start_session(script["description"])
    orch.run_until_blocked(session)
    for step in script.get("steps", []):
        if session.stage in (ag.COMPLETE, ag.FAILED) and not _is_passive(step):
            break
        _apply_step(env, session, step)
        orch.run_until_blocked(session)

    result = _build_result(env, session, scenario.name)
    code = 0 if session.stage == ag.COMPLETE else 1
    result["exit"] = {"code": code, "stage": session.stage}
    if out_file is not None:
        Path(out_file).write_text(
            json.dumps(result, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return result, code


def _is_passive(step: dict) -> bool:
    return "advance_ms" in step or "infer" in step


def _apply_step(env: Environment, session, step: dict) -> None:
    orch = env.agent
    if "say" in step:
        orch.handle_message(session, step["say"])
    elif "choose_model" in step:
        orch.choose_model(session, int(step["choose_model"]))
    elif "confirm_deploy" in step:
        confirm = step["confirm_deploy"]
        if isinstance(confirm, bool):
            confirm = {"accept": confirm}
        orch.confirm_deploy(session, bool(confirm.get("accept")), node_id=confirm.get("node_id"))
    elif "advance_ms" in step:
        env.advance(int(step["advance_ms"]))
    elif "infer" in step:
        spec = step["infer"]
        count = int(spec.get("count", 1))
        payload_kb = float(spec.get("payload_kb", 64.0))
        if session.instance_id is not None:
            for _ in range(count):
                env.edge.serve_request(session.instance_id, payload_kb)
    else:
        raise SchemaError(f"unknown script step: {sorted(step)}")


def _build_result(env: Environment, session, scenario_name: str) -> dict:
    alerts = [a.as_dict() for a in env.ric.alerts()]
    qos_summary = None
    if session.xapp_ids:
        engine = env.ric.engine(session.xapp_ids[0])
        try:
            report = engine.aggregate_report(
                window_ms=env.now,
                now_ms=env.now,
                inference_samples=env.edge.inference_samples(session.instance_id, 0, env.now)
                if session.instance_id
                else None,
            )
            qos_summary = report.as_dict()
        except NoData:
            qos_summary = None
    return {
        "scenario": scenario_name,
        "seed": env.seed,
        "sim_time_ms": env.now,
        "final_stage": session.stage,
        "session": session.as_dict(),
        "alerts": alerts,
        "control_acks": [a.as_dict() for a in env.ric.acks],
        "qos_summary": qos_summary,
    }
