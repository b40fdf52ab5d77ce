#!/usr/bin/env python3
"""The full provisioning conversation, end to end, against the simulator.

Mirrors what `edgeprov run --scenario fixtures/scenarios/drone.json
--script fixtures/scripts/drone_script.json` does, but inline so the
stages are visible step by step.
"""

from pathlib import Path

from edgeprov.env import Environment
from edgeprov.scenario import load_scenario

HERE = Path(__file__).resolve().parent
env = Environment(load_scenario(HERE.parent / "fixtures" / "scenarios" / "drone.json"))
orch = env.agent


def say(session, text):
    print(f"  user>  {text}")
    reply = orch.handle_message(session, text)
    print(f"  agent> {reply.text}")


session = orch.start_session(
    "I'm building a drone swarm to search for stray animals in a rural area"
)
print(f"[{session.stage}] {session.transcript[-1]['text']}")

say(session, "latency under 50 ms, 4 drones, cell-1, 5 Mbps uplink each")
orch.run_until_blocked(session)
print(f"\n[{session.stage}] candidates:")
for i, card in enumerate(session.candidates):
    print(f"  [{i}] {card.model_id}")

choice = [c.model_id for c in session.candidates].index("skyeye/uav-animal-detector")
say(session, str(choice))
plan = session.plan
print(f"\n[{session.stage}] plan: {plan.model_id} on {plan.node_id} "
      f"(score {plan.score:.4f}, alternatives {plan.scores_by_node})")

say(session, "yes, deploy it")
orch.run_until_blocked(session)

print(f"\n[{session.stage}] applied network actions:")
for action in session.applied_actions:
    print(f"  - {action.kind}: {action.rationale}")

env.advance(2000)
for _ in range(3):
    env.edge.serve_request(session.instance_id, payload_kb=128)
env.advance(1000)

engine = env.ric.engine(session.xapp_ids[0])
report = engine.aggregate_report(
    window_ms=env.now, now_ms=env.now,
    inference_samples=env.edge.inference_samples(session.instance_id, 0, env.now),
)
print(f"\nQoS after adaptation (simulated {env.now} ms):")
for metric, stats in report.stats.items():
    print(f"  {metric:>16}: mean {stats['mean']:.3f} (min {stats['min']:.3f}, max {stats['max']:.3f})")
if report.inference:
    print(f"  inference: mean {report.inference['mean_ms']:.1f} ms over {report.inference['count']:.0f} requests")
print(f"  active alerts: {report.active_alerts or 'none'}")
