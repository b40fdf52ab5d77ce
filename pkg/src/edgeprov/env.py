"""Environment wiring: one scenario instantiated into a full provisioning stack.

The environment owns the simulator and connects every subsystem to it:

* edge manager lifecycles advance on simulator ticks, and flow availability
  consults the edge manager's running services;
* the policy service pushes merged rules into flows;
* the RIC delivers indications off the tick loop and publishes alerts,
  reports and recommendations onto the event hub;
* the orchestrator reaches all of the above as tools.

advance() is the single entry point that moves simulated time; it is
serialized with a lock so gateway handlers and background tickers can share
the environment.
"""

from __future__ import annotations

import threading
from pathlib import Path

from .agent import Orchestrator
from .corenf import PolicyService
from .edgemgr import EdgeManager, EdgeNode
from .events import EventHub
from .monitor import recommend
from .registry import FixtureRegistry, HubClient, ModelCatalog
from .ric import Ric
from .scenario import ScenarioConfig, build_topology
from .simnet import Simulator


class Environment:
    def __init__(
        self,
        scenario: ScenarioConfig,
        *,
        seed: int | None = None,
        planner=None,
        fixture_dir: str | Path | None = None,
        hub_url: str | None = None,
        descriptor_dir: str | Path | None = None,
    ) -> None:
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.topology = build_topology(scenario)
        self.sim = Simulator(
            self.topology,
            scenario.flows,
            seed=self.seed,
            noise_sigma=scenario.noise_sigma,
            default_base_latency_ms=scenario.default_base_latency_ms,
        )
        self.hub = EventHub()

        self.edge = EdgeManager(self.sim.clock, descriptor_dir=descriptor_dir)
        for spec in scenario.edge_nodes:
            self.edge.register_node(
                EdgeNode(
                    node_id=spec.node_id,
                    tier=spec.tier,
                    cpu_cores=spec.cpu_cores,
                    mem_mb=spec.mem_mb,
                    gpu_units=spec.gpu_units,
                    attach_latency_ms=dict(spec.attach_latency_ms),
                    allocated_cpu=spec.allocated_cpu,
                    allocated_mem=spec.allocated_mem,
                    allocated_gpu=spec.allocated_gpu,
                )
            )
        self.sim.on_pre_tick(self.edge.tick)
        self.sim.service_presence = self.edge.node_has_running_service

        self.pcf = PolicyService(self.sim, node_exists=self.edge.has_node)
        self.ric = Ric(self.sim, inference_source=self._inference_for_xapp)
        self.models = self._make_catalog(fixture_dir, hub_url)
        self.agent = Orchestrator(self, planner=planner)

        for change in scenario.traffic_schedule:
            self.sim.schedule(
                change.t_ms,
                lambda fid=change.flow_id, mbps=change.offered_mbps: self.sim.set_flow_fields(
                    fid, offered_mbps=mbps
                ),
            )

        self._advance_lock = threading.Lock()
        self._wire_events()

    # -- wiring --------------------------------------------------------------------

    def _make_catalog(self, fixture_dir, hub_url) -> ModelCatalog:
        models_cfg = self.scenario.models or {}
        backend_kind = models_cfg.get("backend", "fixture")
        if hub_url or backend_kind == "hub":
            return ModelCatalog(HubClient(hub_url or models_cfg.get("hub_url", "https://huggingface.co")))
        root = fixture_dir or models_cfg.get("fixture_dir", "fixtures/models")
        root = Path(root)
        if not root.is_absolute() and self.scenario.base_dir is not None:
            root = (self.scenario.base_dir / root).resolve()
        return ModelCatalog(FixtureRegistry(root))

    def _wire_events(self) -> None:
        self.ric.on_indication.append(lambda ind: self.hub.publish("metric", ind))
        self.ric.on_alert.append(self._on_alert)
        self.ric.on_report.append(self._on_report)
        self.agent.on_stage_change.append(
            lambda session, old, new: self.hub.publish(
                "stage", {"session_id": session.session_id, "from": old, "to": new}
            )
        )

    def _on_alert(self, alert) -> None:
        self.hub.publish("alert", alert.as_dict())

    def _on_report(self, report: dict) -> None:
        self.hub.publish("report", report)
        recs = self._recommendations_for(report)
        for rec in recs:
            self.hub.publish("recommendation", rec.as_dict())

    def _recommendations_for(self, report: dict):
        """Rule-based remediation hints for reports carrying active alerts."""
        if not report.get("active_alerts"):
            return []
        session = self._session_for_xapp(report.get("xapp_id"))
        if session is None or session.plan is None:
            return []
        engine = self.ric.engine(report["xapp_id"])
        alerts = [a for a in engine.alerts if a.alert_id in set(report["active_alerts"])]
        model = session.chosen_model
        policy = None
        if session.policy_ids:
            policy = self.pcf.get_policy(session.policy_ids[0])
        cells = session.profile.coverage_cell_ids or [""]
        return recommend(
            alerts,
            current_node=self.edge.node(session.plan.node_id),
            candidate_nodes=self.edge.list_nodes(),
            cell_id=cells[0],
            required_cpu=model.min_cpu if model else 1,
            required_mem_mb=model.min_mem_mb if model else 512,
            requires_gpu=bool(model.gpu_required) if model else False,
            policy=policy,
        )

    def _session_for_xapp(self, xapp_id):
        for session in self.agent.sessions.values():
            if xapp_id in session.xapp_ids:
                return session
        return None

    def _inference_for_xapp(self, xapp_id: str, t0_ms: int, t1_ms: int):
        session = self._session_for_xapp(xapp_id)
        if session is None or session.instance_id is None:
            return []
        return self.edge.inference_samples(session.instance_id, t0_ms, t1_ms)

    # -- time ------------------------------------------------------------------------

    def advance(self, dt_ms: int) -> int:
        with self._advance_lock:
            return self.sim.advance(dt_ms)

    @property
    def now(self) -> int:
        return self.sim.now
