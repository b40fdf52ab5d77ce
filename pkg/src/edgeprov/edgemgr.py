"""Edge infrastructure manager: node registry and simulated AI services.

Deployment walks pending -> deploying -> running across two simulator
ticks.  Resources are deducted atomically at deploy time and returned in
full on termination.  "Serving code" is materialized as a JSON service
descriptor written next to the instance (see README for the format).

Inference is simulated: a request issued at sim time t observes

    latency_ms = base_inference_ms * (1 + load_factor * in_flight(t))

where in_flight counts requests that started earlier and have not yet
completed by t.  Requests are recorded so monitoring can report inference
statistics.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .errors import (
    DuplicateNode,
    InsufficientCapacity,
    InvalidNode,
    NotServable,
    ServiceNotFound,
    ServiceUnavailable,
    UnknownNode,
)
from .registry import ModelCard

DEPLOY_TICKS = 2
DEFAULT_LOAD_FACTOR = 0.25
DEFAULT_BASE_INFERENCE_MS = 40.0
PORT_POOL_START = 9000

PENDING = "pending"
DEPLOYING = "deploying"
RUNNING = "running"
FAILED = "failed"
TERMINATED = "terminated"

_LEGAL_TRANSITIONS = {
    PENDING: {DEPLOYING},
    DEPLOYING: {RUNNING, FAILED},
    RUNNING: {TERMINATED, FAILED},
    FAILED: set(),
    TERMINATED: set(),
}


@dataclass
class EdgeNode:
    node_id: str
    tier: str
    cpu_cores: int
    mem_mb: int
    gpu_units: int
    attach_latency_ms: dict[str, float] = field(default_factory=dict)
    allocated_cpu: int = 0
    allocated_mem: int = 0
    allocated_gpu: int = 0

    @property
    def free_cpu(self) -> int:
        return self.cpu_cores - self.allocated_cpu

    @property
    def free_mem(self) -> int:
        return self.mem_mb - self.allocated_mem

    @property
    def free_gpu(self) -> int:
        return self.gpu_units - self.allocated_gpu

    def as_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "tier": self.tier,
            "cpu_cores": self.cpu_cores,
            "mem_mb": self.mem_mb,
            "gpu_units": self.gpu_units,
            "attach_latency_ms": dict(self.attach_latency_ms),
            "allocated_cpu": self.allocated_cpu,
            "allocated_mem": self.allocated_mem,
            "allocated_gpu": self.allocated_gpu,
        }


@dataclass
class Resources:
    cpu: int
    mem_mb: int
    gpu: int = 0

    def as_dict(self) -> dict:
        return {"cpu": self.cpu, "mem_mb": self.mem_mb, "gpu": self.gpu}


@dataclass
class NodeFilter:
    min_cpu: int = 0
    min_mem_mb: int = 0
    min_gpu: int = 0
    max_attach_latency_ms: float | None = None
    cell_id: str | None = None


@dataclass
class ServiceInstance:
    instance_id: str
    model_id: str
    node_id: str
    resources: Resources
    endpoint: dict
    state: str
    base_inference_ms: float
    started_at_ms: int
    descriptor_path: str | None = None

    def as_dict(self, *, include_paths: bool = False) -> dict:
        d = {
            "instance_id": self.instance_id,
            "model_id": self.model_id,
            "node_id": self.node_id,
            "resources": self.resources.as_dict(),
            "endpoint": dict(self.endpoint),
            "state": self.state,
            "base_inference_ms": self.base_inference_ms,
            "started_at_ms": self.started_at_ms,
        }
        if include_paths:
            d["descriptor_path"] = self.descriptor_path
        return d


class EdgeManager:
    """Node registry plus simulated service lifecycle, driven by sim ticks."""

    def __init__(
        self,
        clock: Callable[[], int],
        *,
        descriptor_dir: str | Path | None = None,
        load_factor: float = DEFAULT_LOAD_FACTOR,
    ) -> None:
        self._clock = clock
        self._nodes: dict[str, EdgeNode] = {}
        self._instances: dict[str, ServiceInstance] = {}
        self._id_counter = 0
        self._port_counters: dict[str, int] = {}
        self._load_factor = load_factor
        self._inference_log: dict[str, list[tuple[int, float]]] = {}
        self._in_flight: dict[str, list[tuple[float, float]]] = {}
        if descriptor_dir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="edgeprov-descriptors-")
            self._descriptor_dir = Path(self._tmp.name)
        else:
            self._descriptor_dir = Path(descriptor_dir)
            self._descriptor_dir.mkdir(parents=True, exist_ok=True)

    # -- registry ---------------------------------------------------------------

    def register_node(self, node: EdgeNode) -> None:
        if node.node_id in self._nodes:
            raise DuplicateNode(node.node_id)
        if min(node.cpu_cores, node.mem_mb, node.gpu_units) < 0:
            raise InvalidNode("capacities must be >= 0")
        if (
            node.allocated_cpu > node.cpu_cores
            or node.allocated_mem > node.mem_mb
            or node.allocated_gpu > node.gpu_units
            or min(node.allocated_cpu, node.allocated_mem, node.allocated_gpu) < 0
        ):
            raise InvalidNode("allocated resources exceed capacity")
        self._nodes[node.node_id] = replace(node, attach_latency_ms=dict(node.attach_latency_ms))

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> EdgeNode:
        try:
            return replace(self._nodes[node_id])
        except KeyError:
            raise UnknownNode(node_id) from None

    def list_nodes(self, flt: NodeFilter | None = None) -> list[EdgeNode]:
        flt = flt or NodeFilter()
        out = []
        for node in self._nodes.values():
            if node.free_cpu < flt.min_cpu or node.free_mem < flt.min_mem_mb:
                continue
            if node.free_gpu < flt.min_gpu:
                continue
            if flt.max_attach_latency_ms is not None:
                latencies = (
                    [node.attach_latency_ms.get(flt.cell_id)]
                    if flt.cell_id is not None
                    else list(node.attach_latency_ms.values())
                )
                latencies = [ms for ms in latencies if ms is not None]
                if not latencies or min(latencies) > flt.max_attach_latency_ms:
                    continue
            out.append(replace(node))
        return sorted(out, key=lambda n: n.node_id)

    # -- lifecycle ------------------------------------------------------------

    def deploy_service(self, model: ModelCard, node_id: str, resources: Resources) -> ServiceInstance:
        node = self._nodes.get(node_id)
        if node is None:
            raise UnknownNode(node_id)
        if model.servable is not True:
            raise NotServable(f"model '{model.model_id}' is not servable: {model.servability_reasons}")
        if (
            node.free_cpu < resources.cpu
            or node.free_mem < resources.mem_mb
            or node.free_gpu < resources.gpu
        ):
            raise InsufficientCapacity(
                f"node '{node_id}' lacks free resources for {resources.as_dict()}"
            )
        node.allocated_cpu += resources.cpu
        node.allocated_mem += resources.mem_mb
        node.allocated_gpu += resources.gpu
        self._id_counter += 1
        instance_id = f"svc-{self._id_counter:04d}"
        port = self._port_counters.get(node_id, PORT_POOL_START)
        self._port_counters[node_id] = port + 1
        base_ms = model.base_inference_ms if model.base_inference_ms else DEFAULT_BASE_INFERENCE_MS
        instance = ServiceInstance(
            instance_id=instance_id,
            model_id=model.model_id,
            node_id=node_id,
            resources=resources,
            endpoint={"host": f"{node_id}.edge.sim", "port": port, "protocol": "http"},
            state=PENDING,
            base_inference_ms=base_ms,
            started_at_ms=self._clock(),
        )
        instance.descriptor_path = str(self._write_descriptor(instance))
        self._instances[instance_id] = instance
        self._inference_log[instance_id] = []
        self._in_flight[instance_id] = []
        return replace(instance)

    def _write_descriptor(self, instance: ServiceInstance) -> Path:
        descriptor = {
            "instance_id": instance.instance_id,
            "model_id": instance.model_id,
            "runtime": "rest-server",
            "host": instance.endpoint["host"],
            "port": instance.endpoint["port"],
            "protocol": instance.endpoint["protocol"],
            "health_path": "/healthz",
            "predict_path": "/predict",
            "resources": instance.resources.as_dict(),
        }
        path = self._descriptor_dir / f"{instance.instance_id}.json"
        path.write_text(json.dumps(descriptor, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def tick(self, t_start_ms: int) -> None:
        """Advance lifecycles; called by the simulator at each tick start."""
        for instance in self._instances.values():
            if instance.state not in (PENDING, DEPLOYING):
                continue
            age_ticks = (t_start_ms - instance.started_at_ms) // 10 + 1
            if age_ticks >= DEPLOY_TICKS:
                self._transition(instance, RUNNING)
            elif age_ticks >= 1:
                self._transition(instance, DEPLOYING)

    def _transition(self, instance: ServiceInstance, new_state: str) -> None:
        if new_state == instance.state:
            return
        if new_state not in _LEGAL_TRANSITIONS[instance.state]:
            # walk intermediate states so pending -> running stays legal
            if instance.state == PENDING and new_state == RUNNING:
                instance.state = DEPLOYING
            else:
                raise ServiceUnavailable(
                    f"illegal transition {instance.state} -> {new_state} for {instance.instance_id}"
                )
        instance.state = new_state

    def terminate_service(self, instance_id: str) -> None:
        instance = self._instances.get(instance_id)
        if instance is None or instance.state == TERMINATED:
            raise ServiceNotFound(instance_id)
        node = self._nodes[instance.node_id]
        node.allocated_cpu -= instance.resources.cpu
        node.allocated_mem -= instance.resources.mem_mb
        node.allocated_gpu -= instance.resources.gpu
        instance.state = TERMINATED

    def get_service(self, instance_id: str) -> ServiceInstance:
        try:
            return replace(self._instances[instance_id])
        except KeyError:
            raise ServiceNotFound(instance_id) from None

    def list_services(self) -> list[ServiceInstance]:
        return [replace(i) for i in self._instances.values()]

    def node_has_running_service(self, node_id: str) -> bool:
        return any(
            i.node_id == node_id and i.state == RUNNING for i in self._instances.values()
        )

    # -- simulated inference -------------------------------------------------------

    def serve_request(self, instance_id: str, payload_kb: float = 64.0) -> float:
        instance = self._instances.get(instance_id)
        if instance is None:
            raise ServiceNotFound(instance_id)
        if instance.state != RUNNING:
            raise ServiceUnavailable(f"service '{instance_id}' is {instance.state}")
        t = float(self._clock())
        in_flight = self._in_flight[instance_id]
        concurrent = sum(1 for start, end in in_flight if start <= t < end)
        latency = instance.base_inference_ms * (1.0 + self._load_factor * concurrent)
        in_flight.append((t, t + latency))
        # drop completed entries to keep the list small
        self._in_flight[instance_id] = [(s, e) for s, e in in_flight if e > t]
        self._inference_log[instance_id].append((int(t), latency))
        return latency

    def inference_samples(self, instance_id: str, t0_ms: int, t1_ms: int) -> list[tuple[int, float]]:
        log = self._inference_log.get(instance_id, [])
        return [(t, ms) for t, ms in log if t0_ms < t <= t1_ms]

    def inference_samples_for_node(self, node_id: str, t0_ms: int, t1_ms: int) -> list[tuple[int, float]]:
        out: list[tuple[int, float]] = []
        for instance in self._instances.values():
            if instance.node_id == node_id:
                out.extend(self.inference_samples(instance.instance_id, t0_ms, t1_ms))
        return sorted(out)
