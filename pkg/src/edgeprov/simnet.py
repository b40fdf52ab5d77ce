"""Deterministic discrete-event simulator of cells, UEs, slices and flows.

This is the ground truth that policies act upon and monitoring observes.
Time advances in fixed 10 ms ticks.  Per tick, each cell/direction pair is
allocated with a two-phase water-filling discipline:

1. every slice receives ``dedicated_ratio * C`` plus a share of the
   non-dedicated capacity proportional to its ``scheduling_weight``;
2. inside a slice, guaranteed bit rates are granted in ascending
   ``priority_level`` order (ties broken by flow id), then the residual
   slice capacity is split proportionally to residual offered load.

All allocation arithmetic is performed on exact rationals
(:class:`fractions.Fraction`) so that conservation holds exactly and two
runs with the same inputs are bit-identical.  Only the derived metric
samples use floating point.

Per-flow metrics per tick (utilization rho is the slice's offered load over
its capacity share, capped at 0.99 inside the delay term):

    latency_ms      = base + 5.0 * rho / (1 - rho)
    jitter_ms       = 0.2 * (latency_ms - base)
    loss_rate       = max(0, (offered - allocated) / offered)
                      once the flow has been overloaded for
                      ``buffer_cap_ratio`` consecutive ticks, else 0
    throughput_mbps = allocated
    available       = allocated > 0 and the destination node is serving

Optional multiplicative Gaussian observation noise (seeded, default off)
perturbs the queueing-delay term and the throughput of samples only; the
ground-truth allocation is never touched.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable

from .errors import TickMisaligned, UnknownFlow

TICK_MS = 10
QUEUE_DELAY_MS = 5.0
RHO_CAP = 0.99
METRIC_NAMES = ("latency_ms", "throughput_mbps", "loss_rate", "jitter_ms", "available")

DOWNLINK = "downlink"
UPLINK = "uplink"


@dataclass
class SliceConfig:
    slice_id: str
    scheduling_weight: float = 1.0
    dedicated_ratio: float = 0.0


@dataclass
class Cell:
    cell_id: str
    capacity_dl_mbps: float
    capacity_ul_mbps: float
    slices: list[SliceConfig] = field(default_factory=list)
    buffer_cap_ratio: int = 3  # consecutive overloaded ticks tolerated before loss

    def capacity(self, direction: str) -> float:
        return self.capacity_ul_mbps if direction == UPLINK else self.capacity_dl_mbps

    def slice_map(self) -> dict[str, SliceConfig]:
        return {s.slice_id: s for s in self.slices}


@dataclass
class Ue:
    ue_id: str
    cell_id: str
    device_type: str | None = None


@dataclass
class Flow:
    flow_id: str
    ue_id: str
    direction: str
    slice_id: str
    offered_mbps: float
    gbr_mbps: float = 0.0
    priority_level: int = 9
    dest_node_id: str | None = None
    mbr_mbps: float | None = None  # policy ceiling; None = uncapped

    def demand_mbps(self) -> float:
        if self.mbr_mbps is None:
            return self.offered_mbps
        return min(self.offered_mbps, self.mbr_mbps)


@dataclass
class Topology:
    cells: list[Cell] = field(default_factory=list)
    ues: list[Ue] = field(default_factory=list)
    links: list[tuple[str, str, float]] = field(default_factory=list)  # (node, cell, ms)

    def cell_map(self) -> dict[str, Cell]:
        return {c.cell_id: c for c in self.cells}

    def ue_map(self) -> dict[str, Ue]:
        return {u.ue_id: u for u in self.ues}

    def link_latency(self, node_id: str, cell_id: str) -> float | None:
        for node, cell, ms in self.links:
            if node == node_id and cell == cell_id:
                return ms
        return None


@dataclass(frozen=True)
class MetricSample:
    t_ms: int
    flow_id: str
    latency_ms: float
    throughput_mbps: float
    loss_rate: float
    jitter_ms: float
    available: bool

    def as_dict(self) -> dict:
        return {
            "t_ms": self.t_ms,
            "flow_id": self.flow_id,
            "latency_ms": self.latency_ms,
            "throughput_mbps": self.throughput_mbps,
            "loss_rate": self.loss_rate,
            "jitter_ms": self.jitter_ms,
            "available": self.available,
        }


def _slice_shares(
    capacity: Fraction, slices: Iterable[SliceConfig]
) -> dict[str, Fraction]:
    """Phase 1: dedicated capacity plus weight-proportional share of the rest.

    If every scheduling weight is zero the non-dedicated capacity stays
    unallocated (strict, non-work-conserving slicing).
    """
    slices = list(slices)
    dedicated = {s.slice_id: Fraction(s.dedicated_ratio) * capacity for s in slices}
    shared = max(capacity - sum(dedicated.values(), Fraction(0)), Fraction(0))
    total_weight = sum((Fraction(s.scheduling_weight) for s in slices), Fraction(0))
    shares = {}
    for s in slices:
        share = dedicated[s.slice_id]
        if total_weight > 0:
            share += shared * Fraction(s.scheduling_weight) / total_weight
        shares[s.slice_id] = share
    return shares


def _fill_slice(capacity: Fraction, flows: list[Flow]) -> dict[str, Fraction]:
    """Phase 2: GBR grants by ascending priority, then proportional residual."""
    grants: dict[str, Fraction] = {f.flow_id: Fraction(0) for f in flows}
    demand = {f.flow_id: Fraction(f.demand_mbps()) for f in flows}
    remaining = capacity
    for f in sorted(flows, key=lambda f: (f.priority_level, f.flow_id)):
        g = min(Fraction(f.gbr_mbps), demand[f.flow_id], remaining)
        if g > 0:
            grants[f.flow_id] = g
            remaining -= g
    residual = {fid: demand[fid] - grants[fid] for fid in grants}
    total_residual = sum(residual.values(), Fraction(0))
    if remaining > 0 and total_residual > 0:
        if remaining >= total_residual:
            for fid in grants:
                grants[fid] += residual[fid]
        else:
            for fid in grants:
                grants[fid] += remaining * residual[fid] / total_residual
    return grants


def allocate_capacity_exact(
    cell: Cell, flows: list[Flow], direction: str
) -> dict[str, Fraction]:
    """Exact-rational two-phase water-filling for one cell and direction.

    Flows whose slice is not configured on the cell receive nothing.
    The result satisfies sum(allocations) <= capacity exactly and
    allocation <= min(offered, mbr) per flow.
    """
    flows = [f for f in flows if f.direction == direction]
    capacity = Fraction(cell.capacity(direction))
    shares = _slice_shares(capacity, cell.slices)
    by_slice: dict[str, list[Flow]] = {}
    for f in flows:
        by_slice.setdefault(f.slice_id, []).append(f)
    out: dict[str, Fraction] = {f.flow_id: Fraction(0) for f in flows}
    for slice_id, slice_flows in by_slice.items():
        share = shares.get(slice_id)
        if share is None or share <= 0:
            continue
        out.update(_fill_slice(share, slice_flows))
    return out


def allocate_capacity(cell: Cell, flows: list[Flow], direction: str) -> dict[str, float]:
    """Float view of :func:`allocate_capacity_exact` (the public contract)."""
    return {fid: float(v) for fid, v in allocate_capacity_exact(cell, flows, direction).items()}


class Simulator:
    """Single-writer discrete-event simulator.

    All mutation happens through :meth:`advance` and the scheduled-mutation
    queue; readers get immutable samples and copied flow state.
    """

    def __init__(
        self,
        topology: Topology,
        flows: Iterable[Flow] = (),
        *,
        seed: int = 0,
        noise_sigma: float = 0.0,
        default_base_latency_ms: float = 12.0,
        retention_ms: int = 300_000,
    ) -> None:
        self.topology = topology
        self._cells = topology.cell_map()
        self._ues = topology.ue_map()
        self._links = {(n, c): ms for n, c, ms in topology.links}
        self._t = 0
        self._seed = seed
        self._noise_sigma = noise_sigma
        self._default_base = default_base_latency_ms
        self._rng = random.Random(seed)
        self._retention_ticks = max(1, retention_ms // TICK_MS)
        self._flows: dict[str, Flow] = {}
        self._history: dict[str, deque[MetricSample]] = {}
        self._overload_streak: dict[str, int] = {}
        for f in flows:
            self.add_flow(f)
        self._pending: list[tuple[int, int, Callable[[], None]]] = []
        self._pending_seq = 0
        self._pre_tick_hooks: list[Callable[[int], None]] = []
        self._post_tick_hooks: list[Callable[[int], None]] = []
        self._last_alloc: dict[str, float] = {}
        # Hook the edge manager installs so availability can track service state.
        self.service_presence: Callable[[str], bool] = lambda node_id: True

    # -- clock & wiring -----------------------------------------------------

    @property
    def now(self) -> int:
        return self._t

    def clock(self) -> int:
        return self._t

    def on_pre_tick(self, hook: Callable[[int], None]) -> None:
        """Register a hook run at each tick start (receives the start time)."""
        self._pre_tick_hooks.append(hook)

    def on_post_tick(self, hook: Callable[[int], None]) -> None:
        """Register a hook run after each tick's samples exist (receives end time)."""
        self._post_tick_hooks.append(hook)

    def schedule(self, effect_t_ms: int, fn: Callable[[], None]) -> None:
        """Queue a mutation applied at the start of the first tick at/after t."""
        heapq.heappush(self._pending, (effect_t_ms, self._pending_seq, fn))
        self._pending_seq += 1

    def schedule_next_tick(self, fn: Callable[[], None]) -> None:
        self.schedule(self._t, fn)

    # -- flow state -----------------------------------------------------------

    def add_flow(self, flow: Flow) -> None:
        if flow.ue_id not in self._ues:
            raise UnknownFlow(f"flow '{flow.flow_id}' references unknown ue '{flow.ue_id}'")
        self._flows[flow.flow_id] = replace(flow)
        self._history.setdefault(flow.flow_id, deque(maxlen=self._retention_ticks))
        self._overload_streak.setdefault(flow.flow_id, 0)

    def flow(self, flow_id: str) -> Flow:
        try:
            return replace(self._flows[flow_id])
        except KeyError:
            raise UnknownFlow(flow_id) from None

    def flows(self) -> list[Flow]:
        return [replace(f) for f in self._flows.values()]

    def flows_for_ue(self, ue_id: str) -> list[Flow]:
        return [replace(f) for f in self._flows.values() if f.ue_id == ue_id]

    def set_flow_fields(self, flow_id: str, **fields) -> None:
        """Immediate mutation; external callers should go through schedule()."""
        flow = self._flows.get(flow_id)
        if flow is None:
            raise UnknownFlow(flow_id)
        for key, value in fields.items():
            if not hasattr(flow, key):
                raise AttributeError(f"flow has no field '{key}'")
            setattr(flow, key, value)

    def update_slice(self, cell_id: str, slice_id: str, *, scheduling_weight=None, dedicated_ratio=None) -> None:
        cell = self._cells[cell_id]
        for s in cell.slices:
            if s.slice_id == slice_id:
                if scheduling_weight is not None:
                    s.scheduling_weight = scheduling_weight
                if dedicated_ratio is not None:
                    s.dedicated_ratio = dedicated_ratio
                return
        raise KeyError(slice_id)

    def cell(self, cell_id: str) -> Cell:
        return self._cells[cell_id]

    def cell_utilization(self, cell_id: str) -> float:
        """max over directions of offered load / capacity (ground truth)."""
        cell = self._cells[cell_id]
        util = 0.0
        for direction in (DOWNLINK, UPLINK):
            offered = sum(
                f.offered_mbps
                for f in self._flows.values()
                if f.direction == direction and self._ues[f.ue_id].cell_id == cell_id
            )
            util = max(util, offered / cell.capacity(direction))
        return util

    def base_latency(self, flow: Flow) -> float:
        if flow.dest_node_id is not None:
            ue = self._ues[flow.ue_id]
            ms = self._links.get((flow.dest_node_id, ue.cell_id))
            if ms is not None:
                return ms
        return self._default_base

    def last_allocations(self) -> dict[str, float]:
        """Ground-truth allocation of the most recent tick, by flow id."""
        return dict(self._last_alloc)

    # -- the tick loop --------------------------------------------------------

    def advance(self, dt_ms: int) -> int:
        """Advance simulated time by dt_ms (positive multiple of the tick)."""
        if not isinstance(dt_ms, int) or dt_ms <= 0 or dt_ms % TICK_MS != 0:
            raise TickMisaligned(f"dt_ms must be a positive multiple of {TICK_MS}, got {dt_ms!r}")
        for _ in range(dt_ms // TICK_MS):
            self._run_tick()
        return self._t

    def _run_tick(self) -> None:
        t_start = self._t
        while self._pending and self._pending[0][0] <= t_start:
            _, _, fn = heapq.heappop(self._pending)
            fn()
        for hook in self._pre_tick_hooks:
            hook(t_start)
        t_end = t_start + TICK_MS
        self._derive_metrics(t_end)
        self._t = t_end
        for hook in self._post_tick_hooks:
            hook(t_end)

    def _derive_metrics(self, t_end: int) -> None:
        self._last_alloc = {}
        flows = list(self._flows.values())
        for cell_id in sorted(self._cells):
            cell = self._cells[cell_id]
            cell_flows = [f for f in flows if self._ues[f.ue_id].cell_id == cell_id]
            for direction in (DOWNLINK, UPLINK):
                dir_flows = [f for f in cell_flows if f.direction == direction]
                if not dir_flows:
                    continue
                alloc = allocate_capacity_exact(cell, dir_flows, direction)
                shares = _slice_shares(Fraction(cell.capacity(direction)), cell.slices)
                slice_demand: dict[str, Fraction] = {}
                for f in dir_flows:
                    slice_demand[f.slice_id] = slice_demand.get(f.slice_id, Fraction(0)) + Fraction(
                        f.demand_mbps()
                    )
                for f in sorted(dir_flows, key=lambda f: f.flow_id):
                    self._emit_sample(t_end, cell, f, alloc[f.flow_id], shares, slice_demand)

    def _emit_sample(
        self,
        t_end: int,
        cell: Cell,
        flow: Flow,
        alloc: Fraction,
        shares: dict[str, Fraction],
        slice_demand: dict[str, Fraction],
    ) -> None:
        allocated = float(alloc)
        self._last_alloc[flow.flow_id] = allocated
        share = shares.get(flow.slice_id, Fraction(0))
        demand = slice_demand.get(flow.slice_id, Fraction(0))
        if share > 0:
            rho = min(float(demand / share), RHO_CAP)
        else:
            rho = RHO_CAP if demand > 0 else 0.0
        base = self.base_latency(flow)
        queue_ms = QUEUE_DELAY_MS * rho / (1.0 - rho)
        throughput = allocated
        if self._noise_sigma > 0.0:
            queue_ms *= max(0.0, self._rng.gauss(1.0, self._noise_sigma))
            throughput *= max(0.0, self._rng.gauss(1.0, self._noise_sigma))
        latency = base + queue_ms
        jitter = 0.2 * (latency - base)

        offered = Fraction(flow.offered_mbps)
        overloaded = offered > alloc
        streak = self._overload_streak.get(flow.flow_id, 0)
        streak = streak + 1 if overloaded else 0
        self._overload_streak[flow.flow_id] = streak
        if overloaded and streak >= cell.buffer_cap_ratio and flow.offered_mbps > 0:
            loss = max(0.0, (flow.offered_mbps - allocated) / flow.offered_mbps)
        else:
            loss = 0.0

        available = allocated > 0.0
        if available and flow.dest_node_id is not None:
            available = bool(self.service_presence(flow.dest_node_id))

        sample = MetricSample(
            t_ms=t_end,
            flow_id=flow.flow_id,
            latency_ms=latency,
            throughput_mbps=throughput,
            loss_rate=loss,
            jitter_ms=jitter,
            available=available,
        )
        self._history[flow.flow_id].append(sample)

    # -- observation ---------------------------------------------------------

    def sample_metrics(self, flow_id: str, window_ms: int) -> list[MetricSample]:
        """Samples with timestamp in (now - window, now], time-ordered."""
        if flow_id not in self._flows:
            raise UnknownFlow(flow_id)
        lo = self._t - window_ms
        return [s for s in self._history[flow_id] if lo < s.t_ms <= self._t]

    def samples_between(self, flow_id: str, t0_ms: int, t1_ms: int) -> list[MetricSample]:
        """Samples with t0 < t_ms <= t1 (same half-open convention)."""
        if flow_id not in self._flows:
            raise UnknownFlow(flow_id)
        return [s for s in self._history[flow_id] if t0_ms < s.t_ms <= t1_ms]
