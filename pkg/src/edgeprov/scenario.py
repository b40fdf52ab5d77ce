"""Scenario files: the one documented schema every entry point loads.

A scenario is a JSON document describing cells (with their slices), UEs,
edge nodes, traffic flows and optional scheduled traffic changes.  Field
names match the domain types one-to-one so a scenario can be written by
reading the dataclasses in this module and in :mod:`edgeprov.simnet`.

Top-level keys::

    name                     str, free-form label
    seed                     int, default RNG seed (CLI --seed overrides)
    noise_sigma              float >= 0, observation noise, default 0.0
    default_base_latency_ms  float > 0, path latency for flows without a
                             destination node, default 12.0
    cells                    [Cell]
    ues                      [Ue]
    edge_nodes               [EdgeNodeSpec]
    flows                    [Flow]
    traffic_schedule         [{t_ms, flow_id, offered_mbps}], optional
    models                   {"backend": "fixture"|"hub", "fixture_dir": str,
                              "hub_url": str}, optional
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import BrokenReference, SchemaError
from .simnet import Cell, Flow, SliceConfig, Topology, Ue

TIER_ORDER = {"cell_site": 0, "regional": 1, "cloud": 2}


@dataclass
class EdgeNodeSpec:
    """Edge node as declared in a scenario (pre-registration form)."""

    node_id: str
    tier: str
    cpu_cores: int
    mem_mb: int
    gpu_units: int
    attach_latency_ms: dict[str, float]
    allocated_cpu: int = 0
    allocated_mem: int = 0
    allocated_gpu: int = 0


@dataclass
class TrafficChange:
    t_ms: int
    flow_id: str
    offered_mbps: float


@dataclass
class ScenarioConfig:
    name: str
    cells: list[Cell]
    ues: list[Ue]
    edge_nodes: list[EdgeNodeSpec]
    flows: list[Flow]
    traffic_schedule: list[TrafficChange] = field(default_factory=list)
    seed: int = 0
    noise_sigma: float = 0.0
    default_base_latency_ms: float = 12.0
    models: dict[str, Any] = field(default_factory=dict)
    base_dir: Path | None = None


def _require(d: dict, key: str, kind, where: str):
    if key not in d:
        raise SchemaError(f"{where}: missing field '{key}'")
    value = d[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise SchemaError(f"{where}: field '{key}' must be {kind.__name__}, got {type(value).__name__}")
    return value


def _optional(d: dict, key: str, kind, default, where: str):
    if key not in d or d[key] is None:
        return default
    return _require(d, key, kind, where)


def _parse_slice(d: dict, where: str) -> SliceConfig:
    s = SliceConfig(
        slice_id=_require(d, "slice_id", str, where),
        scheduling_weight=_require(d, "scheduling_weight", float, where),
        dedicated_ratio=_require(d, "dedicated_ratio", float, where),
    )
    if not (s.scheduling_weight >= 0.0 and s.scheduling_weight == s.scheduling_weight):
        raise SchemaError(f"{where}: scheduling_weight must be finite and >= 0")
    if not 0.0 <= s.dedicated_ratio <= 1.0:
        raise SchemaError(f"{where}: dedicated_ratio must be in [0, 1]")
    return s


def _parse_cell(d: dict) -> Cell:
    where = f"cell '{d.get('cell_id', '?')}'"
    cell = Cell(
        cell_id=_require(d, "cell_id", str, where),
        capacity_dl_mbps=_require(d, "capacity_dl_mbps", float, where),
        capacity_ul_mbps=_require(d, "capacity_ul_mbps", float, where),
        slices=[_parse_slice(s, where) for s in _require(d, "slices", list, where)],
        buffer_cap_ratio=int(_optional(d, "buffer_cap_ratio", int, 3, where)),
    )
    if cell.capacity_dl_mbps <= 0 or cell.capacity_ul_mbps <= 0:
        raise SchemaError(f"{where}: capacities must be > 0")
    seen = set()
    for s in cell.slices:
        if s.slice_id in seen:
            raise SchemaError(f"{where}: duplicate slice '{s.slice_id}'")
        seen.add(s.slice_id)
    if sum(s.dedicated_ratio for s in cell.slices) > 1.0 + 1e-12:
        raise SchemaError(f"{where}: slice dedicated ratios sum to > 1.0")
    return cell


def _parse_ue(d: dict) -> Ue:
    where = f"ue '{d.get('ue_id', '?')}'"
    return Ue(
        ue_id=_require(d, "ue_id", str, where),
        cell_id=_require(d, "cell_id", str, where),
        device_type=_optional(d, "device_type", str, None, where),
    )


def _parse_node(d: dict) -> EdgeNodeSpec:
    where = f"edge node '{d.get('node_id', '?')}'"
    tier = _require(d, "tier", str, where)
    if tier not in TIER_ORDER:
        raise SchemaError(f"{where}: tier must be one of {sorted(TIER_ORDER)}")
    attach = _require(d, "attach_latency_ms", dict, where)
    for cell_id, ms in attach.items():
        if not isinstance(ms, (int, float)) or isinstance(ms, bool) or ms <= 0:
            raise SchemaError(f"{where}: attach_latency_ms['{cell_id}'] must be > 0")
    return EdgeNodeSpec(
        node_id=_require(d, "node_id", str, where),
        tier=tier,
        cpu_cores=_require(d, "cpu_cores", int, where),
        mem_mb=_require(d, "mem_mb", int, where),
        gpu_units=_require(d, "gpu_units", int, where),
        attach_latency_ms={k: float(v) for k, v in attach.items()},
        allocated_cpu=_optional(d, "allocated_cpu", int, 0, where),
        allocated_mem=_optional(d, "allocated_mem", int, 0, where),
        allocated_gpu=_optional(d, "allocated_gpu", int, 0, where),
    )


def _parse_flow(d: dict) -> Flow:
    where = f"flow '{d.get('flow_id', '?')}'"
    direction = _require(d, "direction", str, where)
    if direction not in ("uplink", "downlink"):
        raise SchemaError(f"{where}: direction must be 'uplink' or 'downlink'")
    flow = Flow(
        flow_id=_require(d, "flow_id", str, where),
        ue_id=_require(d, "ue_id", str, where),
        direction=direction,
        slice_id=_require(d, "slice_id", str, where),
        offered_mbps=_require(d, "offered_mbps", float, where),
        gbr_mbps=_optional(d, "gbr_mbps", float, 0.0, where),
        priority_level=_optional(d, "priority_level", int, 9, where),
        dest_node_id=_optional(d, "dest_node_id", str, None, where),
    )
    if flow.offered_mbps < 0:
        raise SchemaError(f"{where}: offered_mbps must be >= 0")
    if flow.gbr_mbps < 0:
        raise SchemaError(f"{where}: gbr_mbps must be >= 0")
    if not 1 <= flow.priority_level <= 15:
        raise SchemaError(f"{where}: priority_level must be in 1..15")
    return flow


def scenario_from_dict(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Validate a parsed scenario document and build a :class:`ScenarioConfig`.

    Raises SchemaError on missing/ill-typed fields and BrokenReference when
    entities point at undeclared ones.
    """
    if not isinstance(raw, dict):
        raise SchemaError("scenario document must be a JSON object")
    where = "scenario"
    cfg = ScenarioConfig(
        name=_optional(raw, "name", str, "unnamed", where),
        cells=[_parse_cell(c) for c in _optional(raw, "cells", list, [], where)],
        ues=[_parse_ue(u) for u in _optional(raw, "ues", list, [], where)],
        edge_nodes=[_parse_node(n) for n in _optional(raw, "edge_nodes", list, [], where)],
        flows=[_parse_flow(f) for f in _optional(raw, "flows", list, [], where)],
        seed=_optional(raw, "seed", int, 0, where),
        noise_sigma=_optional(raw, "noise_sigma", float, 0.0, where),
        default_base_latency_ms=_optional(raw, "default_base_latency_ms", float, 12.0, where),
        models=_optional(raw, "models", dict, {}, where),
        base_dir=base_dir,
    )
    for change in _optional(raw, "traffic_schedule", list, [], where):
        cfg.traffic_schedule.append(
            TrafficChange(
                t_ms=_require(change, "t_ms", int, "traffic_schedule"),
                flow_id=_require(change, "flow_id", str, "traffic_schedule"),
                offered_mbps=_require(change, "offered_mbps", float, "traffic_schedule"),
            )
        )
    _check_references(cfg)
    return cfg


def _check_references(cfg: ScenarioConfig) -> None:
    cell_ids = {c.cell_id for c in cfg.cells}
    if len(cell_ids) != len(cfg.cells):
        raise SchemaError("cell ids must be unique")
    ue_ids = set()
    for ue in cfg.ues:
        if ue.ue_id in ue_ids:
            raise SchemaError(f"duplicate ue '{ue.ue_id}'")
        ue_ids.add(ue.ue_id)
        if ue.cell_id not in cell_ids:
            raise BrokenReference(f"ue '{ue.ue_id}' references unknown cell '{ue.cell_id}'")
    node_ids = set()
    for node in cfg.edge_nodes:
        if node.node_id in node_ids:
            raise SchemaError(f"duplicate edge node '{node.node_id}'")
        node_ids.add(node.node_id)
        for cell_id in node.attach_latency_ms:
            if cell_id not in cell_ids:
                raise BrokenReference(
                    f"edge node '{node.node_id}' references unknown cell '{cell_id}'"
                )
    flow_ids = set()
    slices_by_cell = {c.cell_id: {s.slice_id for s in c.slices} for c in cfg.cells}
    ues_by_id = {u.ue_id: u for u in cfg.ues}
    for flow in cfg.flows:
        if flow.flow_id in flow_ids:
            raise SchemaError(f"duplicate flow '{flow.flow_id}'")
        flow_ids.add(flow.flow_id)
        ue = ues_by_id.get(flow.ue_id)
        if ue is None:
            raise BrokenReference(f"flow '{flow.flow_id}' references unknown ue '{flow.ue_id}'")
        if flow.slice_id not in slices_by_cell[ue.cell_id]:
            raise BrokenReference(
                f"flow '{flow.flow_id}' references slice '{flow.slice_id}' "
                f"absent from cell '{ue.cell_id}'"
            )
        if flow.dest_node_id is not None and flow.dest_node_id not in node_ids:
            raise BrokenReference(
                f"flow '{flow.flow_id}' references unknown node '{flow.dest_node_id}'"
            )
    for change in cfg.traffic_schedule:
        if change.flow_id not in flow_ids:
            raise BrokenReference(
                f"traffic_schedule references unknown flow '{change.flow_id}'"
            )
    _check_tier_ordering(cfg)


def _check_tier_ordering(cfg: ScenarioConfig) -> None:
    # Attach latencies must respect the tier hierarchy per cell: any cell-site
    # node is strictly closer than any regional node, which is closer than cloud.
    by_cell: dict[str, list[tuple[int, float, str]]] = {}
    for node in cfg.edge_nodes:
        for cell_id, ms in node.attach_latency_ms.items():
            by_cell.setdefault(cell_id, []).append((TIER_ORDER[node.tier], ms, node.node_id))
    for cell_id, entries in by_cell.items():
        for tier_a, ms_a, id_a in entries:
            for tier_b, ms_b, id_b in entries:
                if tier_a < tier_b and ms_a >= ms_b:
                    raise SchemaError(
                        f"attach latencies for cell '{cell_id}' violate tier ordering: "
                        f"'{id_a}' ({ms_a} ms) must be below '{id_b}' ({ms_b} ms)"
                    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(raw, base_dir=path.parent)


def build_topology(scenario: ScenarioConfig) -> Topology:
    """Materialize the radio topology described by a validated scenario.

    Links are derived from the edge nodes' per-cell attach latencies.
    """
    links = [
        (node.node_id, cell_id, ms)
        for node in scenario.edge_nodes
        for cell_id, ms in sorted(node.attach_latency_ms.items())
    ]
    return Topology(cells=list(scenario.cells), ues=list(scenario.ues), links=links)
