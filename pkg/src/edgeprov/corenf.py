"""Minimal core-network control plane: a PCF-like policy store.

Policies target sets of UEs.  The store merges all policies that target a
UE into one set of effective rules (newest policy wins per field) and
pushes the merged result into the simulator as flow attributes, effective
from the next tick.  Each push is a single scheduled mutation, so no tick
ever observes a mix of old and new fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

from .errors import PolicyNotFound, PolicyValidationError, UnknownTarget, UnknownUe
from .simnet import Simulator

DEFAULT_PRIORITY = 9


@dataclass
class QosPolicy:
    policy_id: str | None
    target_ue_ids: list[str]
    slice_id: str | None = None
    gbr_ul_mbps: float | None = None
    gbr_dl_mbps: float | None = None
    mbr_ul_mbps: float | None = None
    mbr_dl_mbps: float | None = None
    priority_level: int | None = None
    steering_dest_node_id: str | None = None

    def validate(self) -> None:
        if not self.target_ue_ids:
            raise PolicyValidationError("target_ue_ids must be non-empty")
        for gbr, mbr, direction in (
            (self.gbr_ul_mbps, self.mbr_ul_mbps, "ul"),
            (self.gbr_dl_mbps, self.mbr_dl_mbps, "dl"),
        ):
            if gbr is not None and gbr < 0:
                raise PolicyValidationError(f"gbr_{direction}_mbps must be >= 0")
            if mbr is not None and mbr < 0:
                raise PolicyValidationError(f"mbr_{direction}_mbps must be >= 0")
            if gbr is not None and mbr is not None and gbr > mbr:
                raise PolicyValidationError(
                    f"gbr_{direction}_mbps ({gbr}) exceeds mbr_{direction}_mbps ({mbr})"
                )
        if self.priority_level is not None and not 1 <= self.priority_level <= 15:
            raise PolicyValidationError("priority_level must be in 1..15")

    def as_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "target_ue_ids": list(self.target_ue_ids),
            "slice_id": self.slice_id,
            "gbr_ul_mbps": self.gbr_ul_mbps,
            "gbr_dl_mbps": self.gbr_dl_mbps,
            "mbr_ul_mbps": self.mbr_ul_mbps,
            "mbr_dl_mbps": self.mbr_dl_mbps,
            "priority_level": self.priority_level,
            "steering_dest_node_id": self.steering_dest_node_id,
        }


@dataclass
class EffectiveRules:
    """Merged per-UE view of every policy targeting the UE."""

    ue_id: str
    slice_id: str | None = None
    gbr_ul_mbps: float = 0.0
    gbr_dl_mbps: float = 0.0
    mbr_ul_mbps: float | None = None
    mbr_dl_mbps: float | None = None
    priority_level: int = DEFAULT_PRIORITY
    steering_dest_node_id: str | None = None
    contributing_policy_ids: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "ue_id": self.ue_id,
            "slice_id": self.slice_id,
            "gbr_ul_mbps": self.gbr_ul_mbps,
            "gbr_dl_mbps": self.gbr_dl_mbps,
            "mbr_ul_mbps": self.mbr_ul_mbps,
            "mbr_dl_mbps": self.mbr_dl_mbps,
            "priority_level": self.priority_level,
            "steering_dest_node_id": self.steering_dest_node_id,
            "contributing_policy_ids": list(self.contributing_policy_ids),
        }


class PolicyService:
    """Linearizable policy store bound to a simulator.

    node_exists, when provided, validates steering destinations against the
    edge registry.
    """

    def __init__(self, sim: Simulator, node_exists: Callable[[str], bool] | None = None):
        self._sim = sim
        self._node_exists = node_exists
        self._policies: dict[str, QosPolicy] = {}
        self._revisions: dict[str, int] = {}
        self._rev_counter = 0
        self._id_counter = 0

    # -- store ----------------------------------------------------------------

    def create_policy(self, policy: QosPolicy) -> str:
        policy = replace(policy, target_ue_ids=list(policy.target_ue_ids))
        policy.validate()
        self._check_targets(policy)
        if policy.policy_id is None:
            self._id_counter += 1
            policy.policy_id = f"pol-{self._id_counter:04d}"
        elif policy.policy_id in self._policies:
            raise PolicyValidationError(f"policy '{policy.policy_id}' already exists")
        self._rev_counter += 1
        self._policies[policy.policy_id] = policy
        self._revisions[policy.policy_id] = self._rev_counter
        self._push_rules(policy.target_ue_ids)
        return policy.policy_id

    def update_policy(self, policy_id: str, policy: QosPolicy) -> None:
        if policy_id not in self._policies:
            raise PolicyNotFound(policy_id)
        policy = replace(policy, policy_id=policy_id, target_ue_ids=list(policy.target_ue_ids))
        policy.validate()
        self._check_targets(policy)
        previous_targets = self._policies[policy_id].target_ue_ids
        self._rev_counter += 1
        self._policies[policy_id] = policy
        self._revisions[policy_id] = self._rev_counter
        self._push_rules(set(previous_targets) | set(policy.target_ue_ids))
        return None

    def get_policy(self, policy_id: str) -> QosPolicy:
        try:
            return replace(self._policies[policy_id])
        except KeyError:
            raise PolicyNotFound(policy_id) from None

    def list_policies(self) -> list[QosPolicy]:
        return [replace(p) for p in self._policies.values()]

    def policy_count(self) -> int:
        return len(self._policies)

    # -- merge & enforcement ---------------------------------------------------

    def resolve_effective_rules(self, ue_id: str) -> EffectiveRules:
        if ue_id not in self._sim.topology.ue_map():
            raise UnknownUe(ue_id)
        rules = EffectiveRules(ue_id=ue_id)
        targeting = sorted(
            (p for p in self._policies.values() if ue_id in p.target_ue_ids),
            key=lambda p: self._revisions[p.policy_id],
        )
        for p in targeting:
            rules.contributing_policy_ids.append(p.policy_id)
            if p.slice_id is not None:
                rules.slice_id = p.slice_id
            if p.gbr_ul_mbps is not None:
                rules.gbr_ul_mbps = p.gbr_ul_mbps
            if p.gbr_dl_mbps is not None:
                rules.gbr_dl_mbps = p.gbr_dl_mbps
            if p.mbr_ul_mbps is not None:
                rules.mbr_ul_mbps = p.mbr_ul_mbps
            if p.mbr_dl_mbps is not None:
                rules.mbr_dl_mbps = p.mbr_dl_mbps
            if p.priority_level is not None:
                rules.priority_level = p.priority_level
            if p.steering_dest_node_id is not None:
                rules.steering_dest_node_id = p.steering_dest_node_id
        return rules

    def _check_targets(self, policy: QosPolicy) -> None:
        ue_map = self._sim.topology.ue_map()
        cell_map = self._sim.topology.cell_map()
        for ue_id in policy.target_ue_ids:
            ue = ue_map.get(ue_id)
            if ue is None:
                raise UnknownTarget(f"unknown ue '{ue_id}'")
            if policy.slice_id is not None:
                cell = cell_map[ue.cell_id]
                if policy.slice_id not in cell.slice_map():
                    raise UnknownTarget(
                        f"slice '{policy.slice_id}' not configured on cell '{ue.cell_id}'"
                    )
        if policy.steering_dest_node_id is not None and self._node_exists is not None:
            if not self._node_exists(policy.steering_dest_node_id):
                raise UnknownTarget(f"unknown node '{policy.steering_dest_node_id}'")

    def _push_rules(self, ue_ids) -> None:
        """Schedule one atomic flow update per affected UE for the next tick."""
        for ue_id in sorted(set(ue_ids)):
            rules = self.resolve_effective_rules(ue_id)
            flow_ids = [f.flow_id for f in self._sim.flows_for_ue(ue_id)]

            def apply(rules=rules, flow_ids=flow_ids):
                for fid in flow_ids:
                    flow = self._sim.flow(fid)
                    fields = {
                        "priority_level": rules.priority_level,
                        "gbr_mbps": rules.gbr_ul_mbps if flow.direction == "uplink" else rules.gbr_dl_mbps,
                        "mbr_mbps": rules.mbr_ul_mbps if flow.direction == "uplink" else rules.mbr_dl_mbps,
                    }
                    if rules.slice_id is not None:
                        fields["slice_id"] = rules.slice_id
                    if rules.steering_dest_node_id is not None:
                        fields["dest_node_id"] = rules.steering_dest_node_id
                    self._sim.set_flow_fields(fid, **fields)

            self._sim.schedule_next_tick(apply)
