import itertools

import pytest

from edgeprov.corenf import PolicyService, QosPolicy
from edgeprov.errors import PolicyNotFound, PolicyValidationError, UnknownTarget, UnknownUe
from edgeprov.scenario import build_topology, load_scenario
from edgeprov.simnet import Simulator


@pytest.fixture
def drone_sim(drone_scenario_path):
    cfg = load_scenario(drone_scenario_path)
    return Simulator(build_topology(cfg), cfg.flows, seed=cfg.seed)


@pytest.fixture
def pcf(drone_sim):
    return PolicyService(drone_sim, node_exists=lambda n: n in ("edge-cell-1", "edge-regional-1"))


def drone_policy(**kw) -> QosPolicy:
    kw.setdefault("policy_id", None)
    kw.setdefault("target_ue_ids", ["drone-1", "drone-2", "drone-3", "drone-4"])
    return QosPolicy(**kw)


def test_gbr_above_mbr_rejected(pcf):
    with pytest.raises(PolicyValidationError):
        pcf.create_policy(drone_policy(gbr_ul_mbps=30.0, mbr_ul_mbps=20.0))


def test_empty_targets_rejected(pcf):
    with pytest.raises(PolicyValidationError):
        pcf.create_policy(QosPolicy(policy_id=None, target_ue_ids=[]))


def test_unknown_ue_rejected(pcf):
    with pytest.raises(UnknownTarget):
        pcf.create_policy(QosPolicy(policy_id=None, target_ue_ids=["ghost"]))


def test_unknown_slice_rejected(pcf):
    with pytest.raises(UnknownTarget):
        pcf.create_policy(drone_policy(slice_id="no-such-slice"))


def test_unknown_steering_node_rejected(pcf):
    with pytest.raises(UnknownTarget):
        pcf.create_policy(drone_policy(steering_dest_node_id="nowhere"))


def test_policy_applies_to_flows_next_tick(pcf, drone_sim):
    pcf.create_policy(drone_policy(slice_id="edge-ai", gbr_ul_mbps=20.0, priority_level=5))
    # not yet visible: takes effect from the next tick
    assert drone_sim.flow("drone-1-ul").gbr_mbps == 0.0
    drone_sim.advance(10)
    for i in range(1, 5):
        flow = drone_sim.flow(f"drone-{i}-ul")
        assert flow.gbr_mbps == 20.0
        assert flow.slice_id == "edge-ai"
        assert flow.priority_level == 5
    assert drone_sim.flow("bg-ul").gbr_mbps == 0.0  # untargeted flow untouched


def test_update_raises_gbr_mid_run(pcf, drone_sim):
    pid = pcf.create_policy(drone_policy(slice_id="edge-ai", gbr_ul_mbps=1.0))
    drone_sim.advance(50)
    pcf.update_policy(pid, drone_policy(slice_id="edge-ai", gbr_ul_mbps=4.0))
    drone_sim.advance(10)
    assert drone_sim.flow("drone-1-ul").gbr_mbps == 4.0
    # allocations reflect the new guarantee from this tick onward
    assert drone_sim.last_allocations()["drone-1-ul"] >= 4.0


def test_update_unknown_policy(pcf):
    with pytest.raises(PolicyNotFound):
        pcf.update_policy("pol-9999", drone_policy())


def test_noop_update_leaves_flow_state_unchanged(pcf, drone_sim):
    body = drone_policy(gbr_ul_mbps=2.0, priority_level=7)
    pid = pcf.create_policy(body)
    drone_sim.advance(10)
    before = {f.flow_id: (f.gbr_mbps, f.priority_level, f.slice_id) for f in drone_sim.flows()}
    pcf.update_policy(pid, body)
    drone_sim.advance(10)
    after = {f.flow_id: (f.gbr_mbps, f.priority_level, f.slice_id) for f in drone_sim.flows()}
    assert before == after


def test_effective_rules_default(pcf):
    rules = pcf.resolve_effective_rules("drone-1")
    assert rules.gbr_ul_mbps == 0.0
    assert rules.priority_level == 9
    assert rules.steering_dest_node_id is None


def test_effective_rules_unknown_ue(pcf):
    with pytest.raises(UnknownUe):
        pcf.resolve_effective_rules("ghost")


def test_newest_policy_wins_per_field(pcf):
    pcf.create_policy(drone_policy(priority_level=7))
    pcf.create_policy(drone_policy(priority_level=5))
    assert pcf.resolve_effective_rules("drone-1").priority_level == 5


def test_disjoint_policies_merge_to_union(pcf):
    # merge oracle over all orderings of a gbr-only and a steering-only policy
    for first, second in itertools.permutations(
        [
            drone_policy(gbr_ul_mbps=6.0),
            drone_policy(steering_dest_node_id="edge-cell-1"),
        ]
    ):
        svc = PolicyService(pcf._sim, node_exists=lambda n: True)
        svc.create_policy(first)
        svc.create_policy(second)
        rules = svc.resolve_effective_rules("drone-2")
        assert rules.gbr_ul_mbps == 6.0
        assert rules.steering_dest_node_id == "edge-cell-1"


def test_enforcement_soundness_gbr_on_congested_cell(pcf, drone_sim):
    # before: drones squeezed by the 100 Mbps background flow
    drone_sim.advance(50)
    assert sum(drone_sim.last_allocations()[f"drone-{i}-ul"] for i in range(1, 5)) < 20.0
    pcf.create_policy(drone_policy(slice_id="edge-ai", gbr_ul_mbps=20.0))
    drone_sim.advance(10)
    for _ in range(20):
        drone_sim.advance(10)
        alloc = drone_sim.last_allocations()
        for i in range(1, 5):
            assert alloc[f"drone-{i}-ul"] >= 5.0  # min(gbr, offered)


def test_mbr_ceiling_enforced(pcf, drone_sim):
    pcf.create_policy(
        QosPolicy(policy_id=None, target_ue_ids=["bg-1"], gbr_ul_mbps=0.0, mbr_ul_mbps=30.0)
    )
    drone_sim.advance(10)
    for _ in range(10):
        drone_sim.advance(10)
        assert drone_sim.last_allocations()["bg-ul"] <= 30.0
        (sample,) = drone_sim.sample_metrics("bg-ul", 10)
        assert sample.throughput_mbps <= 30.0


def test_steering_updates_flow_destination(pcf, drone_sim):
    pcf.create_policy(drone_policy(steering_dest_node_id="edge-cell-1"))
    drone_sim.advance(10)
    assert drone_sim.flow("drone-1-ul").dest_node_id == "edge-cell-1"
    rules = pcf.resolve_effective_rules("drone-1")
    assert rules.steering_dest_node_id == "edge-cell-1"


def test_atomic_replacement_no_mixed_tick(pcf, drone_sim):
    # swap slice and gbr together; the first post-update tick must show both
    pid = pcf.create_policy(drone_policy(slice_id="edge-ai", gbr_ul_mbps=2.0))
    drone_sim.advance(10)
    pcf.update_policy(pid, drone_policy(slice_id="default", gbr_ul_mbps=3.0))
    drone_sim.advance(10)
    flow = drone_sim.flow("drone-1-ul")
    assert (flow.slice_id, flow.gbr_mbps) == ("default", 3.0)
