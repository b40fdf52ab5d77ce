import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgeprov.corenf import QosPolicy
from edgeprov.edgemgr import EdgeNode
from edgeprov.errors import BadParams, NoData, SpecInvalid, TooShort
from edgeprov.monitor import (
    Alert,
    Predictor,
    Threshold,
    XAppEngine,
    XAppSpec,
    detect_anomaly,
    holt_forecast,
    recommend,
)

from .oracles import holt_unrolled, streak_alert_oracle


# -- forecasting ---------------------------------------------------------------


def test_constant_series_is_fixed_point():
    for alpha, beta in ((0.5, 0.3), (0.1, 0.9), (0.99, 0.01)):
        assert holt_forecast([5.0, 5.0, 5.0, 5.0], alpha, beta, 3) == [5.0, 5.0, 5.0]


def test_affine_series_extrapolates_exactly():
    got = holt_forecast([1.0, 2.0, 3.0, 4.0, 5.0], 0.5, 0.3, 2)
    assert got == pytest.approx([6.0, 7.0], abs=1e-9)


def test_matches_unrolled_oracle_on_random_series():
    rng = random.Random(21)
    for _ in range(50):
        series = [rng.uniform(-10, 10) for _ in range(rng.randint(2, 30))]
        alpha, beta = rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)
        h = rng.randint(1, 6)
        assert holt_forecast(series, alpha, beta, h) == pytest.approx(
            holt_unrolled(series, alpha, beta, h), abs=1e-9
        )


def test_too_short_and_bad_params():
    with pytest.raises(TooShort):
        holt_forecast([1.0], 0.5, 0.3, 1)
    with pytest.raises(BadParams):
        holt_forecast([1.0, 2.0], 0.0, 0.3, 1)
    with pytest.raises(BadParams):
        holt_forecast([1.0, 2.0], 0.5, 1.0, 1)
    with pytest.raises(BadParams):
        holt_forecast([1.0, 2.0], 0.5, 0.3, 0)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(
    st.floats(-100, 100),
    st.floats(-5, 5),
    st.integers(2, 40),
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
)
def test_affine_fixed_point_property(intercept, slope, n, alpha, beta):
    series = [intercept + slope * i for i in range(n)]
    forecast = holt_forecast(series, alpha, beta, 3)
    expected = [intercept + slope * (n - 1 + h) for h in (1, 2, 3)]
    assert forecast == pytest.approx(expected, abs=1e-6 + 1e-9 * abs(intercept))


# -- anomaly detection -------------------------------------------------------------


def test_spike_on_constant_series_detected():
    series = [2.0] * 30 + [12.0]
    assert detect_anomaly(series) is True


def test_linear_ramp_is_not_anomalous():
    series = [float(i) for i in range(30)]
    assert detect_anomaly(series) is False


def test_seeded_noise_spike_detected():
    rng = random.Random(7)
    series = [10.0 + rng.gauss(0, 1.0) for _ in range(40)]
    assert detect_anomaly(series + [series[-1] + 25.0]) is True


def test_anomaly_too_short():
    with pytest.raises(TooShort):
        detect_anomaly([1.0] * 20, residual_window=20)


# -- threshold engine -------------------------------------------------------------


def latency_spec(k=3, threshold=50.0, predictor=True, metrics=None) -> XAppSpec:
    return XAppSpec(
        metrics=metrics or ["latency_ms"],
        selector={"ue_ids": ["u1"]},
        period_ms=100,
        thresholds=[Threshold("latency_ms", "gt", threshold, consecutive_k=k)],
        predictor=Predictor() if predictor else None,
    )


def feed(engine: XAppEngine, values, t0=100, period=100):
    events = []
    for i, v in enumerate(values):
        events.append(
            (t0 + i * period, engine.consume({"t_ms": t0 + i * period, "metrics": {"latency_ms": v}}))
        )
    return events


def test_streak_broken_before_k_never_fires():
    engine = XAppEngine(latency_spec(k=3, predictor=False), "x1")
    feed(engine, [60.0, 60.0, 40.0])
    assert engine.alerts == []


def test_alert_on_exactly_third_breach():
    engine = XAppEngine(latency_spec(k=3, predictor=False), "x1")
    events = feed(engine, [60.0, 60.0, 60.0])
    raised = [e for _, evs in events for e in evs]
    assert len(raised) == 1
    assert raised[0].kind == "observed_breach"
    assert raised[0].t_ms == 300  # the third indication


def test_alert_clears_after_exactly_k_clean():
    engine = XAppEngine(latency_spec(k=3, predictor=False), "x1")
    feed(engine, [60.0, 60.0, 60.0, 40.0, 40.0])
    (alert,) = engine.alerts
    assert alert.cleared is False
    feed(engine, [40.0], t0=700)
    assert alert.cleared is True


def test_no_duplicate_alert_while_active():
    engine = XAppEngine(latency_spec(k=2, predictor=False), "x1")
    feed(engine, [60.0] * 10)
    assert len(engine.alerts) == 1


@settings(max_examples=300, deadline=None, derandomize=True)
@given(st.lists(st.booleans(), min_size=1, max_size=60), st.integers(1, 5))
def test_streak_rule_matches_oracle(pattern, k):
    engine = XAppEngine(latency_spec(k=k, predictor=False), "x1")
    got = []
    for i, breach in enumerate(pattern):
        value = 60.0 if breach else 40.0
        for alert in engine.consume({"t_ms": 100 * (i + 1), "metrics": {"latency_ms": value}}):
            got.append((i, "clear" if alert.cleared else "raise"))
    assert got == streak_alert_oracle(pattern, k)


def test_predicted_breach_fires_before_observed_on_ramp():
    engine = XAppEngine(latency_spec(k=3), "x1")
    values = [30.0 + 2.0 * i for i in range(20)]  # crosses 50 at i=10
    feed(engine, values)
    predicted = [a for a in engine.alerts if a.kind == "predicted_breach"]
    observed = [a for a in engine.alerts if a.kind == "observed_breach"]
    assert predicted and observed
    assert predicted[0].t_ms < observed[0].t_ms


def test_predicted_breach_requires_observation_clean():
    # observations 40..46 rising stay below 50 but the 3-step forecast crosses
    engine = XAppEngine(
        XAppSpec(
            metrics=["latency_ms"],
            selector={"ue_ids": ["u1"]},
            thresholds=[Threshold("latency_ms", "gt", 50.0, consecutive_k=3)],
            predictor=Predictor(horizon_steps=3),
        ),
        "x1",
    )
    feed(engine, [40.0, 42.0, 44.0, 46.0])
    kinds = [a.kind for a in engine.alerts]
    assert kinds == ["predicted_breach"]


def test_availability_threshold_maps_to_availability_loss():
    spec = XAppSpec(
        metrics=["available"],
        selector={"ue_ids": ["u1"]},
        thresholds=[Threshold("available", "lt", 1.0, consecutive_k=2)],
    )
    engine = XAppEngine(spec, "x1")
    for i, up in enumerate([False, False]):
        engine.consume({"t_ms": 100 * (i + 1), "metrics": {"available": up}})
    (alert,) = engine.alerts
    assert alert.kind == "availability_loss"


def test_spec_requires_something_to_monitor():
    with pytest.raises(SpecInvalid):
        XAppSpec(metrics=["latency_ms"], selector={}, thresholds=[], predictor=None).validate()


def test_spec_rejects_bad_alpha():
    with pytest.raises(SpecInvalid):
        XAppSpec(
            metrics=["latency_ms"],
            selector={},
            predictor=Predictor(alpha=1.5),
        ).validate()


# -- reports -----------------------------------------------------------------------


def test_single_indication_report_mean_min_max_equal():
    engine = XAppEngine(latency_spec(predictor=False), "x1")
    engine.consume({"t_ms": 100, "metrics": {"latency_ms": 33.0}})
    report = engine.aggregate_report(window_ms=100, now_ms=100)
    assert report.stats["latency_ms"] == {"mean": 33.0, "min": 33.0, "max": 33.0}


def test_empty_window_raises_nodata():
    engine = XAppEngine(latency_spec(predictor=False), "x1")
    with pytest.raises(NoData):
        engine.aggregate_report(window_ms=100, now_ms=100)


def test_report_stats_match_bruteforce():
    engine = XAppEngine(latency_spec(), "x1")
    values = [31.0, 29.5, 30.7, 35.2, 28.9, 33.3, 30.0, 32.1, 29.9, 31.5]
    feed(engine, values)
    report = engine.aggregate_report(window_ms=1000, now_ms=1000)
    assert report.stats["latency_ms"]["mean"] == pytest.approx(sum(values) / len(values))
    assert report.stats["latency_ms"]["min"] == min(values)
    assert report.stats["latency_ms"]["max"] == max(values)


def test_report_trend_signs():
    engine = XAppEngine(latency_spec(), "x1")
    feed(engine, [10.0 + i for i in range(10)])
    report = engine.aggregate_report(window_ms=1000, now_ms=1000)
    assert report.trend_summary["latency_ms"] == "rising"
    engine2 = XAppEngine(latency_spec(), "x2")
    feed(engine2, [10.0] * 10)
    assert engine2.aggregate_report(1000, 1000).trend_summary["latency_ms"] == "flat"


def test_report_includes_inference_stats_when_tracked():
    spec = latency_spec()
    spec.track_inference = True
    engine = XAppEngine(spec, "x1")
    feed(engine, [30.0, 31.0])
    report = engine.aggregate_report(200, 200, inference_samples=[(150, 40.0), (180, 80.0)])
    assert report.inference == {"mean_ms": 60.0, "max_ms": 80.0, "count": 2.0}


# -- recommendations -------------------------------------------------------------------


def _node(node_id, ms, cpu=8, gpu=0):
    return EdgeNode(
        node_id=node_id,
        tier="regional",
        cpu_cores=cpu,
        mem_mb=16384,
        gpu_units=gpu,
        attach_latency_ms={"cell-1": ms},
    )


def _latency_alert(aid="a1"):
    return Alert(aid, "x1", "latency_ms", "observed_breach", 80.0, 50.0, 1000)


def test_no_alerts_no_recommendations():
    assert recommend(
        [],
        current_node=_node("far", 20.0),
        candidate_nodes=[],
        cell_id="cell-1",
        required_cpu=2,
        required_mem_mb=1024,
        requires_gpu=False,
    ) == []


def test_latency_alert_with_closer_node_relocates():
    recs = recommend(
        [_latency_alert()],
        current_node=_node("far", 20.0),
        candidate_nodes=[_node("near", 2.0), _node("far", 20.0)],
        cell_id="cell-1",
        required_cpu=2,
        required_mem_mb=1024,
        requires_gpu=False,
    )
    assert [r.kind for r in recs] == ["relocate_service"]
    assert "near" in recs[0].detail


def test_throughput_alert_raises_gbr_capped():
    policy = QosPolicy(policy_id="p", target_ue_ids=["u"], gbr_ul_mbps=20.0, mbr_ul_mbps=22.0)
    alert = Alert("a2", "x1", "throughput_mbps", "observed_breach", 3.0, 5.0, 1000)
    recs = recommend(
        [alert],
        current_node=_node("far", 20.0),
        candidate_nodes=[],
        cell_id="cell-1",
        required_cpu=2,
        required_mem_mb=1024,
        requires_gpu=False,
        policy=policy,
    )
    assert [r.kind for r in recs] == ["adjust_policy"]
    assert "22.0" in recs[0].detail  # 20 * 1.25 = 25, capped at mbr 22


def test_exhausted_remedies_adjust_expectations():
    policy = QosPolicy(policy_id="p", target_ue_ids=["u"], gbr_ul_mbps=22.0, mbr_ul_mbps=22.0)
    alerts = [
        _latency_alert(),
        Alert("a2", "x1", "throughput_mbps", "observed_breach", 3.0, 5.0, 1000),
    ]
    recs = recommend(
        alerts,
        current_node=_node("near", 2.0),
        candidate_nodes=[_node("near", 2.0)],  # nothing closer
        cell_id="cell-1",
        required_cpu=2,
        required_mem_mb=1024,
        requires_gpu=False,
        policy=policy,
    )
    assert [r.kind for r in recs] == ["adjust_expectations"]
    assert set(recs[0].triggering_alerts) == {"a1", "a2"}
