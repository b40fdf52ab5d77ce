#!/usr/bin/env python3
"""Trend forecasting and proactive alerting on a worsening latency ramp.

Feeds a monitoring engine a latency series that drifts toward its 50 ms
threshold and prints the moment the forecast crosses (predicted breach)
versus the moment reality does (observed breach).
"""

from edgeprov.monitor import Predictor, Threshold, XAppEngine, XAppSpec, holt_forecast

series = [30.0 + 1.5 * k for k in range(8)]
print("latency so far:", series)
print("next 5 periods per double-exponential smoothing:",
      [round(v, 1) for v in holt_forecast(series, alpha=0.5, beta=0.3, h=5)])
print()

spec = XAppSpec(
    metrics=["latency_ms"],
    selector={"ue_ids": ["drone-1"]},
    period_ms=100,
    thresholds=[Threshold("latency_ms", "gt", 50.0, consecutive_k=3)],
    predictor=Predictor(alpha=0.5, beta=0.3, horizon_steps=5),
)
engine = XAppEngine(spec, "xapp-demo")

for k in range(24):
    t = 100 * (k + 1)
    value = 30.0 + 1.5 * k
    for alert in engine.consume({"t_ms": t, "metrics": {"latency_ms": value}}):
        what = "cleared" if alert.cleared else "raised"
        print(f"t={t:5d} ms  latency={value:5.1f}  -> {alert.kind} {what}")

report = engine.aggregate_report(window_ms=2400, now_ms=2400)
print(f"\nwindow stats: {report.stats['latency_ms']}")
print(f"trend: {report.trend_summary['latency_ms']}, active alerts: {report.active_alerts}")
