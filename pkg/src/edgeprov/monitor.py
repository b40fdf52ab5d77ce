"""QoS analytics hosted inside monitoring xApps.

Forecasting uses double exponential smoothing (level + trend):

    l0 = y0,  b0 = y1 - y0
    l_t = alpha * y_t + (1 - alpha) * (l_{t-1} + b_{t-1})
    b_t = beta * (l_t - l_{t-1}) + (1 - beta) * b_{t-1}
    forecast(h) = l_T + h * b_T

Threshold alerts follow a consecutive-k streak rule: an observed breach is
raised on exactly the k-th consecutive breaching indication and clears
after exactly k clean ones.  A predicted breach is raised as soon as the
h-step forecast crosses the threshold while the observation itself does
not, giving operators lead time before the observed alert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import BadParams, NoData, SpecInvalid, TooShort

DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.3
DEFAULT_HORIZON = 5
RESIDUAL_WINDOW = 20
ANOMALY_SIGMA = 3.0
METRIC_NAMES = ("latency_ms", "throughput_mbps", "loss_rate", "jitter_ms", "available")
COMPARATORS = {
    "gt": lambda v, t: v > t,
    "ge": lambda v, t: v >= t,
    "lt": lambda v, t: v < t,
    "le": lambda v, t: v <= t,
    "eq": lambda v, t: v == t,
}

OBSERVED_BREACH = "observed_breach"
PREDICTED_BREACH = "predicted_breach"
ANOMALY = "anomaly"
AVAILABILITY_LOSS = "availability_loss"


# -- pure analytics ------------------------------------------------------------


def holt_forecast(series: Sequence[float], alpha: float, beta: float, h: int) -> list[float]:
    """h-step-ahead forecasts from double exponential smoothing."""
    if len(series) < 2:
        raise TooShort("need at least 2 points")
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise BadParams("alpha and beta must be in (0, 1)")
    if h < 1:
        raise BadParams("h must be >= 1")
    level, trend = _holt_state(series, alpha, beta)
    return [level + step * trend for step in range(1, h + 1)]


def _holt_state(series: Sequence[float], alpha: float, beta: float) -> tuple[float, float]:
    level = series[0]
    trend = series[1] - series[0]
    for t in range(1, len(series)):
        prev = level
        level = alpha * series[t] + (1.0 - alpha) * (prev + trend)
        trend = beta * (level - prev) + (1.0 - beta) * trend
    return level, trend


def holt_trend(series: Sequence[float], alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> float:
    if len(series) < 2:
        return 0.0
    return _holt_state(series, alpha, beta)[1]


def _one_step_residuals(series: Sequence[float], alpha: float, beta: float) -> list[float]:
    level = series[0]
    trend = series[1] - series[0]
    residuals = []
    for t in range(1, len(series)):
        residuals.append(series[t] - (level + trend))
        prev = level
        level = alpha * series[t] + (1.0 - alpha) * (prev + trend)
        trend = beta * (level - prev) + (1.0 - beta) * trend
    return residuals


def detect_anomaly(
    series: Sequence[float],
    residual_window: int = RESIDUAL_WINDOW,
    *,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
) -> bool:
    """3-sigma rule on the last one-step-ahead forecast residual.

    A zero-variance residual history makes any nonzero residual anomalous.
    """
    if len(series) <= residual_window:
        raise TooShort(f"need more than {residual_window} points")
    residuals = _one_step_residuals(series, alpha, beta)
    last = residuals[-1]
    prior = residuals[-(residual_window + 1):-1]
    mean = sum(prior) / len(prior)
    variance = sum((r - mean) ** 2 for r in prior) / len(prior)
    sigma = math.sqrt(variance)
    if sigma == 0.0:
        return last != 0.0
    return abs(last) > ANOMALY_SIGMA * sigma


# -- xApp spec & alert state -----------------------------------------------------


@dataclass
class Threshold:
    metric: str
    comparator: str
    value: float
    consecutive_k: int = 3

    def breached(self, observation: float) -> bool:
        return COMPARATORS[self.comparator](observation, self.value)


@dataclass
class Predictor:
    method: str = "holt"
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    horizon_steps: int = DEFAULT_HORIZON


@dataclass
class XAppSpec:
    metrics: list[str]
    selector: dict
    period_ms: int = 100
    thresholds: list[Threshold] = field(default_factory=list)
    predictor: Predictor | None = None
    track_inference: bool = False
    report_every_periods: int = 10

    def validate(self) -> None:
        if not self.metrics:
            raise SpecInvalid("metrics must be non-empty")
        unknown = [m for m in self.metrics if m not in METRIC_NAMES]
        if unknown:
            raise SpecInvalid(f"unknown metrics: {unknown}")
        if not self.thresholds and self.predictor is None:
            raise SpecInvalid("spec must set thresholds or a predictor (nothing to monitor)")
        for t in self.thresholds:
            if t.metric not in METRIC_NAMES:
                raise SpecInvalid(f"threshold on unknown metric '{t.metric}'")
            if t.comparator not in COMPARATORS:
                raise SpecInvalid(f"unknown comparator '{t.comparator}'")
            if t.consecutive_k < 1:
                raise SpecInvalid("consecutive_k must be >= 1")
        if self.predictor is not None:
            if self.predictor.method != "holt":
                raise SpecInvalid(f"unknown predictor method '{self.predictor.method}'")
            if not (0.0 < self.predictor.alpha < 1.0 and 0.0 < self.predictor.beta < 1.0):
                raise SpecInvalid("predictor alpha and beta must be in (0, 1)")
            if self.predictor.horizon_steps < 1:
                raise SpecInvalid("horizon_steps must be >= 1")

    def as_dict(self) -> dict:
        return {
            "metrics": list(self.metrics),
            "selector": dict(self.selector),
            "period_ms": self.period_ms,
            "thresholds": [
                {
                    "metric": t.metric,
                    "comparator": t.comparator,
                    "value": t.value,
                    "consecutive_k": t.consecutive_k,
                }
                for t in self.thresholds
            ],
            "predictor": None
            if self.predictor is None
            else {
                "method": self.predictor.method,
                "alpha": self.predictor.alpha,
                "beta": self.predictor.beta,
                "horizon_steps": self.predictor.horizon_steps,
            },
            "track_inference": self.track_inference,
            "report_every_periods": self.report_every_periods,
        }


@dataclass
class Alert:
    alert_id: str
    xapp_id: str
    metric: str
    kind: str
    value: float
    threshold: float
    t_ms: int
    cleared: bool = False
    cleared_t_ms: int | None = None

    def as_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "xapp_id": self.xapp_id,
            "metric": self.metric,
            "kind": self.kind,
            "value": self.value,
            "threshold": self.threshold,
            "t_ms": self.t_ms,
            "cleared": self.cleared,
            "cleared_t_ms": self.cleared_t_ms,
        }


@dataclass
class QosReport:
    xapp_id: str
    window: tuple[int, int]
    stats: dict[str, dict[str, float]]
    inference: dict[str, float] | None
    active_alerts: list[str]
    trend_summary: dict[str, str]

    def as_dict(self) -> dict:
        return {
            "xapp_id": self.xapp_id,
            "window": list(self.window),
            "stats": self.stats,
            "inference": self.inference,
            "active_alerts": list(self.active_alerts),
            "trend_summary": self.trend_summary,
        }


@dataclass
class Recommendation:
    kind: str  # relocate_service | adjust_policy | adjust_expectations
    detail: str
    triggering_alerts: list[str]

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "detail": self.detail,
            "triggering_alerts": list(self.triggering_alerts),
        }


class _StreakState:
    __slots__ = ("breach_run", "clean_run", "active")

    def __init__(self):
        self.breach_run = 0
        self.clean_run = 0
        self.active: Alert | None = None


class XAppEngine:
    """Per-xApp alert evaluation; one instance per deployed xApp.

    consume() is fed aggregated indications in timestamp order and returns
    the alert events (raised or cleared) produced by that indication.
    """

    def __init__(self, spec: XAppSpec, xapp_id: str):
        spec.validate()
        self.spec = spec
        self.xapp_id = xapp_id
        self.history: dict[str, list[tuple[int, float]]] = {m: [] for m in spec.metrics}
        self.indications: list[dict] = []
        self.alerts: list[Alert] = []
        self._alert_counter = 0
        self._observed: dict[int, _StreakState] = {i: _StreakState() for i in range(len(spec.thresholds))}
        self._predicted: dict[int, _StreakState] = {i: _StreakState() for i in range(len(spec.thresholds))}
        self._anomaly: dict[str, _StreakState] = {m: _StreakState() for m in spec.metrics}

    def _new_alert(self, metric: str, kind: str, value: float, threshold: float, t_ms: int) -> Alert:
        self._alert_counter += 1
        alert = Alert(
            alert_id=f"{self.xapp_id}-al-{self._alert_counter:04d}",
            xapp_id=self.xapp_id,
            metric=metric,
            kind=kind,
            value=value,
            threshold=threshold,
            t_ms=t_ms,
        )
        self.alerts.append(alert)
        return alert

    def consume(self, indication: dict) -> list[Alert]:
        """Evaluate one indication; returns alerts raised or cleared by it."""
        t_ms = indication["t_ms"]
        metrics = indication["metrics"]
        self.indications.append(indication)
        for m in self.spec.metrics:
            if m in metrics and metrics[m] is not None:
                self.history[m].append((t_ms, _numeric(metrics[m])))
        events: list[Alert] = []
        for idx, threshold in enumerate(self.spec.thresholds):
            observation = metrics.get(threshold.metric)
            if observation is None:
                continue
            observation = _numeric(observation)
            events.extend(self._eval_observed(idx, threshold, observation, t_ms))
            events.extend(self._eval_predicted(idx, threshold, observation, t_ms))
        if self.spec.predictor is not None:
            events.extend(self._eval_anomaly(t_ms))
        return events

    def _eval_observed(self, idx: int, threshold: Threshold, observation: float, t_ms: int):
        state = self._observed[idx]
        breached = threshold.breached(observation)
        if breached:
            state.breach_run += 1
            state.clean_run = 0
        else:
            state.clean_run += 1
            state.breach_run = 0
        if breached and state.active is None and state.breach_run == threshold.consecutive_k:
            kind = AVAILABILITY_LOSS if threshold.metric == "available" else OBSERVED_BREACH
            alert = self._new_alert(threshold.metric, kind, observation, threshold.value, t_ms)
            state.active = alert
            return [alert]
        if not breached and state.active is not None and state.clean_run == threshold.consecutive_k:
            alert = state.active
            alert.cleared = True
            alert.cleared_t_ms = t_ms
            state.active = None
            return [alert]
        return []

    def _eval_predicted(self, idx: int, threshold: Threshold, observation: float, t_ms: int):
        predictor = self.spec.predictor
        if predictor is None:
            return []
        series = [v for _, v in self.history.get(threshold.metric, [])]
        if len(series) < 2:
            return []
        forecast = holt_forecast(series, predictor.alpha, predictor.beta, predictor.horizon_steps)[-1]
        forecast_breach = threshold.breached(forecast)
        observed_breach = threshold.breached(observation)
        state = self._predicted[idx]
        if forecast_breach and not observed_breach:
            state.breach_run += 1
            state.clean_run = 0
        else:
            state.clean_run += 1
            state.breach_run = 0
        if forecast_breach and not observed_breach and state.active is None:
            alert = self._new_alert(threshold.metric, PREDICTED_BREACH, forecast, threshold.value, t_ms)
            state.active = alert
            return [alert]
        if not forecast_breach and state.active is not None and state.clean_run >= threshold.consecutive_k:
            alert = state.active
            alert.cleared = True
            alert.cleared_t_ms = t_ms
            state.active = None
            return [alert]
        return []

    def _eval_anomaly(self, t_ms: int):
        predictor = self.spec.predictor
        events = []
        for metric in self.spec.metrics:
            if metric == "available":
                continue
            series = [v for _, v in self.history[metric]]
            if len(series) <= RESIDUAL_WINDOW:
                continue
            anomalous = detect_anomaly(series, RESIDUAL_WINDOW, alpha=predictor.alpha, beta=predictor.beta)
            state = self._anomaly[metric]
            if anomalous and state.active is None:
                alert = self._new_alert(metric, ANOMALY, series[-1], float("nan"), t_ms)
                state.active = alert
                events.append(alert)
            elif not anomalous and state.active is not None:
                alert = state.active
                alert.cleared = True
                alert.cleared_t_ms = t_ms
                state.active = None
                events.append(alert)
        return events

    # -- reporting ---------------------------------------------------------------

    def active_alerts(self) -> list[Alert]:
        return [a for a in self.alerts if not a.cleared]

    def aggregate_report(
        self,
        window_ms: int,
        now_ms: int,
        inference_samples: list[tuple[int, float]] | None = None,
    ) -> QosReport:
        t0 = now_ms - window_ms
        window_inds = [i for i in self.indications if t0 < i["t_ms"] <= now_ms]
        if not window_inds:
            raise NoData(f"no indications in ({t0}, {now_ms}]")
        stats: dict[str, dict[str, float]] = {}
        trend: dict[str, str] = {}
        predictor = self.spec.predictor or Predictor()
        for metric in self.spec.metrics:
            values = [
                _numeric(i["metrics"][metric])
                for i in window_inds
                if i["metrics"].get(metric) is not None
            ]
            if not values:
                continue
            stats[metric] = {
                "mean": sum(values) / len(values),
                "min": min(values),
                "max": max(values),
            }
            slope = holt_trend(values, predictor.alpha, predictor.beta)
            trend[metric] = "rising" if slope > 1e-9 else "falling" if slope < -1e-9 else "flat"
        inference = None
        if self.spec.track_inference and inference_samples:
            in_window = [ms for t, ms in inference_samples if t0 < t <= now_ms]
            if in_window:
                inference = {
                    "mean_ms": sum(in_window) / len(in_window),
                    "max_ms": max(in_window),
                    "count": float(len(in_window)),
                }
        return QosReport(
            xapp_id=self.xapp_id,
            window=(t0, now_ms),
            stats=stats,
            inference=inference,
            active_alerts=[a.alert_id for a in self.active_alerts()],
            trend_summary=trend,
        )


def _numeric(value) -> float:
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    return float(value)


# -- recommendations ----------------------------------------------------------------


def recommend(
    alerts: list[Alert],
    *,
    current_node,
    candidate_nodes,
    cell_id: str,
    required_cpu: int,
    required_mem_mb: int,
    requires_gpu: bool,
    policy=None,
    gbr_raise_factor: float = 1.25,
) -> list[Recommendation]:
    """Rule-based remediation hints for the active alert set."""
    active = [a for a in alerts if not a.cleared]
    if not active:
        return []
    out: list[Recommendation] = []
    unresolved: list[Alert] = []

    latency_alerts = [a for a in active if a.metric in ("latency_ms", "jitter_ms")]
    if latency_alerts:
        target = _closer_feasible_node(
            current_node, candidate_nodes, cell_id, required_cpu, required_mem_mb, requires_gpu
        )
        if target is not None:
            out.append(
                Recommendation(
                    kind="relocate_service",
                    detail=(
                        f"relocate the service from '{current_node.node_id}' to "
                        f"'{target.node_id}' ({target.attach_latency_ms[cell_id]} ms from "
                        f"cell '{cell_id}')"
                    ),
                    triggering_alerts=[a.alert_id for a in latency_alerts],
                )
            )
        else:
            unresolved.extend(latency_alerts)

    throughput_alerts = [a for a in active if a.metric in ("throughput_mbps", "loss_rate")]
    if throughput_alerts:
        if policy is not None and _gbr_headroom(policy):
            new_gbr = _raised_gbr(policy, gbr_raise_factor)
            out.append(
                Recommendation(
                    kind="adjust_policy",
                    detail=f"raise guaranteed uplink rate to {new_gbr} Mbps (25% step, capped at mbr)",
                    triggering_alerts=[a.alert_id for a in throughput_alerts],
                )
            )
        else:
            unresolved.extend(throughput_alerts)

    other = [a for a in active if a not in latency_alerts and a not in throughput_alerts]
    unresolved.extend(other)
    if unresolved:
        out.append(
            Recommendation(
                kind="adjust_expectations",
                detail=(
                    "no feasible remedy found for the remaining alerts; consider relaxing "
                    "the QoS targets or reducing offered load"
                ),
                triggering_alerts=[a.alert_id for a in unresolved],
            )
        )
    return out


def _closer_feasible_node(current_node, nodes, cell_id, cpu, mem_mb, gpu_required):
    current_ms = current_node.attach_latency_ms.get(cell_id, float("inf"))
    best = None
    for node in sorted(nodes, key=lambda n: n.node_id):
        if node.node_id == current_node.node_id:
            continue
        ms = node.attach_latency_ms.get(cell_id)
        if ms is None or ms >= current_ms:
            continue
        if node.free_cpu < cpu or node.free_mem < mem_mb:
            continue
        if gpu_required and node.free_gpu < 1:
            continue
        if best is None or ms < best.attach_latency_ms[cell_id]:
            best = node
    return best


def _gbr_headroom(policy) -> bool:
    if policy.gbr_ul_mbps is None:
        return False
    if policy.mbr_ul_mbps is None:
        return True
    return policy.gbr_ul_mbps < policy.mbr_ul_mbps


def _raised_gbr(policy, factor: float) -> float:
    raised = policy.gbr_ul_mbps * factor
    if policy.mbr_ul_mbps is not None:
        raised = min(raised, policy.mbr_ul_mbps)
    return raised
