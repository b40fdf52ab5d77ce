"""Near-real-time RIC stand-in.

Subscriptions deliver indications on a fixed period of simulated time,
aggregating the selected flows' samples over the period (arithmetic mean
per metric, logical AND for availability).  Control requests mutate slice
scheduling state after a deterministic delay, bounded to the 10 ms - 1 s
near-real-time band.  Deployed xApps evaluate every indication through
their :class:`~edgeprov.monitor.XAppEngine`.

Messages also exist as length-prefixed JSON frames (see framing helpers at
the bottom) so out-of-process xApps can attach over TCP.
"""

from __future__ import annotations

import json
import socket
import struct
import threading
from dataclasses import dataclass, field
from typing import Callable

from .errors import (
    BadPeriod,
    BadSubscription,
    EmptySelector,
    OutOfRange,
    SpecInvalid,
    UnknownCell,
    UnknownSlice,
    XAppNotFound,
)
from .monitor import METRIC_NAMES, Alert, XAppEngine, XAppSpec
from .simnet import TICK_MS, Simulator

DEFAULT_CONTROL_DELAY_TICKS = 2
MIN_CONTROL_DELAY_TICKS = 1
MAX_CONTROL_DELAY_TICKS = 100

LOADED = "loaded"
RUNNING = "running"
STOPPED = "stopped"
FAILED = "failed"


@dataclass
class Subscription:
    sub_id: str | None
    xapp_id: str | None
    metric_names: list[str]
    flow_selector: dict  # {"ue_ids": [...]} and/or {"slice_id": "..."}
    period_ms: int

    def as_dict(self) -> dict:
        return {
            "sub_id": self.sub_id,
            "xapp_id": self.xapp_id,
            "metric_names": list(self.metric_names),
            "flow_selector": dict(self.flow_selector),
            "period_ms": self.period_ms,
        }


@dataclass
class ControlRequest:
    request_id: str | None
    cell_id: str
    slice_id: str
    new_scheduling_weight: float | None = None
    new_dedicated_ratio: float | None = None

    def as_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "cell_id": self.cell_id,
            "slice_id": self.slice_id,
            "new_scheduling_weight": self.new_scheduling_weight,
            "new_dedicated_ratio": self.new_dedicated_ratio,
        }


@dataclass
class ControlAck:
    request_id: str
    issued_t_ms: int
    effect_tick: int  # sim time (ms) at which the new config takes effect

    def as_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "issued_t_ms": self.issued_t_ms,
            "effect_tick": self.effect_tick,
        }


@dataclass
class XAppInstance:
    xapp_id: str
    spec: XAppSpec
    state: str
    subscriptions: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "xapp_id": self.xapp_id,
            "spec": self.spec.as_dict(),
            "state": self.state,
            "subscriptions": list(self.subscriptions),
        }


class _SubState:
    __slots__ = ("sub", "start_ms", "callback", "active", "delivered")

    def __init__(self, sub: Subscription, start_ms: int, callback):
        self.sub = sub
        self.start_ms = start_ms
        self.callback = callback
        self.active = True
        self.delivered = 0


class Ric:
    """Message bus + xApp runtime bound to one simulator."""

    def __init__(
        self,
        sim: Simulator,
        *,
        control_delay_ticks: int = DEFAULT_CONTROL_DELAY_TICKS,
        inference_source: Callable[[str, int, int], list] | None = None,
    ) -> None:
        if not MIN_CONTROL_DELAY_TICKS <= control_delay_ticks <= MAX_CONTROL_DELAY_TICKS:
            raise OutOfRange(
                f"control_delay_ticks must be in [{MIN_CONTROL_DELAY_TICKS}, {MAX_CONTROL_DELAY_TICKS}]"
            )
        self._sim = sim
        self._control_delay_ticks = control_delay_ticks
        self._inference_source = inference_source
        self._subs: dict[str, _SubState] = {}
        self._xapps: dict[str, XAppInstance] = {}
        self._engines: dict[str, XAppEngine] = {}
        self._engine_locks: dict[str, threading.Lock] = {}
        self._sub_counter = 0
        self._req_counter = 0
        self._xapp_counter = 0
        self.acks: list[ControlAck] = []
        self.on_indication: list[Callable[[dict], None]] = []
        self.on_alert: list[Callable[[Alert], None]] = []
        self.on_report: list[Callable[[dict], None]] = []
        sim.on_post_tick(self._deliver_due)

    # -- subscriptions ------------------------------------------------------------

    def subscribe(self, sub: Subscription, callback: Callable[[dict], None] | None = None) -> str:
        if sub.period_ms < TICK_MS or sub.period_ms % TICK_MS != 0:
            raise BadPeriod(f"period_ms must be a positive multiple of {TICK_MS}")
        if not sub.metric_names:
            raise BadSubscription("metric_names must be non-empty")
        unknown = [m for m in sub.metric_names if m not in METRIC_NAMES]
        if unknown:
            raise BadSubscription(f"unknown metrics: {unknown}")
        if not self._select_flows(sub.flow_selector):
            raise EmptySelector(f"selector matched no flow: {sub.flow_selector}")
        self._sub_counter += 1
        sub_id = f"sub-{self._sub_counter:04d}"
        sub.sub_id = sub_id
        self._subs[sub_id] = _SubState(sub, self._sim.now, callback)
        return sub_id

    def unsubscribe(self, sub_id: str) -> None:
        state = self._subs.get(sub_id)
        if state is not None:
            state.active = False

    def indication_count(self, sub_id: str) -> int:
        return self._subs[sub_id].delivered

    def _select_flows(self, selector: dict) -> list[str]:
        ue_ids = selector.get("ue_ids")
        slice_id = selector.get("slice_id")
        out = []
        for flow in self._sim.flows():
            if ue_ids is not None and flow.ue_id not in ue_ids:
                continue
            if slice_id is not None and flow.slice_id != slice_id:
                continue
            if ue_ids is None and slice_id is None:
                continue
            out.append(flow.flow_id)
        return sorted(out)

    def _deliver_due(self, t_end: int) -> None:
        for sub_id in sorted(self._subs):
            state = self._subs[sub_id]
            if not state.active:
                continue
            period = state.sub.period_ms
            if (t_end - state.start_ms) % period != 0 or t_end == state.start_ms:
                continue
            indication = self._build_indication(state.sub, t_end)
            state.delivered += 1
            self._dispatch(state, indication)

    def _build_indication(self, sub: Subscription, t_end: int) -> dict:
        flow_ids = self._select_flows(sub.flow_selector)
        samples = []
        for fid in flow_ids:
            samples.extend(self._sim.samples_between(fid, t_end - sub.period_ms, t_end))
        metrics: dict[str, float | bool | None] = {}
        for name in sub.metric_names:
            if not samples:
                metrics[name] = None
            elif name == "available":
                metrics[name] = all(s.available for s in samples)
            else:
                metrics[name] = sum(getattr(s, name) for s in samples) / len(samples)
        return {
            "type": "indication",
            "sub_id": sub.sub_id,
            "xapp_id": sub.xapp_id,
            "t_ms": t_end,
            "period_ms": sub.period_ms,
            "flow_ids": flow_ids,
            "sample_count": len(samples),
            "metrics": metrics,
        }

    def _dispatch(self, state: _SubState, indication: dict) -> None:
        for hook in self.on_indication:
            hook(indication)
        if state.callback is not None:
            state.callback(indication)
        xapp_id = state.sub.xapp_id
        if xapp_id is not None and xapp_id in self._engines:
            instance = self._xapps[xapp_id]
            if instance.state != RUNNING:
                return
            engine = self._engines[xapp_id]
            with self._engine_locks[xapp_id]:
                events = engine.consume(indication)
                for alert in events:
                    for hook in self.on_alert:
                        hook(alert)
                self._maybe_report(instance, engine, indication["t_ms"])

    def _maybe_report(self, instance: XAppInstance, engine: XAppEngine, t_ms: int) -> None:
        spec = instance.spec
        every = spec.report_every_periods
        if every < 1:
            return
        consumed = len(engine.indications)
        if consumed % every != 0:
            return
        window = spec.period_ms * every
        inference = None
        if spec.track_inference and self._inference_source is not None:
            inference = self._inference_source(instance.xapp_id, t_ms - window, t_ms)
        try:
            report = engine.aggregate_report(window, t_ms, inference_samples=inference)
        except Exception:
            return
        for hook in self.on_report:
            hook(report.as_dict())

    # -- control ----------------------------------------------------------------------

    def send_control(self, request: ControlRequest) -> ControlAck:
        cell_map = self._sim.topology.cell_map()
        cell = cell_map.get(request.cell_id)
        if cell is None:
            raise UnknownCell(request.cell_id)
        slices = cell.slice_map()
        if request.slice_id not in slices:
            raise UnknownSlice(request.slice_id)
        weight = request.new_scheduling_weight
        ratio = request.new_dedicated_ratio
        if weight is None and ratio is None:
            raise OutOfRange("control request must set at least one field")
        if weight is not None and (weight < 0 or weight != weight or weight == float("inf")):
            raise OutOfRange("new_scheduling_weight must be finite and >= 0")
        if ratio is not None:
            if not 0.0 <= ratio <= 1.0:
                raise OutOfRange("new_dedicated_ratio must be in [0, 1]")
            other = sum(
                s.dedicated_ratio for s in cell.slices if s.slice_id != request.slice_id
            )
            if other + ratio > 1.0 + 1e-12:
                raise OutOfRange(
                    f"dedicated ratios would sum to {other + ratio:.3f} on cell '{request.cell_id}'"
                )
        self._req_counter += 1
        if request.request_id is None:
            request.request_id = f"req-{self._req_counter:04d}"
        issued = self._sim.now
        effect = issued + self._control_delay_ticks * TICK_MS
        cell_id, slice_id = request.cell_id, request.slice_id

        def apply():
            self._sim.update_slice(
                cell_id, slice_id, scheduling_weight=weight, dedicated_ratio=ratio
            )

        self._sim.schedule(effect, apply)
        ack = ControlAck(request_id=request.request_id, issued_t_ms=issued, effect_tick=effect)
        self.acks.append(ack)
        return ack

    # -- xApp runtime --------------------------------------------------------------------

    def deploy_xapp(self, spec: XAppSpec) -> str:
        try:
            spec.validate()
        except SpecInvalid:
            raise
        self._xapp_counter += 1
        xapp_id = f"xapp-{self._xapp_counter:04d}"
        engine = XAppEngine(spec, xapp_id)
        sub = Subscription(
            sub_id=None,
            xapp_id=xapp_id,
            metric_names=list(spec.metrics),
            flow_selector=dict(spec.selector),
            period_ms=spec.period_ms,
        )
        try:
            sub_id = self.subscribe(sub)
        except (BadPeriod, BadSubscription, EmptySelector) as exc:
            raise SpecInvalid(f"subscription rejected: {exc}") from exc
        instance = XAppInstance(xapp_id=xapp_id, spec=spec, state=RUNNING, subscriptions=[sub_id])
        self._xapps[xapp_id] = instance
        self._engines[xapp_id] = engine
        self._engine_locks[xapp_id] = threading.Lock()
        return xapp_id

    def stop_xapp(self, xapp_id: str) -> None:
        instance = self._xapps.get(xapp_id)
        if instance is None:
            raise XAppNotFound(xapp_id)
        for sub_id in instance.subscriptions:
            self.unsubscribe(sub_id)
        instance.state = STOPPED

    def xapp(self, xapp_id: str) -> XAppInstance:
        instance = self._xapps.get(xapp_id)
        if instance is None:
            raise XAppNotFound(xapp_id)
        return instance

    def xapps(self) -> list[XAppInstance]:
        return list(self._xapps.values())

    def xapp_count(self) -> int:
        return len(self._xapps)

    def engine(self, xapp_id: str) -> XAppEngine:
        if xapp_id not in self._engines:
            raise XAppNotFound(xapp_id)
        return self._engines[xapp_id]

    def alerts(self) -> list[Alert]:
        out = []
        for engine in self._engines.values():
            out.extend(engine.alerts)
        return sorted(out, key=lambda a: (a.t_ms, a.alert_id))


# -- length-prefixed JSON framing ---------------------------------------------------


def encode_frame(message: dict) -> bytes:
    """4-byte big-endian length prefix + UTF-8 JSON body."""
    body = json.dumps(message, sort_keys=True).encode("utf-8")
    return struct.pack(">I", len(body)) + body


class FrameDecoder:
    """Incremental decoder for a stream of length-prefixed JSON frames."""

    def __init__(self) -> None:
        self._buf = b""

    def feed(self, data: bytes) -> list[dict]:
        self._buf += data
        out = []
        while len(self._buf) >= 4:
            (length,) = struct.unpack(">I", self._buf[:4])
            if len(self._buf) < 4 + length:
                break
            body = self._buf[4 : 4 + length]
            self._buf = self._buf[4 + length :]
            out.append(json.loads(body.decode("utf-8")))
        return out


class E2Bridge:
    """Optional TCP endpoint for out-of-process xApps.

    Clients send ``{"type": "subscription", ...}`` or ``{"type": "control",
    ...}`` frames; the bridge answers with ack frames and forwards matching
    indications as they are produced.
    """

    def __init__(self, ric: Ric, host: str = "127.0.0.1", port: int = 0):
        self._ric = ric
        self._server = socket.create_server((host, port))
        self.address = self._server.getsockname()
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._running = True
        self._accept_thread.start()

    def close(self) -> None:
        self._running = False
        try:
            self._server.close()
        except OSError:
            pass

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve(self, conn: socket.socket) -> None:
        decoder = FrameDecoder()
        send_lock = threading.Lock()

        def send(message: dict) -> None:
            with send_lock:
                try:
                    conn.sendall(encode_frame(message))
                except OSError:
                    pass

        with conn:
            while True:
                try:
                    data = conn.recv(4096)
                except OSError:
                    return
                if not data:
                    return
                for message in decoder.feed(data):
                    self._handle(message, send)

    def _handle(self, message: dict, send) -> None:
        kind = message.get("type")
        try:
            if kind == "subscription":
                sub = Subscription(
                    sub_id=None,
                    xapp_id=message.get("xapp_id"),
                    metric_names=message.get("metric_names", []),
                    flow_selector=message.get("flow_selector", {}),
                    period_ms=message.get("period_ms", 0),
                )
                sub_id = self._ric.subscribe(sub, callback=send)
                send({"type": "ack", "ok": True, "sub_id": sub_id})
            elif kind == "control":
                request = ControlRequest(
                    request_id=message.get("request_id"),
                    cell_id=message.get("cell_id", ""),
                    slice_id=message.get("slice_id", ""),
                    new_scheduling_weight=message.get("new_scheduling_weight"),
                    new_dedicated_ratio=message.get("new_dedicated_ratio"),
                )
                ack = self._ric.send_control(request)
                send({"type": "ack", "ok": True, **ack.as_dict()})
            else:
                send({"type": "ack", "ok": False, "error": f"unknown type '{kind}'"})
        except Exception as exc:  # surface bus errors to the remote peer
            send({"type": "ack", "ok": False, "error": f"{type(exc).__name__}: {exc}"})
