"""Health management: sensor data integrity, self-tests, redundancy
failover, false-alarm persistence filtering and the ground-control link."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .core_types import MAX_SPEED_MPS, CasError, EventKind, TraceEvent, event


class SinkUnavailable(CasError):
    pass


class Component(str, Enum):
    PrimarySensor = "PrimarySensor"
    SecondarySensor = "SecondarySensor"
    Detection = "Detection"
    Tracking = "Tracking"
    Assessment = "Assessment"
    Maneuver = "Maneuver"
    GroundLink = "GroundLink"


class Status(str, Enum):
    Ok = "Ok"
    Degraded = "Degraded"
    Failed = "Failed"


@dataclass(frozen=True)
class ComponentHealth:
    component: Component
    status: Status
    last_checked: float


# --------------------------------------------------------------------------
# integrity

@dataclass(frozen=True)
class IntegrityVerdict:
    violations: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations


def integrity_check(inp, previous_t: Optional[float] = None,
                    max_speed: float = MAX_SPEED_MPS) -> IntegrityVerdict:
    """Screen a sensor frame before detection uses it.

    Every violation found is listed, e.g. ``NonFiniteField:position.z``.
    """
    bad: list[str] = []
    scalars = {
        "t": inp.t,
        "detection_range": inp.detection_range,
        "azimuth_for": inp.azimuth_for,
        "elevation_for": inp.elevation_for,
        "orientation.heading": inp.orientation.heading,
        "orientation.pitch": inp.orientation.pitch,
    }
    for axis in "xyz":
        scalars[f"position.{axis}"] = getattr(inp.position, axis)
        scalars[f"velocity.{axis}"] = getattr(inp.velocity, axis)
    for name, v in scalars.items():
        if not math.isfinite(v):
            bad.append(f"NonFiniteField:{name}")
    seen: set[str] = set()
    for m in inp.measures:
        if not all(math.isfinite(c) for c in m.relative_offset):
            bad.append(f"NonFiniteField:measure.{m.measure_id}")
        elif not any(m.relative_offset):
            bad.append(f"ZeroOffset:{m.measure_id}")
        if m.measure_id in seen:
            bad.append(f"DuplicateMeasure:{m.measure_id}")
        seen.add(m.measure_id)
    if previous_t is not None and math.isfinite(inp.t) and not inp.t > previous_t:
        bad.append(f"OutOfOrderTimestamp:{inp.t}")
    if inp.velocity.is_finite() and inp.velocity.norm() >= max_speed:
        bad.append(f"SpeedAboveBound:{inp.velocity.norm():.3f}")
    return IntegrityVerdict(tuple(bad))


# --------------------------------------------------------------------------
# redundancy and false alarms

class Source(str, Enum):
    Primary = "Primary"
    Secondary = "Secondary"


@dataclass(frozen=True)
class SourceSelection:
    active: Source = Source.Primary
    failover_count: int = 0
    failed: bool = False


def select_source(primary_ok: bool, secondary_ok: bool, current: SourceSelection) -> SourceSelection:
    """Pick the sensor source for this tick.

    Primary is preferred at start, but once failed over the Secondary is kept
    (no automatic fail-back) until it fails too. With both down the current
    source is retained and ``failed`` is raised.
    """
    ok = {Source.Primary: primary_ok, Source.Secondary: secondary_ok}
    if ok[current.active]:
        return SourceSelection(current.active, current.failover_count, False)
    other = Source.Secondary if current.active is Source.Primary else Source.Primary
    if ok[other]:
        return SourceSelection(other, current.failover_count + 1, False)
    return SourceSelection(current.active, current.failover_count, True)


def persistence_filter(history: Sequence[bool], k: int) -> bool:
    """True iff the last ``k`` entries of the detection history are all hits."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return len(history) >= k and all(history[-k:])


# --------------------------------------------------------------------------
# ground link

def format_record(ev: TraceEvent) -> str:
    body = ";".join(f"{k}={v}" for k, v in ev.payload.items())
    return f"{ev.t:.3f}|{ev.kind.value}|{body}"


def parse_record(line: str) -> TraceEvent:
    line = line.rstrip("\n")
    parts = line.split("|")
    if len(parts) != 3:
        raise ValueError(f"malformed record {line!r}")
    t_s, kind, body = parts
    payload = {}
    if body:
        for item in body.split(";"):
            k, sep, v = item.partition("=")
            if not sep or not k:
                raise ValueError(f"malformed payload item {item!r} in {line!r}")
            payload[k] = v
    return TraceEvent(float(t_s), EventKind(kind), payload)


def emit_ground_event(ev: TraceEvent, sink) -> str:
    """Append one ground-link record to ``sink`` and return it.

    ``sink`` is anything with ``write`` (a text file) or ``append`` (a list).
    Any failure to write is reported as :class:`SinkUnavailable`.
    """
    line = format_record(ev) + "\n"
    try:
        if hasattr(sink, "write"):
            sink.write(line)
        else:
            sink.append(line)
    except Exception as exc:
        raise SinkUnavailable(str(exc)) from exc
    return line


class UnavailableSink:
    def write(self, line: str):
        raise OSError("ground link down")


# --------------------------------------------------------------------------
# self-tests

CPA_FIXTURE = ((1000.0, 0.0, 0.0), (-100.0, 0.0, 0.0), 10.0, 0.0)


@dataclass
class HealthRegistry:
    """What the self-tests probe. Built once per run, mutated tick by tick."""

    coop_range: float = 37040.0
    coop_azimuth_for: float = 110.0
    coop_elevation_for: float = 15.0
    update_period: float = 1.0
    tracking_cfg: object = None
    cpa_impl: Optional[Callable] = None
    cpa_fixture: tuple = CPA_FIXTURE
    frame_times: list = field(default_factory=list)
    selection: SourceSelection = field(default_factory=SourceSelection)
    status: dict = field(default_factory=dict)

    def set_status(self, comp: Component, status: Status, t: float):
        self.status[comp] = ComponentHealth(comp, status, t)


@dataclass(frozen=True)
class SelfTestReport:
    t: float
    passed: bool
    components: tuple[ComponentHealth, ...]
    failures: tuple[str, ...] = ()
    kind: str = "startup"


def _probe_maneuver() -> bool:
    from .assessment import ThreatAssessment, ThreatLevel
    from .maneuver import ActiveManeuverState, Transition, classify, determine, step_command

    a = ThreatAssessment(1, ThreatLevel.High, 10.0, True, 0.0, 10.0, 0.0, 0.0)
    b = ThreatAssessment(2, ThreatLevel.High, 2.0, True, 0.0, 2.0, 0.0, 0.0)
    idle = ActiveManeuverState()
    empty = determine([])
    if classify(idle, empty, []) is not Transition.Idle:
        return False
    cmds, on_a = step_command(idle, determine([a]), [a], 0.0)
    expected = [
        (on_a, [a], Transition.Continue),
        (on_a, [], Transition.Terminate),
        (on_a, [b, a], Transition.Replace),
    ]
    if len(cmds) != 1:
        return False
    return all(classify(st, determine(asm), asm) is tr for st, asm, tr in expected)


def _component_checks(reg: HealthRegistry) -> dict[Component, list[str]]:
    from .assessment import cpa
    from .detection import validate_cooperative_config
    from .tracking import TrackingConfig

    fails: dict[Component, list[str]] = {}
    rep = validate_cooperative_config(reg.coop_range, reg.coop_azimuth_for,
                                      reg.coop_elevation_for, reg.update_period)
    if not rep.passed:
        fails[Component.Detection] = [f"config:{f}" for f in rep.failures]

    cfg = reg.tracking_cfg
    if cfg is None:
        cfg = TrackingConfig()
    if not isinstance(cfg, TrackingConfig) or cfg.problems():
        fails[Component.Tracking] = ["config"]

    fn = reg.cpa_impl or cpa
    p, v, t_exp, miss_exp = reg.cpa_fixture
    try:
        res = fn(p, v)
        good = abs(res.t_cpa - t_exp) <= 1e-9 and abs(res.miss_distance - miss_exp) <= 1e-9 and res.closing
    except Exception:
        good = False
    if not good:
        fails[Component.Assessment] = ["cpa_fixture"]

    try:
        good = _probe_maneuver()
    except Exception:
        good = False
    if not good:
        fails[Component.Maneuver] = ["state_machine"]
    return fails


def _report(reg: HealthRegistry, t: float, fails: dict[Component, list[str]], kind: str,
            extra: Sequence[str] = (), trace: Optional[list] = None) -> SelfTestReport:
    for comp in (Component.Detection, Component.Tracking, Component.Assessment, Component.Maneuver):
        reg.set_status(comp, Status.Failed if comp in fails else Status.Ok, t)
    names = [c.value for c in fails] + list(extra)
    comps = tuple(reg.status[c] for c in Component if c in reg.status)
    report = SelfTestReport(t, not names, comps, tuple(names), kind)
    if trace is not None:
        trace.append(event(t, EventKind.SelfTestResult, kind=kind, passed=report.passed,
                           failed=",".join(names)))
    return report


def startup_self_test(registry: HealthRegistry, t: float = 0.0,
                      trace: Optional[list] = None) -> SelfTestReport:
    return _report(registry, t, _component_checks(registry), "startup", trace=trace)


def period_crossed(t: float, period: float, prev_t: Optional[float]) -> bool:
    eps = 1e-9
    k_now = math.floor(t / period + eps)
    if prev_t is None:
        return t > 0 and abs(t / period - round(t / period)) < eps
    return k_now > math.floor(prev_t / period + eps)


def periodic_self_test(registry: HealthRegistry, t: float, period: float = 10.0,
                       prev_t: Optional[float] = None,
                       trace: Optional[list] = None) -> Optional[SelfTestReport]:
    """Re-run the startup checks when ``t`` crosses a multiple of ``period``.

    The cadence check covers sensor frames received in the last period,
    including the silence between the last frame and ``t``.
    """
    from .detection import check_cadence

    if not period_crossed(t, period, prev_t):
        return None
    fails = _component_checks(registry)
    start = t - period
    times = sorted(x for x in registry.frame_times if x <= t)
    window = [x for x in times if x >= start]
    before = [x for x in times if x < start]
    series = sorted(set(([before[-1]] if before else [start]) + window + [t]))
    extra = []
    if not check_cadence(series, registry.update_period).passed:
        extra.append("Cadence")
        sensor = (Component.PrimarySensor if registry.selection.active is Source.Primary
                  else Component.SecondarySensor)
        registry.set_status(sensor, Status.Degraded, t)
    registry.frame_times = [x for x in times if x >= start]
    return _report(registry, t, fails, "periodic", extra, trace)
