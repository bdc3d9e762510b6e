"""Runtime monitors over finite event traces.

Three bounded-response properties (c1-c3) and the per-tick threat handling
assertion. "Eventually" means within ``horizon_h`` ticks, the obligation's
own tick included; an obligation still open at the end of the trace is a
violation.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from .assessment import ThreatAssessment, ThreatLevel, dominates
from .core_types import CasError, EventKind, TraceEvent
from .maneuver import Maneuver, ManeuverKind, covers


class MalformedTrace(CasError):
    pass


class Property(str, Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    ThreatHandling = "ThreatHandling"


class Status(str, Enum):
    Satisfied = "Satisfied"
    Violated = "Violated"
    Vacuous = "Vacuous"


@dataclass(frozen=True)
class MonitorVerdict:
    property: Property
    status: Status
    witness: Optional[tuple[float, str]] = None

    def __post_init__(self):
        if self.status is Status.Violated and self.witness is None:
            raise ValueError("a violation needs a witness")

    def line(self) -> str:
        s = f"{self.property.value}: {self.status.value}"
        if self.witness is not None:
            s += f" at t={self.witness[0]:.3f} ({self.witness[1]})"
        return s


@dataclass(frozen=True)
class MonitorConfig:
    horizon_h: int = 20
    dt: Optional[float] = None  # tick length; inferred from the trace when None
    raw_c2: bool = False

    def __post_init__(self):
        if self.horizon_h < 1:
            raise ValueError("horizon_h must be >= 1")


@dataclass(frozen=True)
class TickSnapshot:
    t: float
    threats: tuple[ThreatAssessment, ...]
    active: Optional[Maneuver]


def check_trace(trace: Sequence[TraceEvent]) -> None:
    last = None
    for i, ev in enumerate(trace):
        if not isinstance(ev, TraceEvent):
            raise MalformedTrace(f"entry {i} is not a trace event")
        if last is not None and ev.t < last:
            raise MalformedTrace(f"time goes backwards at entry {i}: {ev.t} < {last}")
        last = ev.t


def infer_dt(trace: Sequence[TraceEvent]) -> float:
    times = sorted({ev.t for ev in trace})
    gaps = [round(b - a, 3) for a, b in zip(times, times[1:])]
    gaps = [g for g in gaps if g > 0]
    return min(gaps) if gaps else 1.0


class _Ticker:
    def __init__(self, trace: Sequence[TraceEvent], cfg: MonitorConfig):
        check_trace(trace)
        self.dt = cfg.dt or infer_dt(trace)
        self.h = cfg.horizon_h

    def tick(self, t: float) -> int:
        return int(round(t / self.dt))

    def ticks(self, trace: Iterable[TraceEvent], kind: EventKind) -> list[int]:
        return sorted({self.tick(ev.t) for ev in trace if ev.kind is kind})

    def answered(self, k: int, responses: list[int]) -> bool:
        i = bisect.bisect_left(responses, k)
        return i < len(responses) and responses[i] <= k + self.h


def check_c1(trace: Sequence[TraceEvent], cfg: MonitorConfig = MonitorConfig()) -> MonitorVerdict:
    """Every identified threat is followed by an issued maneuver command."""
    tk = _Ticker(trace, cfg)
    threats = [ev for ev in trace if ev.kind is EventKind.ThreatIdentified]
    if not threats:
        return MonitorVerdict(Property.C1, Status.Vacuous)
    cmds = tk.ticks(trace, EventKind.CommandIssued)
    for ev in threats:
        k = tk.tick(ev.t)
        if not tk.answered(k, cmds):
            return MonitorVerdict(Property.C1, Status.Violated, (
                ev.t, f"threat track {ev.payload.get('track_id')} at tick {k} "
                      f"without CommandIssued within {tk.h} ticks"))
    return MonitorVerdict(Property.C1, Status.Satisfied)


def check_c2(trace: Sequence[TraceEvent], cfg: MonitorConfig = MonitorConfig()) -> MonitorVerdict:
    """Detected traffic leads to a command.

    Guarded (default): the obligation only arises when a threat is
    identified within the horizon of the detection. ``cfg.raw_c2`` drops
    the guard.
    """
    tk = _Ticker(trace, cfg)
    detections = tk.ticks(trace, EventKind.TrafficDetected)
    if not detections:
        return MonitorVerdict(Property.C2, Status.Vacuous)
    cmds = tk.ticks(trace, EventKind.CommandIssued)
    threats = tk.ticks(trace, EventKind.ThreatIdentified)
    for k in detections:
        if not cfg.raw_c2 and not tk.answered(k, threats):
            continue
        if not tk.answered(k, cmds):
            return MonitorVerdict(Property.C2, Status.Violated, (
                k * tk.dt, f"traffic detected at tick {k} without CommandIssued within {tk.h} ticks"))
    return MonitorVerdict(Property.C2, Status.Satisfied)


def check_c3(trace: Sequence[TraceEvent], cfg: MonitorConfig = MonitorConfig()) -> MonitorVerdict:
    """Collision evaluation follows traffic detection.

    A detection at tick k is discharged by a CollisionEvaluated event within
    the horizon whose track was first seen no later than tick k.
    """
    tk = _Ticker(trace, cfg)
    detections = tk.ticks(trace, EventKind.TrafficDetected)
    if not detections:
        return MonitorVerdict(Property.C3, Status.Vacuous)
    # earliest first_seen tick evaluated at each tick
    evals: dict[int, int] = {}
    for ev in trace:
        if ev.kind is EventKind.CollisionEvaluated:
            j = tk.tick(ev.t)
            fs = ev.get_float("first_seen")
            seen = tk.tick(fs) if fs is not None else -1
            evals[j] = min(evals.get(j, seen), seen)
    for k in detections:
        if not any(evals.get(j, k + 1) <= k for j in range(k, k + tk.h + 1)):
            return MonitorVerdict(Property.C3, Status.Violated, (
                k * tk.dt, f"traffic detected at tick {k} without CollisionEvaluated within {tk.h} ticks"))
    return MonitorVerdict(Property.C3, Status.Satisfied)


def check_threat_handling(snapshots: Sequence[TickSnapshot]) -> MonitorVerdict:
    """Every threat is covered by the active maneuver or dominated by another
    threat with strictly higher level and strictly smaller time to collision."""
    any_threat = False
    for snap in snapshots:
        for a in snap.threats:
            any_threat = True
            if covers(snap.active, a.track_id):
                continue
            if any(dominates(b, a) for b in snap.threats if b.track_id != a.track_id):
                continue
            return MonitorVerdict(Property.ThreatHandling, Status.Violated, (
                snap.t, f"threat track {a.track_id} neither handled by an active maneuver nor dominated"))
    return MonitorVerdict(Property.ThreatHandling, Status.Satisfied if any_threat else Status.Vacuous)


def snapshots_from_trace(trace: Sequence[TraceEvent]) -> list[TickSnapshot]:
    """Rebuild per-tick threat/maneuver snapshots from recorded events."""
    check_trace(trace)
    by_t: dict[float, list[TraceEvent]] = defaultdict(list)
    for ev in trace:
        by_t[ev.t].append(ev)
    out = []
    for t in sorted(by_t):
        threats, active = [], None
        for ev in by_t[t]:
            if ev.kind is EventKind.ThreatIdentified:
                threats.append(ThreatAssessment(
                    ev.get_int("track_id"), ThreatLevel.parse(ev.payload.get("level", "Low")),
                    ev.get_float("ttc"), True))
            elif ev.kind is EventKind.CommandIssued:
                zone = ev.payload.get("zone", "")
                active = Maneuver(
                    ev.get_int("maneuver_id", 0), ManeuverKind(ev.payload["kind"]),
                    ev.get_int("track_id"), True, ev.get_float("ttc", 0.0), t,
                    tuple(int(z) for z in zone.split(",") if z))
            elif ev.kind is EventKind.ManeuverTerminated:
                if active is not None and active.maneuver_id == ev.get_int("maneuver_id"):
                    active = None
        out.append(TickSnapshot(t, tuple(threats), active))
    return out


def run_all(trace: Sequence[TraceEvent], cfg: MonitorConfig = MonitorConfig(),
            snapshots: Optional[Sequence[TickSnapshot]] = None) -> list[MonitorVerdict]:
    if snapshots is None:
        snapshots = snapshots_from_trace(trace)
    return [
        check_c1(trace, cfg),
        check_c2(trace, cfg),
        check_c3(trace, cfg),
        check_threat_handling(snapshots),
    ]
