"""Deterministic discrete-time scenario engine.

A scenario scripts the own-ship and intruder trajectories plus a list of
fault windows. :func:`run` builds sensor frames from ground truth, drives
:class:`~uavcas.pipeline.CasPipeline` tick by tick, flies commanded
maneuvers with a simple kinematic response and records the event trace.

Scenario file grammar (``#`` starts a comment)::

    [scenario]
    name = head_on
    dt = 0.1
    duration = 60

    [sensor]
    detection_range = 3000
    azimuth_for = 110
    elevation_for = 15

    [region]
    horizontal_radius = 3000
    vertical_half_height = 300

    [own]
    position = 0 0 1000
    velocity = 0 50 0

    [intruder A]
    position = 0 3000 1000
    segment = 0 0 -50 0      # t_start vx vy vz

    [fault 1]
    kind = StageDisable
    t_start = 0
    t_end = 60
    stage = maneuver
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

import numpy as np

from . import assessment, maneuver, tracking
from .core_types import CasError, Orientation, Position, TraceEvent, Velocity, wrap_angle
from .detection import RegionParams, SensorInput, SensorMeasure, SourceId
from .health import HealthRegistry, Source, UnavailableSink, format_record
from .maneuver import ManeuverKind
from .monitors import TickSnapshot
from .pipeline import STAGES, CasPipeline, PipelineConfig

TURN_RATE_DEG = 3.0
VERTICAL_RATE = 5.0
GOLDEN_ANGLE = 137.50776405003785


class ParseError(CasError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(CasError):
    def __init__(self, field_name: str, reason: str, line: Optional[int] = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field_name}: {reason}{where}")
        self.field_name = field_name
        self.line = line


class FaultKind(str, Enum):
    SensorFailure = "SensorFailure"
    SoftwareErrorDrop = "SoftwareErrorDrop"
    CommDelay = "CommDelay"
    ConfigError = "ConfigError"
    PhysicalObstruction = "PhysicalObstruction"
    PhantomDetection = "PhantomDetection"
    StageDisable = "StageDisable"


@dataclass(frozen=True)
class FaultInjection:
    kind: FaultKind
    t_start: float
    t_end: float
    params: Mapping[str, str] = field(default_factory=dict)

    def active(self, t: float) -> bool:
        return self.t_start - 1e-9 <= t <= self.t_end + 1e-9


@dataclass(frozen=True)
class SensorConfig:
    detection_range: float = 3000.0
    azimuth_for: float = 110.0
    elevation_for: float = 15.0
    coop_range: float = 37040.0
    coop_azimuth_for: float = 110.0
    coop_elevation_for: float = 15.0
    update_period: float = 1.0


@dataclass(frozen=True)
class OwnSpec:
    position: Position
    velocity: Velocity


@dataclass(frozen=True)
class IntruderSpec:
    id: str
    position: Position
    segments: tuple[tuple[float, Velocity], ...] = ()

    def position_at(self, t: float) -> Position:
        """Ground truth under piecewise-constant velocity."""
        x, y, z = self.position.as_tuple()
        segs = self.segments
        for i, (t0, v) in enumerate(segs):
            if t0 >= t:
                break
            t1 = segs[i + 1][0] if i + 1 < len(segs) else math.inf
            span = min(t, t1) - t0
            x += v.x * span
            y += v.y * span
            z += v.z * span
        return Position(x, y, z)

    def velocity_at(self, t: float) -> Velocity:
        v = Velocity()
        for t0, seg_v in self.segments:
            if t0 <= t:
                v = seg_v
        return v


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    own: OwnSpec
    dt: float = 0.1
    sensor: SensorConfig = field(default_factory=SensorConfig)
    region: RegionParams = field(default_factory=RegionParams)
    intruders: tuple[IntruderSpec, ...] = ()
    faults: tuple[FaultInjection, ...] = ()

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt)) + 1

    def time(self, tick: int) -> float:
        return round(tick * self.dt, 6)


# --------------------------------------------------------------------------
# text format

_SECTION = re.compile(r"^\[\s*([A-Za-z]+)(?:\s+([^\]\s]+))?\s*\]$")


def parse_sections(text: str) -> list[tuple[str, Optional[str], int, list[tuple[str, str, int]]]]:
    """Split key=value text into ``(section, label, line, entries)`` blocks."""
    blocks: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            blocks.append((m.group(1).lower(), m.group(2), lineno, []))
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ParseError(lineno, f"expected 'key = value', got {line!r}")
        if not blocks:
            raise ParseError(lineno, "entry outside any section")
        blocks[-1][3].append((key.strip(), value.strip(), lineno))
    return blocks


def _floats(value: str, n: int, lineno: int, key: str) -> list[float]:
    parts = value.split()
    if len(parts) != n:
        raise ParseError(lineno, f"{key} needs {n} numbers, got {value!r}")
    try:
        out = [float(p) for p in parts]
    except ValueError:
        raise ParseError(lineno, f"{key}: not a number in {value!r}") from None
    if not all(math.isfinite(x) for x in out):
        raise ValidationError(key, "non-finite value", lineno)
    return out


def _number(value: str, lineno: int, key: str) -> float:
    return _floats(value, 1, lineno, key)[0]


def _fill(cls, entries, section: str):
    names = {f.name: f for f in dataclasses.fields(cls)}
    kw = {}
    for key, value, lineno in entries:
        if key not in names:
            raise ParseError(lineno, f"unknown key {key!r} in [{section}]")
        typ = names[key].type
        kw[key] = int(_number(value, lineno, key)) if typ in ("int", int) else _number(value, lineno, key)
    return kw


def load_scenario(text: str) -> Scenario:
    blocks = parse_sections(text)
    meta: dict = {}
    sensor = SensorConfig()
    region = RegionParams()
    own = None
    intruders: list[IntruderSpec] = []
    faults: list[FaultInjection] = []
    lines: dict[str, int] = {}
    for section, label, sline, entries in blocks:
        if section == "scenario":
            for key, value, lineno in entries:
                lines[key] = lineno
                if key == "name":
                    meta["name"] = value
                elif key in ("dt", "duration"):
                    meta[key] = _number(value, lineno, key)
                else:
                    raise ParseError(lineno, f"unknown key {key!r} in [scenario]")
        elif section == "sensor":
            sensor = dataclasses.replace(sensor, **_fill(SensorConfig, entries, section))
        elif section == "region":
            region = dataclasses.replace(region, **_fill(RegionParams, entries, section))
        elif section == "own":
            vals = {}
            for key, value, lineno in entries:
                if key not in ("position", "velocity"):
                    raise ParseError(lineno, f"unknown key {key!r} in [own]")
                vals[key] = _floats(value, 3, lineno, key)
            if "position" not in vals:
                raise ValidationError("own.position", "missing", sline)
            own = OwnSpec(Position(*vals["position"]), Velocity(*vals.get("velocity", (0, 0, 0))))
        elif section == "intruder":
            if not label:
                raise ParseError(sline, "intruder section needs an id")
            pos, segs = None, []
            for key, value, lineno in entries:
                if key == "position":
                    pos = Position(*_floats(value, 3, lineno, key))
                elif key == "segment":
                    t0, vx, vy, vz = _floats(value, 4, lineno, key)
                    segs.append((t0, Velocity(vx, vy, vz), lineno))
                elif key == "velocity":
                    segs.append((0.0, Velocity(*_floats(value, 3, lineno, key)), lineno))
                else:
                    raise ParseError(lineno, f"unknown key {key!r} in [intruder {label}]")
            if pos is None:
                raise ValidationError(f"intruder {label}.position", "missing", sline)
            starts = [s[0] for s in segs]
            if starts and (starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:]))):
                raise ValidationError(f"intruder {label}.segment",
                                      "segments must start at 0 and strictly increase", segs[0][2])
            intruders.append(IntruderSpec(label, pos, tuple((s[0], s[1]) for s in segs)))
            lines[f"intruder:{label}"] = sline
        elif section == "fault":
            kv = {k: (v, ln) for k, v, ln in entries}
            if "kind" not in kv:
                raise ValidationError(f"fault {label}.kind", "missing", sline)
            try:
                kind = FaultKind(kv["kind"][0])
            except ValueError:
                raise ValidationError(f"fault {label}.kind", f"unknown fault kind {kv['kind'][0]!r}",
                                      kv["kind"][1]) from None
            if "t_start" not in kv or "t_end" not in kv:
                raise ValidationError(f"fault {label}.window", "t_start and t_end are required", sline)
            t0 = _number(kv["t_start"][0], kv["t_start"][1], "t_start")
            t1 = _number(kv["t_end"][0], kv["t_end"][1], "t_end")
            params = {k: v for k, (v, _) in kv.items() if k not in ("kind", "t_start", "t_end")}
            faults.append(FaultInjection(kind, t0, t1, params))
            lines[f"fault:{label}"] = sline
        else:
            raise ParseError(sline, f"unknown section [{section}]")

    if own is None:
        raise ValidationError("own", "missing [own] section")
    if "duration" not in meta:
        raise ValidationError("duration", "missing")
    scn = Scenario(
        name=meta.get("name", "scenario"),
        duration=meta["duration"],
        own=own,
        dt=meta.get("dt", 0.1),
        sensor=sensor,
        region=region,
        intruders=tuple(intruders),
        faults=tuple(faults),
    )
    validate_scenario(scn, lines)
    return scn


def validate_scenario(scn: Scenario, lines: Optional[Mapping[str, int]] = None) -> None:
    lines = lines or {}
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", scn.name):
        raise ValidationError("name", f"{scn.name!r} is not a plain file stem", lines.get("name"))
    if not scn.dt >= 0.001:
        raise ValidationError("dt", f"must be >= 0.001 s, got {scn.dt}", lines.get("dt"))
    if abs(scn.dt * 1000 - round(scn.dt * 1000)) > 1e-6:
        raise ValidationError("dt", "must be a whole number of milliseconds", lines.get("dt"))
    if not scn.duration >= scn.dt:
        raise ValidationError("duration", f"must be >= dt, got {scn.duration}", lines.get("duration"))
    if not scn.region.horizontal_radius > 0 or not scn.region.vertical_half_height > 0:
        raise ValidationError("region", "dimensions must be positive")
    if scn.sensor.detection_range <= 0 or scn.sensor.update_period <= 0:
        raise ValidationError("sensor", "detection_range and update_period must be positive")
    if not scn.own.velocity.within_bound():
        raise ValidationError("own.velocity", "speed above sanity bound")
    ids = [i.id for i in scn.intruders]
    if len(set(ids)) != len(ids):
        raise ValidationError("intruders", "duplicate intruder id")
    for i in scn.intruders:
        if any(not v.within_bound() for _, v in i.segments):
            raise ValidationError(f"intruder {i.id}.segment", "speed above sanity bound",
                                  lines.get(f"intruder:{i.id}"))
    for n, f in enumerate(scn.faults):
        if not (0 <= f.t_start <= f.t_end <= scn.duration):
            raise ValidationError(f"fault {n + 1}.window",
                                  f"need 0 <= t_start <= t_end <= duration, got [{f.t_start}, {f.t_end}]")
        if f.kind is FaultKind.StageDisable and f.params.get("stage") not in STAGES:
            raise ValidationError(f"fault {n + 1}.stage", f"expected one of {STAGES}")


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


_CONFIG_SECTIONS = {
    "tracking": tracking.TrackingConfig,
    "assessment": assessment.AssessmentParams,
    "maneuver": maneuver.ManeuverParams,
}


def load_pipeline_config(text: str, base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    """Apply ``[tracking]``/``[assessment]``/``[maneuver]``/``[pipeline]`` overrides."""
    cfg = base
    for section, _, sline, entries in parse_sections(text):
        if section in _CONFIG_SECTIONS:
            cls = _CONFIG_SECTIONS[section]
            kw = _fill(cls, entries, section)
            try:
                cfg = dataclasses.replace(cfg, **{section: dataclasses.replace(getattr(cfg, section), **kw)})
            except ValueError as exc:
                raise ValidationError(section, str(exc), sline) from None
        elif section == "pipeline":
            cfg = dataclasses.replace(cfg, **_fill(PipelineConfig, entries, section))
        else:
            raise ParseError(sline, f"unknown section [{section}]")
    return cfg


# --------------------------------------------------------------------------
# own-ship kinematics

@dataclass(frozen=True)
class OwnState:
    position: Position
    heading: float        # degrees
    ground_speed: float   # horizontal, m/s
    vz: float

    @property
    def velocity(self) -> Velocity:
        h = math.radians(self.heading)
        return Velocity(self.ground_speed * math.sin(h), self.ground_speed * math.cos(h), self.vz)

    @property
    def orientation(self) -> Orientation:
        return Orientation.from_velocity(self.velocity) if (self.ground_speed or self.vz) else Orientation(self.heading, 0.0)

    @classmethod
    def from_spec(cls, spec: OwnSpec) -> OwnState:
        v = spec.velocity
        heading = math.degrees(math.atan2(v.x, v.y)) % 360.0 if (v.x or v.y) else 0.0
        return cls(spec.position, heading, math.hypot(v.x, v.y), v.z)


def maneuver_rates(kind: Optional[ManeuverKind], nominal_vz: float) -> tuple[float, float]:
    """(turn rate deg/s, vertical speed m/s) while ``kind`` is active."""
    if kind is None:
        return 0.0, nominal_vz
    return kind.turn * TURN_RATE_DEG, kind.vertical * VERTICAL_RATE


def advance(own: OwnState, kind: Optional[ManeuverKind], nominal_vz: float, dt: float) -> OwnState:
    """Exact constant-turn-rate propagation over ``dt``."""
    omega_deg, vz = maneuver_rates(kind, nominal_vz)
    s = own.ground_speed
    h0 = math.radians(own.heading)
    if omega_deg == 0.0:
        dx, dy = s * math.sin(h0) * dt, s * math.cos(h0) * dt
        h1 = own.heading
    else:
        w = math.radians(omega_deg)
        h = h0 + w * dt
        dx = s / w * (math.cos(h0) - math.cos(h))
        dy = s / w * (math.sin(h) - math.sin(h0))
        h1 = (own.heading + omega_deg * dt) % 360.0
    p = own.position
    return OwnState(Position(p.x + dx, p.y + dy, p.z + vz * dt), h1, s, vz)


# --------------------------------------------------------------------------
# frames and faults

def _faults_at(scn: Scenario, t: float, kind: FaultKind) -> list[FaultInjection]:
    return [f for f in scn.faults if f.kind is kind and f.active(t)]


def _phantom_measures(scn: Scenario, tick: int, t: float, own: OwnState) -> list[SensorMeasure]:
    out = []
    for f in _faults_at(scn, t, FaultKind.PhantomDetection):
        period = max(1, int(float(f.params.get("period", 1))))
        if tick % period:
            continue
        rng = float(f.params.get("range", 0.8 * min(scn.region.horizontal_radius, scn.sensor.detection_range)))
        width = 2.0 * min(abs(scn.sensor.azimuth_for), 100.0)
        az = (tick * GOLDEN_ANGLE) % width - width / 2.0
        bearing = math.radians(own.heading + az)
        out.append(SensorMeasure((rng * math.sin(bearing), rng * math.cos(bearing), 0.0), f"phantom-{tick}"))
    return out


def build_frames(scn: Scenario, tick: int, own: OwnState) -> dict[Source, SensorInput]:
    """Sensor frames for one tick, with all active faults applied."""
    t = scn.time(tick)
    if any(f.params.get("target", "sensor") == "sensor" for f in _faults_at(scn, t, FaultKind.CommDelay)):
        return {}
    sensor = scn.sensor
    overrides: dict[str, float] = {}
    for f in _faults_at(scn, t, FaultKind.ConfigError):
        for key in ("detection_range", "azimuth_for", "elevation_for"):
            if key in f.params:
                overrides[key] = float(f.params[key])
    failed: set[Source] = set()
    for f in _faults_at(scn, t, FaultKind.SensorFailure):
        which = f.params.get("sensor", "all")
        failed |= set(Source) if which == "all" else {Source(which)}

    orient = own.orientation
    measures = []
    drops = _faults_at(scn, t, FaultKind.SoftwareErrorDrop)
    blocks = _faults_at(scn, t, FaultKind.PhysicalObstruction)
    for intr in scn.intruders:
        if any(f.params.get("intruder", intr.id) == intr.id for f in drops):
            continue
        p = intr.position_at(t)
        off = (p.x - own.position.x, p.y - own.position.y, p.z - own.position.z)
        if blocks:
            az = wrap_angle(math.degrees(math.atan2(off[0], off[1])) - orient.heading)
            if any(float(f.params.get("az_min", -180)) <= az <= float(f.params.get("az_max", 180))
                   for f in blocks):
                continue
        measures.append(SensorMeasure(off, intr.id))
    measures.extend(_phantom_measures(scn, tick, t, own))

    frames = {}
    for src in Source:
        frames[src] = SensorInput(
            sensor_status=src not in failed,
            detection_range=overrides.get("detection_range", sensor.detection_range),
            azimuth_for=overrides.get("azimuth_for", sensor.azimuth_for),
            elevation_for=overrides.get("elevation_for", sensor.elevation_for),
            orientation=orient,
            position=own.position,
            measures=tuple(measures),
            t=t,
            source_id=SourceId(src.value),
            velocity=own.velocity,
        )
    return frames


def _disabled(scn: Scenario, t: float) -> frozenset:
    return frozenset(f.params["stage"] for f in _faults_at(scn, t, FaultKind.StageDisable))


def _ground_down(scn: Scenario, t: float) -> bool:
    return any(f.params.get("target") == "ground" for f in _faults_at(scn, t, FaultKind.CommDelay))


# --------------------------------------------------------------------------
# run

@dataclass
class TickRow:
    t: float
    own: Position
    distances: dict[str, float]
    maneuver: Optional[ManeuverKind]


@dataclass
class RunResult:
    scenario: Scenario
    trace: list[TraceEvent]
    snapshots: list[TickSnapshot]
    gclog: list[str]
    rows: list[TickRow]
    timeline: list[Optional[ManeuverKind]]  # maneuver flown during [t_k, t_k+1)
    track_origins: dict[int, str]
    detections: list[tuple[float, frozenset]]
    pipeline: CasPipeline

    def trace_text(self) -> str:
        return "".join(format_record(ev) + "\n" for ev in self.trace)

    def gclog_text(self) -> str:
        return "".join(line + "\n" for line in self.gclog)

    def csv_text(self) -> str:
        ids = [i.id for i in self.scenario.intruders]
        out = ["t,own_x,own_y,own_z," + ",".join(f"dist_{i}" for i in ids) + ("," if ids else "") + "maneuver"]
        for r in self.rows:
            cells = [f"{r.t:.3f}", f"{r.own.x:.3f}", f"{r.own.y:.3f}", f"{r.own.z:.3f}"]
            cells += [f"{r.distances[i]:.3f}" for i in ids]
            cells.append(r.maneuver.value if r.maneuver else "")
            out.append(",".join(cells))
        return "\n".join(out) + "\n"


def run(scn: Scenario, config: PipelineConfig = PipelineConfig(), *, cpa_impl=None) -> RunResult:
    """Run the closed loop for the whole scenario."""
    registry = HealthRegistry(
        coop_range=scn.sensor.coop_range,
        coop_azimuth_for=scn.sensor.coop_azimuth_for,
        coop_elevation_for=scn.sensor.coop_elevation_for,
        update_period=scn.sensor.update_period,
        tracking_cfg=config.tracking,
        cpa_impl=cpa_impl,
    )
    pipe = CasPipeline(config, scn.region, registry)
    trace, gclog = [], []
    start_events, _ = pipe.start(0.0)
    trace.extend(start_events)
    gclog.extend(format_record(ev) for ev in start_events)

    own = OwnState.from_spec(scn.own)
    nominal_vz = scn.own.velocity.z
    snapshots, rows, timeline, detections = [], [], [], []
    for tick in range(scn.n_ticks):
        t = scn.time(tick)
        frames = build_frames(scn, tick, own)
        sink = UnavailableSink() if _ground_down(scn, t) else None
        res = pipe.step(t, frames, own.position, own.velocity, _disabled(scn, t), sink)
        trace.extend(res.events)
        gclog.extend(res.gclog)
        snapshots.append(res.snapshot)
        if res.detection is not None:
            detections.append((t, frozenset(mid for mid, _ in res.detection.traffic)))
        kind = pipe.state.active.kind if pipe.state.active is not None else None
        rows.append(TickRow(t, own.position,
                            {i.id: (i.position_at(t) - own.position).norm() for i in scn.intruders}, kind))
        timeline.append(kind)
        own = advance(own, kind, nominal_vz, scn.time(tick + 1) - t)
    return RunResult(scn, trace, snapshots, gclog, rows, timeline, dict(pipe.track_origins),
                     detections, pipe)


def without_maneuvers(scn: Scenario) -> Scenario:
    """The same scenario with the maneuver stage disabled throughout."""
    fault = FaultInjection(FaultKind.StageDisable, 0.0, scn.duration, {"stage": "maneuver"})
    return dataclasses.replace(scn, faults=scn.faults + (fault,))


# --------------------------------------------------------------------------
# oracles

def _own_truth_open_loop(scn: Scenario, t: float) -> tuple[np.ndarray, np.ndarray]:
    p = np.array(scn.own.position.as_tuple())
    v = np.array(scn.own.velocity.as_tuple())
    return p + v * t, v


def detection_predicate(own_pos, own_vel, targets, detection_range, az_half, el_half,
                        horizontal_radius, vertical_half_height) -> np.ndarray:
    """Vectorized surveillance-volume and conflict-region test.

    Works in a body frame spanned by the flight-path heading rather than
    by differencing bearings, so it shares no code path with
    :func:`uavcas.detection.detect`.
    """
    own_pos = np.asarray(own_pos, dtype=float)
    own_vel = np.asarray(own_vel, dtype=float)
    d = np.atleast_2d(np.asarray(targets, dtype=float)) - own_pos
    if d.size == 0:
        return np.zeros(0, dtype=bool)
    hs = math.hypot(own_vel[0], own_vel[1])
    fwd = own_vel[:2] / hs if hs > 0 else np.array([0.0, 1.0])
    right = np.array([fwd[1], -fwd[0]])
    pitch = np.degrees(np.arctan2(own_vel[2], hs)) if (hs > 0 or own_vel[2] != 0) else 0.0
    along = d[:, :2] @ fwd
    across = d[:, :2] @ right
    horiz = np.hypot(along, across)
    rng = np.sqrt(np.einsum("ij,ij->i", d, d))
    az = np.degrees(np.arctan2(across, along))
    el = np.degrees(np.arctan2(d[:, 2], horiz)) - pitch
    in_volume = (rng <= detection_range) & (np.abs(az) <= abs(az_half)) & (np.abs(el) <= abs(el_half)) & (rng > 0)
    in_region = (np.hypot(d[:, 0], d[:, 1]) <= horizontal_radius) & (np.abs(d[:, 2]) <= vertical_half_height)
    return in_volume & in_region


def oracle_detect(scn: Scenario, t: float, own_pos=None, own_vel=None) -> frozenset:
    """Intruders that ground truth places inside both predicates at ``t``.

    Own state defaults to the open-loop (unmaneuvered) trajectory.
    """
    if not 0 <= t <= scn.duration + 1e-9:
        raise ValueError(f"t={t} outside scenario")
    p0, v0 = _own_truth_open_loop(scn, t)
    p = p0 if own_pos is None else np.asarray(own_pos, dtype=float)
    v = v0 if own_vel is None else np.asarray(own_vel, dtype=float)
    if not scn.intruders:
        return frozenset()
    targets = [i.position_at(t).as_tuple() for i in scn.intruders]
    s = scn.sensor
    mask = detection_predicate(p, v, targets, s.detection_range, s.azimuth_for, s.elevation_for,
                               scn.region.horizontal_radius, scn.region.vertical_half_height)
    return frozenset(i.id for i, ok in zip(scn.intruders, mask) if ok)


def _rk4_own(state: np.ndarray, omega: float, vz: float, speed: float, h: float) -> np.ndarray:
    """One RK4 step of (x, y, z, heading_rad) under constant turn rate."""
    def f(s):
        return np.array([speed * math.sin(s[3]), speed * math.cos(s[3]), vz, omega])
    k1 = f(state)
    k2 = f(state + 0.5 * h * k1)
    k3 = f(state + 0.5 * h * k2)
    k4 = f(state + h * k3)
    return state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def oracle_min_separation(scn: Scenario, config: PipelineConfig = PipelineConfig(), *,
                          pipeline: bool = True, substeps: int = 10) -> float:
    """Minimum own-intruder distance over the closed-loop run.

    The run's maneuver timeline is re-flown with ``substeps`` RK4 steps per
    tick and intruder truth is sampled at every sub-step. With
    ``pipeline=False`` the own-ship flies its initial velocity throughout.
    """
    if not scn.intruders:
        return math.inf
    if pipeline:
        timeline = run(scn, config).timeline
    else:
        timeline = [None] * scn.n_ticks
    own = OwnState.from_spec(scn.own)
    state = np.array([*own.position.as_tuple(), math.radians(own.heading)])
    nominal_vz = scn.own.velocity.z
    best = math.inf
    for tick, kind in enumerate(timeline):
        t0 = scn.time(tick)
        span = scn.time(tick + 1) - t0 if tick + 1 < len(timeline) else 0.0
        omega_deg, vz = maneuver_rates(kind, nominal_vz)
        n = substeps if span > 0 else 0
        h = span / substeps if n else 0.0
        for k in range(n + 1):
            t = t0 + k * h
            for intr in scn.intruders:
                d = np.asarray(intr.position_at(t).as_tuple()) - state[:3]
                best = min(best, float(np.sqrt(d @ d)))
            if k < n:
                state = _rk4_own(state, math.radians(omega_deg), vz, own.ground_speed, h)
    return best
