"""Traffic detection: sensor frame validation, surveillance volume and
conflict region predicates, and the per-tick detection decision."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .core_types import (
    BodySpherical,
    CasError,
    EventKind,
    Orientation,
    Position,
    TraceEvent,
    Velocity,
    event,
    nm_to_meters,
    to_body_spherical,
)

# Onboard sensor limits (inclusive).
MIN_DETECTION_RANGE = 0.2
MAX_DETECTION_RANGE = 3000.0
MAX_AZIMUTH_FOR = 110.0
MAX_ELEVATION_FOR = 15.0

# Cooperative channel minima.
MIN_COOP_RANGE = nm_to_meters(20.0)
MIN_COOP_AZIMUTH_FOR = 110.0
MIN_COOP_ELEVATION_FOR = 15.0
MAX_UPDATE_PERIOD = 1.0

DEFAULT_HORIZONTAL_RADIUS = 500.0
DEFAULT_VERTICAL_HALF_HEIGHT = 100.0


class SensorInputError(CasError):
    def __init__(self, field_name: str, value: float):
        super().__init__(f"{type(self).__name__}: {field_name}={value!r}")
        self.field_name = field_name
        self.value = value


class RangeOutOfBounds(SensorInputError):
    pass


class AzimuthOutOfBounds(SensorInputError):
    pass


class ElevationOutOfBounds(SensorInputError):
    pass


class NonPositiveDimension(CasError):
    pass


class NonMonotonicTimestamps(CasError):
    pass


class SourceId(str, Enum):
    Primary = "Primary"
    Secondary = "Secondary"


@dataclass(frozen=True)
class SensorMeasure:
    relative_offset: tuple[float, float, float]
    measure_id: str


@dataclass(frozen=True)
class SensorInput:
    sensor_status: bool
    detection_range: float
    azimuth_for: float
    elevation_for: float
    orientation: Orientation
    position: Position
    measures: tuple[SensorMeasure, ...] = ()
    t: float = 0.0
    source_id: SourceId = SourceId.Primary
    velocity: Velocity = field(default_factory=Velocity)


@dataclass(frozen=True)
class ValidatedInput:
    input: SensorInput

    @property
    def volume(self) -> SurveillanceVolume:
        return SurveillanceVolume.symmetric(
            self.input.detection_range, self.input.azimuth_for, self.input.elevation_for
        )


@dataclass(frozen=True)
class SurveillanceVolume:
    detection_range: float
    min_azimuth: float
    max_azimuth: float
    min_elevation: float
    max_elevation: float

    def __post_init__(self):
        if not self.detection_range > 0:
            raise ValueError("detection_range must be positive")
        if self.min_azimuth > self.max_azimuth or self.min_elevation > self.max_elevation:
            raise ValueError(f"inverted field of regard in {self}")

    @classmethod
    def symmetric(cls, detection_range: float, az_half: float, el_half: float) -> SurveillanceVolume:
        az, el = abs(az_half), abs(el_half)
        return cls(detection_range, -az, az, -el, el)


@dataclass(frozen=True)
class ConflictRegion:
    center: Position
    horizontal_radius: float
    vertical_half_height: float


@dataclass(frozen=True)
class RegionParams:
    horizontal_radius: float = DEFAULT_HORIZONTAL_RADIUS
    vertical_half_height: float = DEFAULT_VERTICAL_HALF_HEIGHT


@dataclass(frozen=True)
class DetectionOutput:
    traffic_detected: bool
    traffic: tuple[tuple[str, Position], ...]
    current_position: Position
    t: float


@dataclass(frozen=True)
class ProceedWithInput:
    input: SensorInput


@dataclass(frozen=True)
class AlertRaised:
    event: TraceEvent


def validate_sensor_input(inp: SensorInput) -> ValidatedInput:
    """Check the frame's sensor configuration against the onboard limits.

    Bounds are inclusive: range in [0.2, 3000] m, azimuth FOR in
    [-110, 110] deg, elevation FOR in [-15, 15] deg.
    """
    if not MIN_DETECTION_RANGE <= inp.detection_range <= MAX_DETECTION_RANGE:
        raise RangeOutOfBounds("detection_range", inp.detection_range)
    if not -MAX_AZIMUTH_FOR <= inp.azimuth_for <= MAX_AZIMUTH_FOR:
        raise AzimuthOutOfBounds("azimuth_for", inp.azimuth_for)
    if not -MAX_ELEVATION_FOR <= inp.elevation_for <= MAX_ELEVATION_FOR:
        raise ElevationOutOfBounds("elevation_for", inp.elevation_for)
    return ValidatedInput(inp)


def handle_sensor_status(inp: SensorInput) -> ProceedWithInput | AlertRaised:
    if inp.sensor_status:
        return ProceedWithInput(inp)
    return AlertRaised(event(inp.t, EventKind.SensorAlert, reason="SensorStatusFalse",
                             source=inp.source_id.value))


def in_surveillance_volume(vol: SurveillanceVolume, sph: BodySpherical) -> bool:
    return (
        sph.range <= vol.detection_range
        and vol.min_azimuth <= sph.azimuth <= vol.max_azimuth
        and vol.min_elevation <= sph.elevation <= vol.max_elevation
    )


def compute_conflict_region(current: Position, horizontal_radius: float,
                            vertical_half_height: float) -> ConflictRegion:
    if not (horizontal_radius > 0 and vertical_half_height > 0):
        raise NonPositiveDimension(
            f"conflict region needs positive dimensions, got "
            f"radius={horizontal_radius}, half_height={vertical_half_height}"
        )
    return ConflictRegion(current, float(horizontal_radius), float(vertical_half_height))


def position_in_conflict_region(region: ConflictRegion, p: Position) -> bool:
    horiz = math.hypot(p.x - region.center.x, p.y - region.center.y)
    return horiz <= region.horizontal_radius and abs(p.z - region.center.z) <= region.vertical_half_height


def detect(
    validated: ValidatedInput,
    region_params: RegionParams = RegionParams(),
    volume: Optional[SurveillanceVolume] = None,
    trace: Optional[list] = None,
) -> DetectionOutput:
    """Decide which measures in a validated frame are detected traffic.

    A measure counts when its body-frame coordinates fall inside the
    surveillance volume and its world position lies in the conflict region.
    """
    inp = validated.input
    vol = volume if volume is not None else validated.volume
    region = compute_conflict_region(
        inp.position, region_params.horizontal_radius, region_params.vertical_half_height
    )
    found = []
    for m in inp.measures:
        dx, dy, dz = m.relative_offset
        pos = Position(inp.position.x + dx, inp.position.y + dy, inp.position.z + dz)
        try:
            sph = to_body_spherical(inp.position, inp.orientation, pos)
        except CasError:
            continue
        if in_surveillance_volume(vol, sph) and position_in_conflict_region(region, pos):
            found.append((m.measure_id, pos))
    out = DetectionOutput(bool(found), tuple(found), inp.position, inp.t)
    if out.traffic_detected and trace is not None:
        trace.append(event(inp.t, EventKind.TrafficDetected, count=len(found),
                           ids=",".join(mid for mid, _ in found)))
    return out


@dataclass(frozen=True)
class ConfigReport:
    range_ok: bool
    azimuth_ok: bool
    elevation_ok: bool
    rate_ok: bool

    @property
    def passed(self) -> bool:
        return self.range_ok and self.azimuth_ok and self.elevation_ok and self.rate_ok

    @property
    def failures(self) -> list[str]:
        names = ("range", "azimuth", "elevation", "rate")
        flags = (self.range_ok, self.azimuth_ok, self.elevation_ok, self.rate_ok)
        return [n for n, ok in zip(names, flags) if not ok]


def validate_cooperative_config(coop_range: float, az_for: float, el_for: float,
                                update_period: float) -> ConfigReport:
    return ConfigReport(
        range_ok=coop_range >= MIN_COOP_RANGE,
        azimuth_ok=az_for >= MIN_COOP_AZIMUTH_FOR,
        elevation_ok=el_for >= MIN_COOP_ELEVATION_FOR,
        rate_ok=0 < update_period <= MAX_UPDATE_PERIOD,
    )


@dataclass(frozen=True)
class CadenceReport:
    passed: bool
    violations: tuple[tuple[float, float], ...] = ()  # (start time, gap)


def check_cadence(timestamps: Sequence[float], max_gap: float = MAX_UPDATE_PERIOD) -> CadenceReport:
    bad = []
    for a, b in zip(timestamps, timestamps[1:]):
        if not b > a:
            raise NonMonotonicTimestamps(f"timestamp {b} does not follow {a}")
        # small slack absorbs float noise on gaps built from rounded clocks
        if b - a > max_gap + 1e-9:
            bad.append((a, b - a))
    return CadenceReport(not bad, tuple(bad))
