"""Shared vocabulary: positions, velocities, body-frame angles and trace events.

World frame is flat East-North-Up in meters. Angles are stored in degrees;
radians only appear inside the trigonometry.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Union

METERS_PER_NM = 1852.0
MAX_SPEED_MPS = 350.0

PayloadValue = Union[str, int, float, bool]


class CasError(Exception):
    """Base class for errors raised by the collision avoidance pipeline."""


class ZeroRange(CasError):
    pass


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: Vec3) -> Vec3:
        return type(self)(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vec3) -> Vec3:
        return type(self)(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> Vec3:
        return type(self)(self.x * k, self.y * k, self.z * k)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def horizontal_norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in (self.x, self.y, self.z))


class Position(Vec3):
    """World-frame position in meters (x east, y north, z up)."""


class Velocity(Vec3):
    """World-frame velocity in m/s."""

    @property
    def vx(self) -> float:
        return self.x

    @property
    def vy(self) -> float:
        return self.y

    @property
    def vz(self) -> float:
        return self.z

    def speed(self) -> float:
        return self.norm()

    def within_bound(self, bound: float = MAX_SPEED_MPS) -> bool:
        return self.is_finite() and self.norm() < bound


@dataclass(frozen=True)
class Orientation:
    heading: float = 0.0  # degrees clockwise from north, [0, 360)
    pitch: float = 0.0    # degrees, [-90, 90]

    def __post_init__(self):
        if not (math.isfinite(self.heading) and math.isfinite(self.pitch)):
            raise ValueError(f"non-finite orientation {self}")
        if not -90.0 <= self.pitch <= 90.0:
            raise ValueError(f"pitch {self.pitch} outside [-90, 90]")
        object.__setattr__(self, "heading", self.heading % 360.0)

    @classmethod
    def from_velocity(cls, vel: Vec3) -> Orientation:
        """Flight-path orientation; a hovering vehicle is taken to face north."""
        horiz = math.hypot(vel.x, vel.y)
        heading = math.degrees(math.atan2(vel.x, vel.y)) if horiz > 0 else 0.0
        pitch = math.degrees(math.atan2(vel.z, horiz)) if (horiz > 0 or vel.z != 0) else 0.0
        return cls(heading, pitch)


@dataclass(frozen=True)
class BodySpherical:
    range: float
    azimuth: float    # degrees from the flight path, positive clockwise, (-180, 180]
    elevation: float  # degrees, positive up


def wrap_angle(deg: float) -> float:
    """Normalize an angle in degrees to (-180, 180]."""
    a = math.fmod(deg, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def to_body_spherical(own_pos: Vec3, own_orient: Orientation, target: Vec3) -> BodySpherical:
    dx, dy, dz = target.x - own_pos.x, target.y - own_pos.y, target.z - own_pos.z
    rng = math.sqrt(dx * dx + dy * dy + dz * dz)
    if rng == 0.0:
        raise ZeroRange(f"target coincides with own position {own_pos}")
    bearing = math.degrees(math.atan2(dx, dy))
    elevation = math.degrees(math.atan2(dz, math.hypot(dx, dy))) - own_orient.pitch
    return BodySpherical(rng, wrap_angle(bearing - own_orient.heading), elevation)


def from_body_spherical(own_pos: Vec3, own_orient: Orientation, sph: BodySpherical) -> Position:
    """Inverse of :func:`to_body_spherical`."""
    az = math.radians(sph.azimuth + own_orient.heading)
    el = math.radians(sph.elevation + own_orient.pitch)
    horiz = sph.range * math.cos(el)
    return Position(
        own_pos.x + horiz * math.sin(az),
        own_pos.y + horiz * math.cos(az),
        own_pos.z + sph.range * math.sin(el),
    )


def nm_to_meters(d: float) -> float:
    if d < 0:
        raise ValueError(f"negative distance {d}")
    return d * METERS_PER_NM


class EventKind(str, Enum):
    SensorInputReceived = "SensorInputReceived"
    SensorAlert = "SensorAlert"
    TrafficDetected = "TrafficDetected"
    CollisionEvaluated = "CollisionEvaluated"
    ThreatIdentified = "ThreatIdentified"
    ManeuverDetermined = "ManeuverDetermined"
    CommandIssued = "CommandIssued"
    ManeuverTerminated = "ManeuverTerminated"
    SelfTestResult = "SelfTestResult"
    FailoverActivated = "FailoverActivated"
    GroundLinkSent = "GroundLinkSent"


# Within one tick, events appear in this rank order (health events ride with
# the sensor frame; commands and terminations share a rank so an override
# keeps its Terminate-then-Initiate order).
EVENT_RANK = {
    EventKind.SensorInputReceived: 0,
    EventKind.SelfTestResult: 1,
    EventKind.FailoverActivated: 1,
    EventKind.SensorAlert: 2,
    EventKind.TrafficDetected: 3,
    EventKind.CollisionEvaluated: 4,
    EventKind.ThreatIdentified: 5,
    EventKind.ManeuverDetermined: 6,
    EventKind.CommandIssued: 7,
    EventKind.ManeuverTerminated: 7,
    EventKind.GroundLinkSent: 8,
}

_FORBIDDEN = re.compile(r"[|;=\n\r]")


def format_value(v: PayloadValue) -> str:
    """Integers bare, reals with three decimals, strings verbatim."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.3f}"
    s = str(v)
    if _FORBIDDEN.search(s):
        raise ValueError(f"payload value {s!r} contains a reserved character")
    return s


@dataclass(frozen=True)
class TraceEvent:
    """One timestamped pipeline event.

    ``t`` is kept at millisecond resolution and payload values are stored in
    their serialized string form, so an event survives a write/parse cycle
    unchanged.
    """

    t: float
    kind: EventKind
    payload: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"non-finite event time {self.t}")
        object.__setattr__(self, "t", round(float(self.t), 3) + 0.0)
        object.__setattr__(self, "kind", EventKind(self.kind))
        norm = {}
        for k, v in self.payload.items():
            if not k or _FORBIDDEN.search(k):
                raise ValueError(f"bad payload key {k!r}")
            norm[k] = format_value(v)
        object.__setattr__(self, "payload", dict(sorted(norm.items())))

    def __hash__(self):
        return hash((self.t, self.kind, tuple(self.payload.items())))

    def get_int(self, key: str, default: int | None = None) -> int | None:
        v = self.payload.get(key)
        return default if v is None else int(v)

    def get_float(self, key: str, default: float | None = None) -> float | None:
        v = self.payload.get(key)
        return default if v is None else float(v)


def event(t: float, kind: EventKind, /, **payload: PayloadValue) -> TraceEvent:
    return TraceEvent(t, kind, payload)


REQUIREMENT_ID = re.compile(r"^(SRATS|HLR|DHLR|LLR)_[0-9a-zA-Z-]+$")


@dataclass(frozen=True, order=True)
class RequirementId:
    tag: str

    def __post_init__(self):
        if not REQUIREMENT_ID.match(self.tag):
            raise ValueError(f"malformed requirement id {self.tag!r}")

    @property
    def level(self) -> str:
        return self.tag.split("_", 1)[0]

    def __str__(self) -> str:
        return self.tag
