"""Collision evaluation (closest point of approach) and threat prioritization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional, Sequence

import numpy as np

from .core_types import CasError, EventKind, Orientation, Position, Velocity, event, wrap_angle
from .tracking import Track


class ZeroRelativePosition(CasError):
    pass


class ThreatLevel(IntEnum):
    None_ = 0
    Low = 1
    High = 2

    @property
    def label(self) -> str:
        return "None" if self is ThreatLevel.None_ else self.name

    @classmethod
    def parse(cls, label: str) -> ThreatLevel:
        return cls.None_ if label == "None" else cls[label]


@dataclass(frozen=True)
class AssessmentParams:
    protected_radius: float = 150.0
    horizon: float = 60.0
    t_high: float = 15.0
    eps_v: float = 1e-6


@dataclass(frozen=True)
class CpaResult:
    t_cpa: float
    miss_distance: float
    closing: bool


@dataclass(frozen=True)
class ThreatAssessment:
    track_id: int
    threat_level: ThreatLevel
    time_to_collision: float
    is_collision_threat: bool
    miss_distance: float = math.inf
    t_cpa: float = 0.0
    bearing: float = 0.0            # degrees from own flight path, signed
    relative_altitude: float = 0.0  # intruder z minus own z, meters


def cpa(rel_pos, rel_vel, eps_v: float = 1e-6) -> CpaResult:
    """Closest point of approach under straight-line relative motion.

    ``rel_pos``/``rel_vel`` are intruder-minus-own vectors. A receding
    geometry (raw CPA time in the past) is clamped to ``t_cpa = 0`` and
    reported as not closing.
    """
    p = np.asarray(rel_pos, dtype=float)
    v = np.asarray(rel_vel, dtype=float)
    if not np.any(p):
        raise ZeroRelativePosition("relative position is zero")
    vv = float(v @ v)
    if math.sqrt(vv) < eps_v:
        return CpaResult(0.0, float(np.linalg.norm(p)), False)
    t_star = -float(p @ v) / vv
    t_cpa = max(t_star, 0.0)
    miss = float(np.linalg.norm(p + t_cpa * v))
    return CpaResult(t_cpa, miss, t_star > 0)


def evaluate(own_pos: Position, own_vel: Velocity, track: Track,
             params: AssessmentParams = AssessmentParams(),
             t: Optional[float] = None, trace: Optional[list] = None) -> ThreatAssessment:
    if not track.confirmed:
        raise ValueError(f"track {track.track_id} is not confirmed")
    rel_p = track.position - own_pos
    rel_v = track.velocity - own_vel
    res = cpa(rel_p.as_tuple(), rel_v.as_tuple(), params.eps_v)
    threat = res.closing and res.miss_distance <= params.protected_radius and res.t_cpa <= params.horizon
    if threat:
        level = ThreatLevel.High if res.t_cpa <= params.t_high else ThreatLevel.Low
        ttc = res.t_cpa
    else:
        level, ttc = ThreatLevel.None_, math.inf
    heading = Orientation.from_velocity(own_vel).heading
    bearing = wrap_angle(math.degrees(math.atan2(rel_p.x, rel_p.y)) - heading)
    out = ThreatAssessment(track.track_id, level, ttc, threat, res.miss_distance, res.t_cpa,
                           bearing, rel_p.z)
    if trace is not None:
        when = track.state_time if t is None else t
        trace.append(event(when, EventKind.CollisionEvaluated, track_id=track.track_id,
                           first_seen=float(track.first_update), miss=res.miss_distance,
                           tcpa=res.t_cpa, closing=res.closing))
        if threat:
            trace.append(event(when, EventKind.ThreatIdentified, track_id=track.track_id,
                               ttc=ttc, level=level.label))
    return out


def evaluate_all(own_pos: Position, own_vel: Velocity, tracks: Iterable[Track],
                 params: AssessmentParams = AssessmentParams(),
                 t: Optional[float] = None, trace: Optional[list] = None) -> list[ThreatAssessment]:
    """Evaluate every confirmed track in track_id order.

    Events are grouped so that all CollisionEvaluated records precede the
    ThreatIdentified ones.
    """
    local: list = []
    results = [evaluate(own_pos, own_vel, tr, params, t, local)
               for tr in sorted(tracks, key=lambda tr: tr.track_id) if tr.confirmed]
    if trace is not None:
        trace.extend(e for e in local if e.kind is EventKind.CollisionEvaluated)
        trace.extend(e for e in local if e.kind is EventKind.ThreatIdentified)
    return results


def priority_key(a: ThreatAssessment):
    return (a.time_to_collision, -int(a.threat_level), a.track_id)


def prioritize(assessments: Sequence[ThreatAssessment]) -> list[ThreatAssessment]:
    """Collision threats ordered by ascending time to collision.

    Ties go to the higher threat level, then the lower track id.
    """
    return sorted((a for a in assessments if a.is_collision_threat), key=priority_key)


def dominates(other: ThreatAssessment, a: ThreatAssessment) -> bool:
    """True when ``other`` has strictly higher level and strictly smaller TTC."""
    return other.threat_level > a.threat_level and other.time_to_collision < a.time_to_collision
