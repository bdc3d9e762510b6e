"""Track file management with an alpha-beta filter.

Tracks are immutable; every operation returns a new :class:`TrackSet`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .core_types import Position, Velocity
from .detection import DetectionOutput
from .health import persistence_filter


class Confidence(str, Enum):
    Tentative = "Tentative"
    Confirmed = "Confirmed"


@dataclass(frozen=True)
class TrackingConfig:
    confirm_m: int = 3
    drop_after: float = 5.0
    gate_radius: float = 200.0
    alpha: float = 0.5
    beta: float = 0.1
    update_rate_min: float = 1.0
    pos_accuracy_y: float = 50.0
    vel_accuracy_z: float = 10.0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.alpha <= 1:
            out.append(f"alpha={self.alpha} outside (0, 1]")
        if not 0 <= self.beta <= 2:
            out.append(f"beta={self.beta} outside [0, 2]")
        if self.confirm_m < 1:
            out.append(f"confirm_m={self.confirm_m} < 1")
        if not self.drop_after > 0:
            out.append(f"drop_after={self.drop_after} not positive")
        if not self.gate_radius > 0:
            out.append(f"gate_radius={self.gate_radius} not positive")
        return out


@dataclass(frozen=True)
class Track:
    track_id: int
    position: Position
    velocity: Velocity
    confidence: Confidence
    hits: int
    last_update: float
    history_len: int
    state_time: float = 0.0    # time the position estimate refers to
    first_update: float = 0.0
    history: tuple[bool, ...] = ()  # most recent last, bounded

    @property
    def confirmed(self) -> bool:
        return self.confidence is Confidence.Confirmed

    def predicted(self, t: float) -> Position:
        return self.position + self.velocity.scaled(t - self.state_time)


@dataclass(frozen=True)
class TrackSet:
    tracks: tuple[Track, ...] = ()
    next_id: int = 1

    def __iter__(self):
        return iter(self.tracks)

    def __len__(self):
        return len(self.tracks)

    def get(self, track_id: int) -> Optional[Track]:
        for tr in self.tracks:
            if tr.track_id == track_id:
                return tr
        return None

    def confirmed(self) -> list[Track]:
        return [t for t in self.tracks if t.confirmed]


HISTORY_KEEP = 16


def _push(history: tuple[bool, ...], hit: bool, cfg: TrackingConfig) -> tuple[bool, ...]:
    return (history + (hit,))[-max(HISTORY_KEEP, cfg.confirm_m):]


def _confidence(history: tuple[bool, ...], cfg: TrackingConfig) -> Confidence:
    return Confidence.Confirmed if persistence_filter(history, cfg.confirm_m) else Confidence.Tentative


def _update(track: Track, z: Position, t: float, cfg: TrackingConfig) -> Track:
    dt = t - track.state_time
    if track.history_len == 1 and dt > 0:
        # second hit: initialize velocity by two-point differencing
        pos = z
        vel = Velocity(*(z - track.position).scaled(1.0 / dt).as_tuple())
    elif dt > 0:
        pred = track.predicted(t)
        r = z - pred
        pos = Position(*(pred + r.scaled(cfg.alpha)).as_tuple())
        vel = Velocity(*(track.velocity + r.scaled(cfg.beta / dt)).as_tuple())
    else:
        pos, vel = z, track.velocity
    history = _push(track.history, True, cfg)
    return replace(
        track,
        position=pos,
        velocity=vel,
        hits=track.hits + 1,
        last_update=t,
        state_time=t,
        history_len=track.history_len + 1,
        history=history,
        confidence=_confidence(history, cfg),
    )


def associate_and_update(tracks: TrackSet, detections: DetectionOutput, t: float,
                         cfg: TrackingConfig = TrackingConfig()) -> TrackSet:
    """Associate detections to tracks and run the filter update.

    Association is greedy global nearest neighbour inside ``gate_radius``:
    candidate pairs are taken in order of (distance, track_id, detection
    index), each track and detection used at most once. Unassociated
    detections start new Tentative tracks.
    """
    meas = [p for _, p in detections.traffic]
    pairs = []
    for i, tr in enumerate(tracks.tracks):
        pred = tr.predicted(t)
        for j, z in enumerate(meas):
            d = (z - pred).norm()
            if d <= cfg.gate_radius:
                pairs.append((d, tr.track_id, j, i))
    pairs.sort()
    used_tracks: dict[int, int] = {}
    used_meas: set[int] = set()
    for _, _, j, i in pairs:
        if i in used_tracks or j in used_meas:
            continue
        used_tracks[i] = j
        used_meas.add(j)

    out = []
    for i, tr in enumerate(tracks.tracks):
        out.append(_update(tr, meas[used_tracks[i]], t, cfg) if i in used_tracks else tr)
    next_id = tracks.next_id
    for j, z in enumerate(meas):
        if j in used_meas:
            continue
        history = (True,)
        out.append(Track(
            track_id=next_id,
            position=z,
            velocity=Velocity(),
            confidence=_confidence(history, cfg),
            hits=1,
            last_update=t,
            history_len=1,
            state_time=t,
            first_update=t,
            history=history,
        ))
        next_id += 1
    return TrackSet(tuple(out), next_id)


def coast_and_drop(tracks: TrackSet, t: float, cfg: TrackingConfig = TrackingConfig()) -> TrackSet:
    """Dead-reckon tracks not updated at ``t`` and delete stale ones.

    A coasted track loses its consecutive-hit count (and with it any
    Confirmed status). Tracks idle for more than ``drop_after`` seconds are
    removed; exactly ``drop_after`` is still retained.
    """
    out = []
    for tr in tracks.tracks:
        if t - tr.last_update > cfg.drop_after:
            continue
        if tr.last_update < t:
            history = _push(tr.history, False, cfg)
            tr = replace(
                tr,
                position=tr.predicted(t),
                state_time=t,
                hits=0,
                history=history,
                confidence=_confidence(history, cfg),
            )
        out.append(tr)
    return TrackSet(tuple(out), tracks.next_id)


@dataclass(frozen=True)
class AccuracyReport:
    position_error: float
    velocity_error: float
    position_ok: bool
    velocity_ok: bool

    @property
    def passed(self) -> bool:
        return self.position_ok and self.velocity_ok


def check_accuracy(track: Track, truth_pos: Position, truth_vel: Velocity,
                   cfg: TrackingConfig = TrackingConfig()) -> AccuracyReport:
    pe = (track.position - truth_pos).norm()
    ve = (track.velocity - truth_vel).norm()
    return AccuracyReport(pe, ve, pe <= cfg.pos_accuracy_y, ve <= cfg.vel_accuracy_z)


def serialize(tracks: TrackSet) -> str:
    """Stable text form used for determinism checks."""
    lines = [f"next_id={tracks.next_id}"]
    for tr in tracks.tracks:
        lines.append(
            f"{tr.track_id}|{tr.position.as_tuple()!r}|{tr.velocity.as_tuple()!r}|"
            f"{tr.confidence.value}|{tr.hits}|{tr.last_update!r}|{tr.history_len}"
        )
    return "\n".join(lines)


def update_cycle(tracks: TrackSet, detections: Optional[DetectionOutput], t: float,
                 cfg: TrackingConfig = TrackingConfig()) -> TrackSet:
    """One tick of tracking: associate whatever was detected, then coast/drop."""
    if detections is not None:
        tracks = associate_and_update(tracks, detections, t, cfg)
    return coast_and_drop(tracks, t, cfg)
