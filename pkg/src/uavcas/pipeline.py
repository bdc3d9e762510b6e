"""One tick of the collision avoidance pipeline.

Stage order is fixed: health, detection, tracking, assessment, maneuver,
ground link. :class:`CasPipeline` owns all mutable state (track file,
maneuver state, health registry) and is driven by the simulator one tick
at a time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import assessment, detection, health, maneuver, tracking
from .core_types import EVENT_RANK, EventKind, Position, TraceEvent, Velocity, event
from .detection import RegionParams, SensorInput, SensorInputError
from .health import Component, HealthRegistry, Source, Status
from .monitors import TickSnapshot

log = logging.getLogger(__name__)

STAGES = ("detection", "tracking", "assessment", "maneuver")

GROUND_KINDS = frozenset({
    EventKind.SensorAlert,
    EventKind.ThreatIdentified,
    EventKind.CommandIssued,
    EventKind.ManeuverTerminated,
    EventKind.SelfTestResult,
    EventKind.FailoverActivated,
})


@dataclass(frozen=True)
class PipelineConfig:
    tracking: tracking.TrackingConfig = field(default_factory=tracking.TrackingConfig)
    assessment: assessment.AssessmentParams = field(default_factory=assessment.AssessmentParams)
    maneuver: maneuver.ManeuverParams = field(default_factory=maneuver.ManeuverParams)
    self_test_period: float = 10.0
    max_speed: float = 350.0


@dataclass
class TickResult:
    t: float
    events: list[TraceEvent]
    gclog: list[str]
    commands: list[maneuver.Command]
    snapshot: TickSnapshot
    detection: Optional[detection.DetectionOutput] = None


def order_events(events: list[TraceEvent]) -> list[TraceEvent]:
    return sorted(events, key=lambda ev: EVENT_RANK[ev.kind])


class CasPipeline:
    def __init__(self, config: PipelineConfig = PipelineConfig(),
                 region: RegionParams = RegionParams(),
                 registry: Optional[HealthRegistry] = None):
        self.config = config
        self.region = region
        self.registry = registry or HealthRegistry(tracking_cfg=config.tracking)
        self.tracks = tracking.TrackSet()
        self.state = maneuver.ActiveManeuverState()
        self.track_origins: dict[int, str] = {}
        self.prev_frame_t: Optional[float] = None
        self.prev_t: Optional[float] = None
        self.started = False

    def start(self, t: float = 0.0) -> tuple[list[TraceEvent], health.SelfTestReport]:
        events: list[TraceEvent] = []
        report = health.startup_self_test(self.registry, t, events)
        self.started = True
        return events, report

    def _select(self, frames: Mapping[Source, SensorInput], t: float, events: list) -> Optional[SensorInput]:
        if not frames:
            return None
        primary = frames.get(Source.Primary)
        secondary = frames.get(Source.Secondary)
        before = self.registry.selection
        sel = health.select_source(bool(primary and primary.sensor_status),
                                   bool(secondary and secondary.sensor_status), before)
        self.registry.selection = sel
        if sel.active is not before.active:
            events.append(event(t, EventKind.FailoverActivated, to=sel.active.value,
                                count=sel.failover_count))
        for src, comp in ((Source.Primary, Component.PrimarySensor),
                          (Source.Secondary, Component.SecondarySensor)):
            fr = frames.get(src)
            self.registry.set_status(comp, Status.Ok if fr and fr.sensor_status else Status.Failed, t)
        return frames.get(sel.active) or primary or secondary

    def step(self, t: float, frames: Mapping[Source, SensorInput], own_pos: Position,
             own_vel: Velocity, disabled: frozenset = frozenset(),
             ground_sink=None) -> TickResult:
        """Run every stage for one tick.

        ``frames`` holds the frame each sensor delivered this tick (empty when
        nothing arrived). ``disabled`` names stages switched off by fault
        injection.
        """
        if not self.started:
            raise RuntimeError("start() must run the startup self-test first")
        cfg = self.config
        events: list[TraceEvent] = []
        frame = self._select(frames, t, events)
        if frame is not None:
            events.append(event(t, EventKind.SensorInputReceived, source=frame.source_id.value,
                                measures=len(frame.measures)))
            self.registry.frame_times.append(t)

        health.periodic_self_test(self.registry, t, cfg.self_test_period, self.prev_t, events)

        det = None
        if frame is not None:
            det = self._detect(frame, t, events, "detection" in disabled)
            self.prev_frame_t = frame.t

        if "tracking" in disabled:
            tracks_now: list[tracking.Track] = []
        else:
            before = self.tracks.next_id
            self.tracks = tracking.update_cycle(self.tracks, det, t, cfg.tracking)
            if det is not None and self.tracks.next_id > before:
                self._record_origins(det, before)
            tracks_now = list(self.tracks)

        assessed: list[assessment.ThreatAssessment] = []
        if "assessment" not in disabled:
            assessed = assessment.evaluate_all(own_pos, own_vel, tracks_now, cfg.assessment, t, events)
        threats = assessment.prioritize(assessed)

        cmds: list[maneuver.Command] = []
        if "maneuver" not in disabled:
            plan = maneuver.determine(threats, t, cfg.maneuver, events)
            cmds, self.state = maneuver.step_command(self.state, plan, assessed, t, cfg.maneuver, events)
            active = self.state.active
        else:
            active = None

        events = order_events(events)
        gclog = self._ground(events, t, ground_sink)
        if gclog:
            events.append(event(t, EventKind.GroundLinkSent, records=len(gclog)))
        self.prev_t = t
        return TickResult(t, events, gclog, cmds, TickSnapshot(t, tuple(threats), active), det)

    def _detect(self, frame: SensorInput, t: float, events: list, disabled: bool):
        verdict = health.integrity_check(frame, self.prev_frame_t, self.config.max_speed)
        if not verdict.passed:
            events.append(event(t, EventKind.SensorAlert, reason="Integrity",
                                detail=",".join(v.replace(":", "/") for v in verdict.violations)))
            return None
        status = detection.handle_sensor_status(frame)
        if isinstance(status, detection.AlertRaised):
            events.append(status.event)
            return None
        try:
            validated = detection.validate_sensor_input(frame)
        except SensorInputError as exc:
            events.append(event(t, EventKind.SensorAlert, reason=type(exc).__name__,
                                field=exc.field_name, value=float(exc.value)))
            return None
        if disabled:
            return None
        return detection.detect(validated, self.region, trace=events)

    def _record_origins(self, det: detection.DetectionOutput, first_new: int):
        for tr in self.tracks:
            if tr.track_id >= first_new and tr.track_id not in self.track_origins:
                for mid, pos in det.traffic:
                    if pos == tr.position:
                        self.track_origins[tr.track_id] = mid
                        break

    def _ground(self, events: list[TraceEvent], t: float, sink) -> list[str]:
        lines: list[str] = []
        buf: list[str] = [] if sink is None else sink
        for ev in events:
            if ev.kind not in GROUND_KINDS:
                continue
            try:
                health.emit_ground_event(ev, buf)
            except health.SinkUnavailable as exc:
                log.debug("ground link down at t=%.3f: %s", t, exc)
                self.registry.set_status(Component.GroundLink, Status.Degraded, t)
                return []
            lines.append(health.format_record(ev))
        if lines:
            self.registry.set_status(Component.GroundLink, Status.Ok, t)
        return lines
