"""Avoidance maneuver determination and the command state machine.

Only one maneuver is active at a time. It is bound to one threat track
(the one it was initiated for) and additionally covers a zone: every
current threat that no other threat dominates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

from .assessment import ThreatAssessment, dominates, prioritize
from .core_types import CasError, EventKind, event


class IllegalTransition(CasError):
    pass


class ManeuverKind(str, Enum):
    ClimbRight = "ClimbRight"
    DescendRight = "DescendRight"
    ClimbLeft = "ClimbLeft"
    DescendLeft = "DescendLeft"
    LevelRight = "LevelRight"
    LevelLeft = "LevelLeft"

    @property
    def turn(self) -> int:
        """+1 for a right (clockwise) turn, -1 for left."""
        return 1 if self.value.endswith("Right") else -1

    @property
    def vertical(self) -> int:
        if self.value.startswith("Climb"):
            return 1
        if self.value.startswith("Descend"):
            return -1
        return 0


class CommandKind(str, Enum):
    Initiate = "Initiate"
    Continue = "Continue"
    Terminate = "Terminate"


class Transition(str, Enum):
    Idle = "Idle"            # nothing active, no threats
    Initiate = "Initiate"    # nothing active, threats present
    Continue = "Continue"    # bound threat persists, no override
    Terminate = "Terminate"  # threats gone
    Replace = "Replace"      # bound threat gone or superseded: Terminate then Initiate


@dataclass(frozen=True)
class ManeuverParams:
    hysteresis: float = 0.5       # seconds of TTC advantage needed to override
    level_deadband: float = 1.0   # |relative altitude| below this selects a level maneuver


@dataclass(frozen=True)
class Maneuver:
    maneuver_id: int
    kind: ManeuverKind
    threat_track_id: int
    is_active: bool
    priority_ttc: float
    started_at: float
    zone: tuple[int, ...] = ()


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    maneuver: Maneuver
    t: float


@dataclass(frozen=True)
class ManeuverCandidate:
    track_id: int
    kind: ManeuverKind
    time_to_collision: float


@dataclass(frozen=True)
class ManeuverPlan:
    candidates: tuple[ManeuverCandidate, ...] = ()
    selected: Optional[ManeuverCandidate] = None

    def __bool__(self) -> bool:
        return self.selected is not None


@dataclass(frozen=True)
class ActiveManeuverState:
    active: Optional[Maneuver] = None
    next_id: int = 1


def select_kind(bearing: float, relative_altitude: float, deadband: float = 1.0) -> ManeuverKind:
    """Turn away from the side the threat is on; move vertically away from it.

    A threat dead ahead (bearing 0) is passed by turning right.
    """
    right = bearing <= 0.0
    if relative_altitude > deadband:
        return ManeuverKind.DescendRight if right else ManeuverKind.DescendLeft
    if relative_altitude < -deadband:
        return ManeuverKind.ClimbRight if right else ManeuverKind.ClimbLeft
    return ManeuverKind.LevelRight if right else ManeuverKind.LevelLeft


def determine(prioritized: Sequence[ThreatAssessment], t: float = 0.0,
              params: ManeuverParams = ManeuverParams(),
              trace: Optional[list] = None) -> ManeuverPlan:
    """One candidate maneuver per threat; the head of the priority order is selected."""
    cands = tuple(
        ManeuverCandidate(a.track_id, select_kind(a.bearing, a.relative_altitude, params.level_deadband),
                          a.time_to_collision)
        for a in prioritized if a.is_collision_threat
    )
    if not cands:
        return ManeuverPlan()
    plan = ManeuverPlan(cands, cands[0])
    if trace is not None:
        trace.append(event(t, EventKind.ManeuverDetermined, track_id=plan.selected.track_id,
                           kind=plan.selected.kind.value, candidates=len(cands)))
    return plan


def threat_zone(threats: Sequence[ThreatAssessment]) -> tuple[int, ...]:
    return tuple(sorted(
        a.track_id for a in threats
        if not any(dominates(b, a) for b in threats if b.track_id != a.track_id)
    ))


def classify(state: ActiveManeuverState, plan: ManeuverPlan, assessments: Sequence[ThreatAssessment],
             params: ManeuverParams = ManeuverParams()) -> Transition:
    threats = {a.track_id: a for a in assessments if a.is_collision_threat}
    if bool(plan) != bool(threats):
        raise IllegalTransition(
            f"plan {'present' if plan else 'empty'} but {len(threats)} threats assessed"
        )
    if plan and plan.selected.track_id not in threats:
        raise IllegalTransition(f"selected track {plan.selected.track_id} is not a current threat")
    active = state.active
    if active is None:
        return Transition.Initiate if threats else Transition.Idle
    if not threats:
        return Transition.Terminate
    bound = threats.get(active.threat_track_id)
    if bound is None:
        return Transition.Replace
    head = plan.selected
    if head.track_id != bound.track_id and head.time_to_collision < bound.time_to_collision - params.hysteresis:
        return Transition.Replace
    return Transition.Continue


def reassess_update(state: ActiveManeuverState, assessments: Sequence[ThreatAssessment], t: float,
                    params: ManeuverParams = ManeuverParams()) -> ActiveManeuverState:
    """Refresh the active maneuver from the latest assessment of its threat.

    The priority TTC and the zone are refreshed; if the threat has moved to a
    different side or altitude band the maneuver kind is swapped in place.
    """
    active = state.active
    if active is None:
        return state
    threats = [a for a in assessments if a.is_collision_threat]
    bound = next((a for a in threats if a.track_id == active.threat_track_id), None)
    if bound is None:
        return state
    kind = select_kind(bound.bearing, bound.relative_altitude, params.level_deadband)
    updated = replace(active, priority_ttc=bound.time_to_collision, kind=kind, zone=threat_zone(threats))
    return replace(state, active=updated)


def _cmd_event(cmd: Command):
    m = cmd.maneuver
    if cmd.kind is CommandKind.Terminate:
        return event(cmd.t, EventKind.ManeuverTerminated, maneuver_id=m.maneuver_id,
                     track_id=m.threat_track_id, kind=m.kind.value)
    return event(cmd.t, EventKind.CommandIssued, command=cmd.kind.value, maneuver_id=m.maneuver_id,
                 track_id=m.threat_track_id, kind=m.kind.value,
                 ttc=float(m.priority_ttc), zone=",".join(str(z) for z in m.zone))


def step_command(state: ActiveManeuverState, plan: ManeuverPlan, assessments: Sequence[ThreatAssessment],
                 t: float, params: ManeuverParams = ManeuverParams(),
                 trace: Optional[list] = None) -> tuple[list[Command], ActiveManeuverState]:
    """Advance the command state machine by one tick.

    Returns the commands issued this tick (zero, one, or Terminate followed
    by Initiate on an override) and the new state.
    """
    transition = classify(state, plan, assessments, params)
    threats = prioritize(assessments)
    cmds: list[Command] = []

    def initiate(st: ActiveManeuverState) -> ActiveManeuverState:
        sel = plan.selected
        m = Maneuver(st.next_id, sel.kind, sel.track_id, True, sel.time_to_collision, t, threat_zone(threats))
        cmds.append(Command(CommandKind.Initiate, m, t))
        return ActiveManeuverState(m, st.next_id + 1)

    def terminate(st: ActiveManeuverState) -> ActiveManeuverState:
        cmds.append(Command(CommandKind.Terminate, replace(st.active, is_active=False), t))
        return replace(st, active=None)

    if transition is Transition.Initiate:
        state = initiate(state)
    elif transition is Transition.Terminate:
        state = terminate(state)
    elif transition is Transition.Replace:
        state = initiate(terminate(state))
    elif transition is Transition.Continue:
        state = reassess_update(state, assessments, t, params)
        cmds.append(Command(CommandKind.Continue, state.active, t))

    if trace is not None:
        trace.extend(_cmd_event(c) for c in cmds)
    return cmds, state


def covers(maneuver: Optional[Maneuver], track_id: int) -> bool:
    return maneuver is not None and maneuver.is_active and (
        track_id == maneuver.threat_track_id or track_id in maneuver.zone
    )

