"""Randomized invariants that cut across modules."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from uavcas.assessment import ThreatAssessment, ThreatLevel, cpa, dominates, prioritize
from uavcas.core_types import EventKind, Orientation, Position, event, from_body_spherical, to_body_spherical
from uavcas.core_types import BodySpherical
from uavcas.health import format_record, parse_record, persistence_filter
from uavcas.maneuver import ActiveManeuverState, covers, determine, step_command, threat_zone
from uavcas.monitors import TickSnapshot, check_threat_handling

coord = st.floats(-5000, 5000, allow_nan=False)
speed = st.floats(-200, 200, allow_nan=False)


@given(st.floats(1, 5000), st.floats(-179.9, 180), st.floats(-80, 80), st.floats(0, 359.9), st.floats(-60, 60))
def test_body_frame_round_trip(rng, az, el, heading, pitch):
    own = Position(10, -20, 1000)
    o = Orientation(heading, pitch)
    p = from_body_spherical(own, o, BodySpherical(rng, az, el))
    back = to_body_spherical(own, o, p)
    assert math.isclose(back.range, rng, rel_tol=1e-9)
    # past the zenith the world direction folds over, so angles only round-trip below it
    if abs(el + pitch) < 89:
        assert abs(math.remainder(back.azimuth - az, 360)) < 1e-6
        assert math.isclose(back.elevation, el, abs_tol=1e-6)


@given(st.tuples(coord, coord, coord).filter(lambda p: np.linalg.norm(p) > 1), st.tuples(speed, speed, speed))
def test_cpa_is_a_lower_bound(p, v):
    r = cpa(p, v)
    p, v = np.array(p), np.array(v)
    for t in (0.0, r.t_cpa * 0.5, r.t_cpa + 1.0, 37.0):
        assert r.miss_distance <= np.linalg.norm(p + t * v) + 1e-6
    assert r.t_cpa >= 0


def threats():
    return st.lists(st.builds(lambda tid, ttc, hi: ThreatAssessment(
        tid, ThreatLevel.High if hi else ThreatLevel.Low, ttc, True, 0.0, ttc),
        st.integers(1, 10 ** 6), st.floats(0, 60), st.booleans()),
        max_size=8, unique_by=lambda a: a.track_id)


@given(threats())
def test_selected_maneuver_covers_the_whole_zone(ts):
    cmds, state = step_command(ActiveManeuverState(), determine(prioritize(ts)), ts, 0.0)
    if not ts:
        assert cmds == [] and state.active is None
        return
    zone = threat_zone(ts)
    assert all(covers(state.active, tid) for tid in zone)
    assert check_threat_handling([TickSnapshot(0.0, tuple(ts), state.active)]).status.value != "Violated"


@given(threats())
def test_priority_head_undominated(ts):
    ranked = prioritize(ts)
    if ranked:
        assert not any(dominates(b, ranked[0]) for b in ts)


@given(st.lists(st.booleans(), min_size=1, max_size=12), st.integers(1, 12))
def test_persistence_filter_is_suffix_check(hist, k):
    assert persistence_filter(hist, k) is (len(hist) >= k and all(hist[-k:]))


@given(st.floats(0, 1e5), st.dictionaries(st.from_regex(r"[a-z_]{1,8}", fullmatch=True),
                                          st.one_of(st.integers(-10 ** 9, 10 ** 9),
                                                    st.from_regex(r"[A-Za-z0-9,.\-]{0,12}", fullmatch=True)),
                                          max_size=5))
@settings(max_examples=200)
def test_ground_record_round_trip(t, payload):
    ev = event(round(t, 3), EventKind.CommandIssued, **payload)
    line = format_record(ev)
    assert "\n" not in line
    assert format_record(parse_record(line)) == line
