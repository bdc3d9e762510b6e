import math

import pytest

from uavcas.core_types import (
    BodySpherical,
    EventKind,
    Orientation,
    Position,
    RequirementId,
    TraceEvent,
    Velocity,
    ZeroRange,
    event,
    from_body_spherical,
    nm_to_meters,
    to_body_spherical,
    wrap_angle,
)


def test_twenty_nautical_miles():
    assert nm_to_meters(20) == 37040.0
    with pytest.raises(ValueError):
        nm_to_meters(-1)


@pytest.mark.parametrize("deg, expected", [(0, 0), (180, 180), (-180, 180), (190, -170), (-190, 170), (720, 0)])
def test_wrap_angle(deg, expected):
    assert wrap_angle(deg) == pytest.approx(expected)


def test_body_spherical_cardinal_directions():
    own = Position(0, 0, 0)
    north = Orientation(0, 0)
    # dead ahead, to the right (east), to the left (west)
    assert to_body_spherical(own, north, Position(0, 100, 0)) == BodySpherical(100, 0, 0)
    assert to_body_spherical(own, north, Position(100, 0, 0)).azimuth == pytest.approx(90)
    assert to_body_spherical(own, north, Position(-100, 0, 0)).azimuth == pytest.approx(-90)
    # heading east: a target to the north is 90 deg left
    assert to_body_spherical(own, Orientation(90, 0), Position(0, 100, 0)).azimuth == pytest.approx(-90)


def test_body_spherical_elevation_is_relative_to_pitch():
    sph = to_body_spherical(Position(), Orientation(0, 10), Position(0, 100, 100))
    assert sph.elevation == pytest.approx(35)
    assert sph.range == pytest.approx(math.sqrt(2) * 100)


def test_body_spherical_round_trip():
    own, orient = Position(10, -20, 300), Orientation(37, -4)
    target = Position(-700, 900, 350)
    back = from_body_spherical(own, orient, to_body_spherical(own, orient, target))
    assert back.as_tuple() == pytest.approx(target.as_tuple())


def test_zero_range_rejected():
    with pytest.raises(ZeroRange):
        to_body_spherical(Position(1, 2, 3), Orientation(), Position(1, 2, 3))


def test_orientation_from_velocity():
    o = Orientation.from_velocity(Velocity(50, 0, 50))
    assert o.heading == pytest.approx(90)
    assert o.pitch == pytest.approx(45)
    assert Orientation.from_velocity(Velocity()) == Orientation(0, 0)
    with pytest.raises(ValueError):
        Orientation(0, 95)


def test_event_payload_normalization():
    ev = event(12.5, EventKind.ThreatIdentified, ttc=10.0, track_id=7, closing=True, kind="x")
    assert ev.payload == {"closing": "1", "kind": "x", "track_id": "7", "ttc": "10.000"}
    assert list(ev.payload) == sorted(ev.payload)
    assert ev.get_int("track_id") == 7 and ev.get_float("ttc") == 10.0


def test_event_rejects_reserved_characters():
    with pytest.raises(ValueError):
        event(0, EventKind.SensorAlert, reason="a|b")
    with pytest.raises(ValueError):
        TraceEvent(0, EventKind.SensorAlert, {"a=b": 1})


def test_requirement_id():
    assert RequirementId("LLR_08a-01").level == "LLR"
    assert RequirementId("DHLR_008b").level == "DHLR"
    with pytest.raises(ValueError):
        RequirementId("REQ-1")
