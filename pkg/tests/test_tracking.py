import pytest

from uavcas.core_types import Position, Velocity
from uavcas.detection import DetectionOutput
from uavcas.tracking import (
    Confidence,
    TrackingConfig,
    TrackSet,
    associate_and_update,
    check_accuracy,
    coast_and_drop,
    serialize,
    update_cycle,
)

CFG = TrackingConfig()


def det(t, *points):
    traffic = tuple((f"m{i}", Position(*p)) for i, p in enumerate(points))
    return DetectionOutput(bool(traffic), traffic, Position(), t)


@pytest.mark.req("LLR_014")
def test_first_detection_opens_tentative_track():
    ts = associate_and_update(TrackSet(), det(0, (100, 0, 0)), 0.0)
    (tr,) = ts.tracks
    assert tr.track_id == 1 and tr.confidence is Confidence.Tentative
    assert tr.position == Position(100, 0, 0) and tr.velocity == Velocity(0, 0, 0)
    assert tr.hits == 1 and tr.history_len == 1


@pytest.mark.req("LLR_014", "LLR_015")
def test_second_hit_initializes_velocity_by_differencing():
    ts = associate_and_update(TrackSet(), det(0, (100, 0, 0)), 0.0)
    ts = associate_and_update(ts, det(1, (110, 0, 0)), 1.0)
    (tr,) = ts.tracks
    assert tr.velocity.as_tuple() == pytest.approx((10, 0, 0))
    assert tr.position == Position(110, 0, 0)


@pytest.mark.req("LLR_015")
def test_alpha_beta_update_on_residual():
    ts = TrackSet()
    for k, x in enumerate([0.0, 10.0]):
        ts = associate_and_update(ts, det(k, (x, 0, 0)), float(k))
    # predicted 20, measured 26: residual 6
    ts = associate_and_update(ts, det(2, (26, 0, 0)), 2.0)
    (tr,) = ts.tracks
    assert tr.position.x == pytest.approx(20 + 0.5 * 6)
    assert tr.velocity.x == pytest.approx(10 + 0.1 * 6 / 1.0)


@pytest.mark.req("LLR_015", "LLR_032")
def test_confirmation_after_m_consecutive_hits():
    ts = TrackSet()
    states = []
    for k in range(4):
        ts = update_cycle(ts, det(k, (10 * k, 0, 0)), float(k), CFG)
        states.append(ts.tracks[0].confidence)
    assert states == [Confidence.Tentative, Confidence.Tentative, Confidence.Confirmed, Confidence.Confirmed]


@pytest.mark.req("LLR_016", "LLR_032")
def test_miss_demotes_and_resets_hits():
    ts = TrackSet()
    for k in range(3):
        ts = update_cycle(ts, det(k, (10 * k, 0, 0)), float(k))
    assert ts.tracks[0].confirmed
    ts = update_cycle(ts, None, 3.0)
    tr = ts.tracks[0]
    assert tr.hits == 0 and tr.confidence is Confidence.Tentative
    assert tr.position.x == pytest.approx(30)
    # it takes confirm_m fresh hits to confirm again
    for k in (4, 5):
        ts = update_cycle(ts, det(k, (10 * k, 0, 0)), float(k))
        assert not ts.tracks[0].confirmed
    ts = update_cycle(ts, det(6, (60, 0, 0)), 6.0)
    assert ts.tracks[0].confirmed


@pytest.mark.req("LLR_016")
def test_coasting_dead_reckons():
    ts = associate_and_update(TrackSet(), det(0, (0, 0, 0)), 0.0)
    ts = associate_and_update(ts, det(1, (10, 0, 0)), 1.0)
    ts = coast_and_drop(ts, 2.0)
    assert ts.tracks[0].position == Position(20, 0, 0)


@pytest.mark.req("LLR_016")
@pytest.mark.parametrize("t, kept", [(5.0, True), (5.1, False)])
def test_drop_after_is_inclusive(t, kept):
    ts = associate_and_update(TrackSet(), det(0, (0, 0, 0)), 0.0)
    assert (len(coast_and_drop(ts, t, TrackingConfig(drop_after=5))) == 1) is kept


@pytest.mark.req("LLR_014")
def test_gate_and_nearest_neighbour():
    ts = associate_and_update(TrackSet(), det(0, (0, 0, 0), (1000, 0, 0)), 0.0)
    # one measure 150 m from track 1, one 250 m from track 2 (outside gate)
    ts = associate_and_update(ts, det(1, (150, 0, 0), (1250, 0, 0)), 1.0)
    ids = sorted(tr.track_id for tr in ts)
    assert ids == [1, 2, 3]
    assert ts.get(1).history_len == 2 and ts.get(2).history_len == 1
    assert ts.get(3).position == Position(1250, 0, 0)


def test_association_tie_goes_to_lower_track_id():
    ts = associate_and_update(TrackSet(), det(0, (-50, 0, 0), (50, 0, 0)), 0.0)
    ts = associate_and_update(ts, det(1, (0, 0, 0)), 1.0)
    assert ts.get(1).history_len == 2 and ts.get(2).history_len == 1


def test_track_ids_never_recycle():
    ts = associate_and_update(TrackSet(), det(0, (0, 0, 0)), 0.0)
    ts = coast_and_drop(ts, 10.0)
    assert len(ts) == 0
    ts = associate_and_update(ts, det(11, (0, 0, 0)), 11.0)
    assert ts.tracks[0].track_id == 2


@pytest.mark.req("LLR_017")
def test_accuracy_report():
    ts = associate_and_update(TrackSet(), det(0, (0, 0, 0)), 0.0)
    tr = ts.tracks[0]
    assert check_accuracy(tr, Position(), Velocity()).passed
    assert check_accuracy(tr, Position(50, 0, 0), Velocity()).passed
    rep = check_accuracy(tr, Position(), Velocity(10.1, 0, 0))
    assert rep.position_ok and not rep.velocity_ok and not rep.passed


@pytest.mark.req("LLR_017")
def test_noiseless_track_meets_accuracy_budget():
    ts = TrackSet()
    v = Velocity(-40, 25, 1.5)
    for k in range(10):
        t = 0.1 * k
        ts = update_cycle(ts, det(t, (2000 + v.x * t, 500 + v.y * t, 1000 + v.z * t)), t)
    tr = ts.tracks[0]
    truth = Position(2000 + v.x * 0.9, 500 + v.y * 0.9, 1000 + v.z * 0.9)
    rep = check_accuracy(tr, truth, v)
    assert rep.passed and rep.position_error < 1e-9 and rep.velocity_error < 1e-6


def test_config_invariants():
    for bad in ({"alpha": 0}, {"alpha": 1.5}, {"beta": -0.1}, {"beta": 2.5}, {"confirm_m": 0},
                {"drop_after": 0}, {"gate_radius": 0}):
        with pytest.raises(ValueError):
            TrackingConfig(**bad)


def test_serialization_is_deterministic():
    def stream():
        ts = TrackSet()
        for k in range(6):
            ts = update_cycle(ts, det(k, (3.3 * k, 1.1, 7), (500, 7.7 * k, 0)), float(k))
        return serialize(ts)
    assert stream() == stream()
