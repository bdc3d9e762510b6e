import io
import itertools
import math

import pytest

from uavcas.assessment import CpaResult
from uavcas.core_types import EventKind, Orientation, Position, TraceEvent, Velocity, event
from uavcas.detection import SensorInput, SensorMeasure
from uavcas.health import (
    Component,
    HealthRegistry,
    SinkUnavailable,
    Source,
    SourceSelection,
    Status,
    UnavailableSink,
    emit_ground_event,
    format_record,
    integrity_check,
    parse_record,
    period_crossed,
    periodic_self_test,
    persistence_filter,
    select_source,
    startup_self_test,
)
from uavcas.tracking import TrackingConfig


def frame(measures=(("A", (0, 100, 0)),), t=1.0, pos=Position(0, 0, 1000), vel=Velocity(0, 50, 0)):
    return SensorInput(True, 3000, 110, 15, Orientation(), pos,
                       tuple(SensorMeasure(off, mid) for mid, off in measures), t, velocity=vel)


@pytest.mark.req("LLR_027")
def test_clean_frame_passes_integrity():
    assert integrity_check(frame(), previous_t=0.9).passed


@pytest.mark.req("LLR_027")
@pytest.mark.parametrize("inp, prev, expected", [
    (frame(pos=Position(0, 0, math.nan)), None, ["NonFiniteField:position.z"]),
    (frame(measures=(("A", (0, 1, 0)), ("A", (0, 2, 0)))), None, ["DuplicateMeasure:A"]),
    (frame(t=1.0), 1.0, ["OutOfOrderTimestamp:1.0"]),
    (frame(vel=Velocity(350, 0, 0)), None, ["SpeedAboveBound:350.000"]),
    (frame(measures=(("Z", (0, 0, 0)),)), None, ["ZeroOffset:Z"]),
    (frame(measures=(("N", (math.inf, 0, 0)),)), None, ["NonFiniteField:measure.N"]),
])
def test_integrity_violations(inp, prev, expected):
    v = integrity_check(inp, prev)
    assert not v.passed and list(v.violations) == expected


@pytest.mark.req("LLR_027")
def test_integrity_lists_every_violation():
    inp = frame(measures=(("A", (0, 1, 0)), ("A", (0, 2, 0))), pos=Position(math.nan, 0, 0),
                vel=Velocity(400, 0, 0), t=0.5)
    kinds = {v.split(":")[0] for v in integrity_check(inp, previous_t=1.0).violations}
    assert kinds == {"NonFiniteField", "DuplicateMeasure", "OutOfOrderTimestamp", "SpeedAboveBound"}


@pytest.mark.req("LLR_028")
def test_startup_self_test_healthy():
    trace = []
    reg = HealthRegistry()
    rep = startup_self_test(reg, 0.0, trace)
    assert rep.passed and rep.failures == () and rep.kind == "startup"
    assert all(reg.status[c].status is Status.Ok
               for c in (Component.Detection, Component.Tracking, Component.Assessment, Component.Maneuver))
    assert trace == [event(0.0, EventKind.SelfTestResult, failed="", kind="startup", passed=True)]


@pytest.mark.req("LLR_028", "LLR_010")
def test_startup_self_test_flags_misconfigured_range():
    rep = startup_self_test(HealthRegistry(coop_range=30000))
    assert not rep.passed and rep.failures == ("Detection",)


@pytest.mark.req("LLR_028")
def test_startup_self_test_flags_perturbed_cpa():
    rep = startup_self_test(HealthRegistry(cpa_impl=lambda p, v: CpaResult(10.5, 0.0, True)))
    assert rep.failures == ("Assessment",)
    rep = startup_self_test(HealthRegistry(cpa_impl=lambda p, v: 1 / 0))
    assert rep.failures == ("Assessment",)


@pytest.mark.req("LLR_028")
def test_startup_self_test_flags_tracking_config():
    rep = startup_self_test(HealthRegistry(tracking_cfg="not a config"))
    assert rep.failures == ("Tracking",)
    assert startup_self_test(HealthRegistry(tracking_cfg=TrackingConfig(confirm_m=5))).passed


@pytest.mark.req("LLR_029")
@pytest.mark.parametrize("t, prev, fires", [
    (10.0, 9.9, True), (9.9, 9.8, False), (10.0, None, True), (0.0, None, False),
    (20.05, 19.95, True), (20.15, 20.05, False),
])
def test_period_crossing(t, prev, fires):
    assert period_crossed(t, 10.0, prev) is fires


@pytest.mark.req("LLR_029")
def test_periodic_self_test_fires_on_boundary_only():
    reg = HealthRegistry(frame_times=[round(0.1 * k, 3) for k in range(101)])
    assert periodic_self_test(reg, 9.9, 10.0, 9.8) is None
    trace = []
    rep = periodic_self_test(reg, 10.0, 10.0, 9.9, trace)
    assert rep is not None and rep.passed and rep.kind == "periodic"
    assert trace[0].payload["kind"] == "periodic"


@pytest.mark.req("LLR_029", "LLR_013")
def test_periodic_self_test_detects_sensor_silence():
    times = [round(0.1 * k, 3) for k in range(101) if not 40 < k < 62]   # 2.2 s gap
    reg = HealthRegistry(frame_times=times)
    rep = periodic_self_test(reg, 10.0, 10.0, 9.9)
    assert not rep.passed and rep.failures == ("Cadence",)
    assert reg.status[Component.PrimarySensor].status is Status.Degraded


@pytest.mark.req("LLR_029")
def test_periodic_self_test_counts_trailing_silence():
    reg = HealthRegistry(frame_times=[round(0.1 * k, 3) for k in range(80)])   # last frame at 7.9
    assert periodic_self_test(reg, 10.0, 10.0, 9.9).failures == ("Cadence",)


@pytest.mark.req("LLR_030")
@pytest.mark.parametrize("p_ok, s_ok, current, active, count, failed", [
    (True, True, Source.Primary, Source.Primary, 0, False),
    (False, True, Source.Primary, Source.Secondary, 1, False),
    (False, False, Source.Secondary, Source.Secondary, 0, True),
    (True, True, Source.Secondary, Source.Secondary, 0, False),     # sticky: no fail-back
    (True, False, Source.Secondary, Source.Primary, 1, False),
])
def test_select_source(p_ok, s_ok, current, active, count, failed):
    sel = select_source(p_ok, s_ok, SourceSelection(current, 0))
    assert (sel.active, sel.failover_count, sel.failed) == (active, count, failed)


@pytest.mark.req("LLR_030")
def test_select_source_never_picks_failed_source_when_other_ok():
    for p_ok, s_ok, cur, fail in itertools.product((True, False), (True, False), Source, (True, False)):
        sel = select_source(p_ok, s_ok, SourceSelection(cur, 3, fail))
        ok = {Source.Primary: p_ok, Source.Secondary: s_ok}
        if p_ok or s_ok:
            assert ok[sel.active] and not sel.failed
        else:
            assert sel.failed and sel.active is cur


@pytest.mark.req("LLR_032")
@pytest.mark.parametrize("history, k, expected", [
    ([True, True, True], 3, True),
    ([True, False, True], 3, False),
    ([False, True], 1, True),
    ([True, True], 3, False),
])
def test_persistence_filter(history, k, expected):
    assert persistence_filter(history, k) is expected


@pytest.mark.req("LLR_032")
def test_persistence_filter_k1_is_last_sample():
    for n in range(1, 6):
        for hist in itertools.product((True, False), repeat=n):
            assert persistence_filter(hist, 1) is hist[-1]
    with pytest.raises(ValueError):
        persistence_filter([True], 0)


@pytest.mark.req("LLR_031")
def test_ground_record_format():
    ev = event(12.5, EventKind.ThreatIdentified, track_id=7, ttc=10.0)
    assert format_record(ev) == "12.500|ThreatIdentified|track_id=7;ttc=10.000"
    assert format_record(event(0, EventKind.SensorAlert)) == "0.000|SensorAlert|"
    ev = event(1, EventKind.CommandIssued, zone="1,2", b=1, a=2.0)
    assert format_record(ev) == "1.000|CommandIssued|a=2.000;b=1;zone=1,2"


@pytest.mark.req("LLR_031")
def test_emit_appends_one_lf_terminated_line():
    buf = io.StringIO()
    sink: list = []
    ev = event(3.25, EventKind.FailoverActivated, to="Secondary", count=1)
    line = emit_ground_event(ev, buf)
    emit_ground_event(ev, sink)
    assert line == "3.250|FailoverActivated|count=1;to=Secondary\n"
    assert buf.getvalue() == line and sink == [line]
    assert parse_record(line) == ev


@pytest.mark.req("LLR_031")
def test_unavailable_sink():
    with pytest.raises(SinkUnavailable):
        emit_ground_event(event(0, EventKind.SensorAlert), UnavailableSink())


def test_parse_record_rejects_garbage():
    for bad in ["nope", "1.0|NotAKind|", "1.0|SensorAlert|novalue", "x|SensorAlert|"]:
        with pytest.raises(ValueError):
            parse_record(bad)
    assert isinstance(parse_record("0.000|SensorAlert|"), TraceEvent)
