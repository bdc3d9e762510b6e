"""Head-on encounter, with and without the avoidance pipeline.

Runs the shipped head-on scenario twice, prints the first few commands and
the minimum separation each way, and then checks the trace with the
runtime monitors.

    python3 demos/head_on_encounter.py
"""

from __future__ import annotations

from pathlib import Path

from uavcas import sim_harness
from uavcas.core_types import EventKind
from uavcas.monitors import run_all

SCENARIOS = Path(sim_harness.__file__).parent / "scenarios"


def main() -> None:
    scn = sim_harness.load_scenario_file(SCENARIOS / "head_on.scn")
    result = sim_harness.run(scn)

    print(f"{scn.name}: {scn.n_ticks} ticks at dt={scn.dt} s, {len(result.trace)} trace events")
    cmds = [ev for ev in result.trace if ev.kind is EventKind.CommandIssued]
    print(f"{len(cmds)} commands issued; the first three:")
    for ev in cmds[:3]:
        print("  ", ev.t, ev.payload["command"], ev.payload["kind"], "ttc", ev.payload["ttc"])
    ends = [ev for ev in result.trace if ev.kind is EventKind.ManeuverTerminated]
    if ends:
        print(f"maneuver terminated at t={ends[0].t:.1f} s")

    off = sim_harness.oracle_min_separation(scn, pipeline=False)
    on = sim_harness.oracle_min_separation(scn, pipeline=True)
    print(f"minimum separation: {off:8.2f} m without CAS, {on:8.2f} m with CAS (protected radius 150 m)")

    print("monitor verdicts:")
    for verdict in run_all(result.trace):
        print("  ", verdict.line())


if __name__ == "__main__":
    main()
