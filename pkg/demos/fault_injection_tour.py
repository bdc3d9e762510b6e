"""Run every shipped fault scenario and summarize what the pipeline did.

For each fault: sensor alerts, failovers, self-test failures, commands, and
the monitor verdicts that come out Violated.

    python3 demos/fault_injection_tour.py
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path

from uavcas import sim_harness
from uavcas.core_types import EventKind
from uavcas.monitors import Status, run_all

FAULTS = Path(sim_harness.__file__).parent / "scenarios" / "faults"


def summarize(path: Path) -> str:
    scn = sim_harness.load_scenario_file(path)
    res = sim_harness.run(scn)
    kinds = Counter(ev.kind for ev in res.trace)
    failed_tests = sorted({ev.payload["failed"] for ev in res.trace
                           if ev.kind is EventKind.SelfTestResult and ev.payload["passed"] == "0"})
    violated = [v.property.value for v in run_all(res.trace) if v.status is Status.Violated]
    phantoms = sum(1 for mid in res.track_origins.values() if mid.startswith("phantom-"))
    bits = [
        f"alerts={kinds[EventKind.SensorAlert]}",
        f"failovers={kinds[EventKind.FailoverActivated]}",
        f"commands={kinds[EventKind.CommandIssued]}",
        f"ground={len(res.gclog)}",
    ]
    if failed_tests:
        bits.append(f"selftest_failed={','.join(failed_tests)}")
    if phantoms:
        bits.append(f"phantom_tracks={phantoms}")
    bits.append(f"violated={','.join(violated) or '-'}")
    return f"{scn.name:<22} " + " ".join(bits)


def main() -> None:
    for path in sorted(FAULTS.glob("*.scn")):
        print(summarize(path))


if __name__ == "__main__":
    main()
