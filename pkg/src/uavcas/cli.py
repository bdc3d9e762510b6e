"""``cas`` command line: run scenarios, check traces, build the traceability matrix."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import monitors, sim_harness, traceability
from .core_types import CasError
from .health import parse_record
from .pipeline import PipelineConfig

log = logging.getLogger("uavcas")


def _pipeline_config() -> PipelineConfig:
    path = os.environ.get("CAS_CONFIG")
    if not path:
        return PipelineConfig()
    return sim_harness.load_pipeline_config(Path(path).read_text(encoding="utf-8"))


def cmd_run(args) -> int:
    try:
        scn = sim_harness.load_scenario_file(args.scenario)
        cfg = _pipeline_config()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CasError, ValueError) as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return 2
    result = sim_harness.run(scn, cfg)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    # newline="" keeps LF endings on every platform, so hashes are comparable
    for suffix, text in ((".trace", result.trace_text()), (".gclog", result.gclog_text()),
                         (".csv", result.csv_text())):
        with open(out / f"{scn.name}{suffix}", "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    print(f"{scn.name}: {scn.n_ticks} ticks, {len(result.trace)} events -> {out}")
    return 0


def read_trace(path) -> list:
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                events.append(parse_record(line))
            except ValueError as exc:
                raise monitors.MalformedTrace(f"line {lineno}: {exc}") from None
    monitors.check_trace(events)
    return events


def cmd_monitor(args) -> int:
    try:
        cfg = monitors.MonitorConfig(horizon_h=args.horizon, dt=args.dt, raw_c2=args.raw_c2)
        trace = read_trace(args.trace)
        verdicts = monitors.run_all(trace, cfg)
    except (OSError, monitors.MalformedTrace, ValueError) as exc:
        print(f"error: malformed trace: {exc}", file=sys.stderr)
        return 2
    for v in verdicts:
        print(v.line())
    return 1 if any(v.status is monitors.Status.Violated for v in verdicts) else 0


def cmd_matrix(args) -> int:
    try:
        manifest = (Path(args.manifest).read_text(encoding="utf-8") if args.manifest
                    else traceability.shipped_manifest_text())
        report = (Path(args.tests).read_text(encoding="utf-8") if args.tests
                  else traceability.shipped_test_report_text())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    code, summary, message = traceability.run_matrix(manifest, report)
    if summary is None:
        print(f"error: inconsistent manifest: {message}", file=sys.stderr)
        return code
    csv_text = traceability.matrix_csv(summary)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(message, file=sys.stderr if not args.output else sys.stdout)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cas", description="UAV collision avoidance pipeline tools")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write .trace, .gclog and .csv")
    r.add_argument("scenario")
    r.add_argument("-o", "--output", default=".")
    r.add_argument("--seedless", action="store_true",
                   help="accepted for scripting symmetry; runs are always deterministic")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("monitor", help="check a trace against the runtime properties")
    m.add_argument("trace")
    m.add_argument("--horizon", type=int, default=20, help="bound on 'eventually', in ticks")
    m.add_argument("--dt", type=float, default=None, help="tick length (inferred when omitted)")
    m.add_argument("--raw-c2", action="store_true", help="unguarded detection-to-command property")
    m.set_defaults(func=cmd_monitor)

    x = sub.add_parser("matrix", help="build the requirements traceability matrix")
    x.add_argument("-m", "--manifest", help="requirements manifest (default: shipped)")
    x.add_argument("-t", "--tests", help="test report (default: shipped CI report)")
    x.add_argument("-o", "--output", help="CSV output path (default: stdout)")
    x.set_defaults(func=cmd_matrix)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
