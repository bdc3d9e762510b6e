"""Requirements traceability: manifest, test report and coverage matrix.

Manifest lines are ``ID | parents | ops | title`` (``#`` comments, ``-`` for
an empty list). Test report lines are ``nodeid<TAB>outcome<TAB>TAGS`` with
comma-separated requirement tags. Only passing tests count as coverage.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Optional

from .core_types import CasError, RequirementId

LEVEL_ORDER = ("SRATS", "HLR", "DHLR", "LLR")
# which levels a requirement of a given level may name as parent
PARENT_LEVELS = {"SRATS": (), "HLR": ("SRATS",), "DHLR": ("SRATS",), "LLR": ("HLR", "DHLR")}

EXIT_OK, EXIT_UNCOVERED, EXIT_INCONSISTENT = 0, 1, 2


class ManifestError(CasError):
    pass


@dataclass(frozen=True)
class TraceabilityRecord:
    requirement: RequirementId
    parents: tuple[RequirementId, ...] = ()
    implementing_ops: tuple[str, ...] = ()
    covering_tests: tuple[str, ...] = ()
    title: str = ""

    @property
    def level(self) -> str:
        return self.requirement.level


@dataclass(frozen=True)
class TestResult:
    nodeid: str
    outcome: str
    tags: tuple[str, ...]


@dataclass
class MatrixSummary:
    records: list[TraceabilityRecord]
    uncovered: dict[str, list[str]] = field(default_factory=dict)

    @property
    def uncovered_llrs(self) -> list[str]:
        return self.uncovered.get("LLR", [])

    def counts(self) -> Counter:
        return Counter(r.level for r in self.records)

    def text(self) -> str:
        counts = self.counts()
        lines = ["level  total  uncovered"]
        for lvl in LEVEL_ORDER:
            lines.append(f"{lvl:<6} {counts.get(lvl, 0):>5}  {len(self.uncovered.get(lvl, [])):>9}")
        for lvl in LEVEL_ORDER:
            for rid in self.uncovered.get(lvl, []):
                lines.append(f"uncovered: {rid}")
        return "\n".join(lines)


def _split(cell: str) -> list[str]:
    cell = cell.strip()
    if cell in ("", "-"):
        return []
    return [c.strip() for c in cell.split(",") if c.strip()]


def parse_manifest(text: str) -> list[TraceabilityRecord]:
    """Parse and consistency-check a manifest.

    Raises :class:`ManifestError` for malformed lines, duplicate IDs,
    dangling parents, parents at the wrong level, or HLR/DHLR/LLR entries
    without any parent.
    """
    recs: list[TraceabilityRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cells = line.split("|")
        if len(cells) != 4:
            raise ManifestError(f"line {lineno}: expected 4 '|' separated fields")
        try:
            rid = RequirementId(cells[0].strip())
            parents = tuple(RequirementId(p) for p in _split(cells[1]))
        except ValueError as exc:
            raise ManifestError(f"line {lineno}: {exc}") from None
        recs.append(TraceabilityRecord(rid, parents, tuple(_split(cells[2])), title=cells[3].strip()))

    ids = Counter(r.requirement for r in recs)
    dup = sorted(str(i) for i, n in ids.items() if n > 1)
    if dup:
        raise ManifestError(f"duplicate requirement ids: {', '.join(dup)}")
    for r in recs:
        allowed = PARENT_LEVELS[r.level]
        if allowed and not r.parents:
            raise ManifestError(f"{r.requirement} has no parent")
        for p in r.parents:
            if p not in ids:
                raise ManifestError(f"{r.requirement} names unknown parent {p}")
            if p.level not in allowed:
                raise ManifestError(f"{r.requirement} cannot descend from {p} ({p.level})")
    return sorted(recs, key=lambda r: r.requirement.tag)


def parse_test_report(text: str) -> list[TestResult]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        cells = raw.rstrip("\n").split("\t")
        if len(cells) != 3:
            raise ManifestError(f"test report line {lineno}: expected 3 tab-separated fields")
        out.append(TestResult(cells[0], cells[1], tuple(_split(cells[2]))))
    return out


def build_matrix(manifest: Iterable[TraceabilityRecord],
                 report: Iterable[TestResult]) -> MatrixSummary:
    """Attach passing tests to requirements and find coverage gaps.

    LLRs need at least one directly tagged passing test. Higher levels are
    covered when they have a direct test or any covered descendant.
    """
    manifest = list(manifest)
    tests: dict[str, list[str]] = {}
    for res in report:
        if res.outcome != "passed":
            continue
        for tag in res.tags:
            tests.setdefault(tag, []).append(res.nodeid)
    recs = [TraceabilityRecord(r.requirement, r.parents, r.implementing_ops,
                               tuple(sorted(set(tests.get(r.requirement.tag, [])))), r.title)
            for r in manifest]

    children: dict[str, list[str]] = {}
    for r in recs:
        for p in r.parents:
            children.setdefault(p.tag, []).append(r.requirement.tag)
    by_id = {r.requirement.tag: r for r in recs}
    memo: dict[str, bool] = {}

    def covered(rid: str) -> bool:
        if rid not in memo:
            r = by_id[rid]
            if r.level == "LLR":
                memo[rid] = bool(r.covering_tests)
            else:
                memo[rid] = bool(r.covering_tests) or any(covered(c) for c in children.get(rid, []))
        return memo[rid]

    uncovered: dict[str, list[str]] = {}
    for r in recs:
        if not covered(r.requirement.tag):
            uncovered.setdefault(r.level, []).append(r.requirement.tag)
    return MatrixSummary(recs, uncovered)


def matrix_csv(summary: MatrixSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["requirement", "level", "parents", "implementing_ops", "covering_tests", "n_tests", "title"])
    for r in summary.records:
        w.writerow([r.requirement.tag, r.level, ";".join(p.tag for p in r.parents),
                    ";".join(r.implementing_ops), ";".join(r.covering_tests),
                    len(r.covering_tests), r.title])
    return buf.getvalue()


def shipped_manifest_text() -> str:
    return resources.files("uavcas").joinpath("data", "requirements.txt").read_text(encoding="utf-8")


def shipped_test_report_text() -> str:
    return resources.files("uavcas").joinpath("data", "ci_test_report.tsv").read_text(encoding="utf-8")


def run_matrix(manifest_text: str, report_text: str) -> tuple[int, Optional[MatrixSummary], str]:
    """(exit code, summary or None, message)."""
    try:
        manifest = parse_manifest(manifest_text)
        report = parse_test_report(report_text)
    except ManifestError as exc:
        return EXIT_INCONSISTENT, None, str(exc)
    summary = build_matrix(manifest, report)
    code = EXIT_UNCOVERED if summary.uncovered_llrs else EXIT_OK
    return code, summary, summary.text()


def drop_tests_for(report_text: str, requirement: str) -> str:
    """The test report with every test tagged ``requirement`` removed."""
    keep = []
    for res in parse_test_report(report_text):
        if requirement not in res.tags:
            keep.append(f"{res.nodeid}\t{res.outcome}\t{','.join(res.tags)}")
    return "".join(line + "\n" for line in keep)


def format_report(results: Iterable[tuple[str, str, Iterable[str]]]) -> str:
    lines = sorted(f"{nodeid}\t{outcome}\t{','.join(sorted(set(tags)))}" for nodeid, outcome, tags in results)
    return "".join(line + "\n" for line in lines)


def requirement_counts(records: Iterable[TraceabilityRecord]) -> Mapping[str, int]:
    return dict(Counter(r.level for r in records))
