"""Build the requirements traceability matrix and show what a gap looks like.

    python3 demos/traceability_matrix.py
"""

from __future__ import annotations

from uavcas.traceability import drop_tests_for, run_matrix, shipped_manifest_text, shipped_test_report_text


def main() -> None:
    manifest, report = shipped_manifest_text(), shipped_test_report_text()
    code, summary, text = run_matrix(manifest, report)
    print(text)
    print(f"exit code {code}")

    llr = next(r for r in summary.records if r.level == "LLR")
    print(f"\n{llr.requirement.tag} ({llr.title}) is covered by:")
    for nodeid in llr.covering_tests:
        print("  ", nodeid)

    code, summary, text = run_matrix(manifest, drop_tests_for(report, llr.requirement.tag))
    print(f"\nwithout those tests: exit code {code}, uncovered {summary.uncovered_llrs}")


if __name__ == "__main__":
    main()
