#!/usr/bin/env python3
"""Drive the full pipeline on the synthetic mini fixture.

reseg -> score -> campaign build -> ingest synthetic scores -> export ->
aggregate -> correlate. With --check it runs twice and verifies the produced
artifacts are byte-identical.
"""

import argparse
import sys
from pathlib import Path

from steval.fixtures import run_mini_campaign


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workdir", type=Path)
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument(
        "--check",
        action="store_true",
        help="run twice in sibling directories and compare bytes",
    )
    args = parser.parse_args()

    if args.check:
        first = run_mini_campaign(args.workdir / "run1", seed=args.seed)
        second = run_mini_campaign(args.workdir / "run2", seed=args.seed)
        diffs = sorted(
            set(first) ^ set(second)
        ) + [k for k in first if k in second and first[k] != second[k]]
        if diffs:
            print(f"NOT deterministic; differing artifacts: {diffs}", file=sys.stderr)
            return 1
        print(f"deterministic: {len(first)} artifacts byte-identical across runs")
        return 0

    artifacts = run_mini_campaign(args.workdir, seed=args.seed)
    print(f"pipeline complete: {len(artifacts)} artifacts under {args.workdir}")
    report = args.workdir / "report.md"
    if report.exists():
        print(report.read_text(encoding="utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
