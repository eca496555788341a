#!/usr/bin/env python3
"""Generate the synthetic fixtures into a working directory.

Writes the word-level mini test set (2 docs x 25 segments, 2 reference sets,
3 systems with drifted/blob segmentation) and the small character-level en-zh
set. Everything is seeded; rerunning reproduces identical bytes.
"""

import argparse
from pathlib import Path

from steval.fixtures import build_char_testset, build_mini_testset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", type=Path)
    parser.add_argument("--seed", type=int, default=20240601)
    args = parser.parse_args()

    manifest, systems = build_mini_testset(args.outdir / "mini", seed=args.seed)
    print(f"mini test set: {manifest}")
    for system_id, path in sorted(systems.items()):
        print(f"  raw system {system_id}: {path}")
    zh_manifest, zh_systems = build_char_testset(args.outdir / "zh", seed=args.seed + 1)
    print(f"char-level test set: {zh_manifest}")
    for system_id, path in sorted(zh_systems.items()):
        print(f"  raw system {system_id}: {path}")


if __name__ == "__main__":
    main()
