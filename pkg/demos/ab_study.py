"""Aggregate an A/B preference study from a vote file into the report table.

Writes a synthetic study file (three pairwise comparisons, 10,000 votes each,
at fixed preference rates), then runs it through the same loader/aggregator
the eval command uses for --votes.

    python3 demos/ab_study.py --out demo_run
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

from style_vton.metrics import ab_aggregate, format_ab_table, load_votes_csv

STUDY = [
    # challenger, votes for ours, votes for the challenger
    ("VITON", 7787, 2213),
    ("VTNFP", 8138, 1862),
    ("CP-VTON", 6676, 3324),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_run")
    args = ap.parse_args()

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    votes_path = root / "votes.csv"
    with open(votes_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "method_a", "method_b", "vote"])
        for other, ours, theirs in STUDY:
            for i in range(ours):
                writer.writerow([f"{other}-{i:05d}", "Ours", other, "Ours"])
            for i in range(theirs):
                writer.writerow([f"{other}-x{i:05d}", "Ours", other, other])
    print(f"wrote {sum(o + t for _, o, t in STUDY)} votes to {votes_path}\n")

    rows = ab_aggregate(load_votes_csv(votes_path))
    print(format_ab_table(rows))


if __name__ == "__main__":
    main()
