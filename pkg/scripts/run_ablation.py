#!/usr/bin/env python3
"""Ablation sweep: all four training modes across seeds, then print the
mode-level comparison (mean final reward and worst-skill quality score)."""
import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from autosil import cli  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(ROOT / "configs" / "ablation.toml"))
    parser.add_argument("--seed", default="1,2", help="comma-separated seeds")
    parser.add_argument("--out-dir", default="runs/ablation")
    parser.add_argument("--iterations", type=int)
    args = parser.parse_args()

    argv = ["ablate", "--config", args.config, "--seed", args.seed, "--out-dir", args.out_dir]
    if args.iterations:
        argv += ["--iterations", str(args.iterations)]
    rc = cli.main(argv)
    if rc != 0:
        return rc

    with open(Path(args.out_dir) / "comparison.csv") as fh:
        rows = list(csv.DictReader(fh))
    rewards = defaultdict(list)
    worst_quality = defaultdict(list)
    quality_cols = [c for c in rows[0] if c.startswith("quality_")]
    for row in rows:
        rewards[row["mode"]].append(float(row["final_reward"]))
        worst_quality[row["mode"]].append(
            min(float(row[c]) for c in quality_cols if row[c] != "")
        )
    print(f"{'mode':<12} {'mean final r':>12} {'worst quality':>14}")
    for mode in rewards:
        mean_r = sum(rewards[mode]) / len(rewards[mode])
        mean_q = sum(worst_quality[mode]) / len(worst_quality[mode])
        print(f"{mode:<12} {mean_r:>12.4f} {mean_q:>14.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
