#!/usr/bin/env python3
"""Single-skill learning experiment: train the walk analog and report the
DTW reduction and final task reward against the acceptance thresholds."""
import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from autosil import cli  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(ROOT / "configs" / "walk_accept.toml"))
    parser.add_argument("--out-dir", default="runs/walk_accept")
    args = parser.parse_args()

    rc = cli.main(["train", "--config", args.config, "--out-dir", args.out_dir])
    if rc != 0:
        return rc
    records = [
        json.loads(line)
        for line in (Path(args.out_dir) / "metrics.jsonl").read_text().splitlines()
    ]
    first_dtw = records[0]["skill_dtw"][0]
    final_dtw = records[-1]["skill_dtw"][0]
    final_task = records[-1]["mean_task_reward"]
    print(f"iteration-1 DTW : {first_dtw:.2f}")
    print(f"final DTW       : {final_dtw:.2f} ({final_dtw / first_dtw:.1%} of start)")
    print(f"final task r    : {final_task:.4f}")
    ok = final_dtw <= 0.5 * first_dtw and final_task >= 0.6
    print("learning criterion:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
