#!/usr/bin/env python3
"""Evaluate a checkpoint and print its cross-skill DTW matrix."""
import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from autosil.checkpoint import load_checkpoint  # noqa: E402
from autosil.config import load_config  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--episodes", type=int, default=2)
    args = parser.parse_args()

    trainer = load_checkpoint(load_config(args.config), args.checkpoint)
    report = trainer.evaluate(episodes=args.episodes, transition_episodes=0)
    names = report["skills"]
    width = max(len(n) for n in names) + 2
    print(" " * width + "".join(f"{n:>{width}}" for n in names))
    for name, row in zip(names, report["dtw_matrix"]):
        print(f"{name:>{width}}" + "".join(f"{v:>{width}.2f}" for v in row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
