"""Command-line entry point: training, ablation sweeps, and evaluation.

    autosil train  --config exp.toml [--seed N] [--iterations N] [--mode M]
                   [--out-dir D] [--workers N]
    autosil ablate --config exp.toml [--seed 1,2] [--iterations N]
                   [--out-dir D] [--workers N]
    autosil eval   --config exp.toml --checkpoint ckpt.json [--episodes N]
                   [--out-dir D]

Outputs per run: manifest.json (written before training), metrics.jsonl,
summary.csv, checkpoints/iter_N.json; evaluation adds eval_report.json and
traces/*.csv. The ablation sweep runs all four modes per seed and emits a
comparison CSV.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import MODES, ExperimentConfig, load_config
from .errors import ConfigError, DivergenceError
from .orchestrator import MetricsRecord, Trainer

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

COMPARISON_BASE_COLUMNS = ["mode", "seed", "final_reward"]
FINAL_WINDOW_FRACTION = 0.1  # tail share of iterations averaged into final_reward


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg.run.seed = int(args.seed)
    if getattr(args, "iterations", None) is not None:
        cfg.run.iterations = args.iterations
    if getattr(args, "mode", None) is not None:
        cfg.run.mode = args.mode
    if getattr(args, "out_dir", None) is not None:
        cfg.run.out_dir = args.out_dir
    if getattr(args, "workers", None) is not None:
        cfg.ppo.num_envs = args.workers
    cfg.validate()
    return cfg


def write_manifest(cfg: ExperimentConfig, config_path, out_dir: Path, seeds) -> None:
    manifest = {
        "config_path": str(config_path),
        "config": cfg.to_dict(),
        "seeds": list(seeds),
        "out_dir": str(out_dir),
        "config_hash": cfg.content_hash(),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _summary_columns(cfg: ExperimentConfig) -> list[str]:
    names = [s.name for s in cfg.env.skills]
    cols = ["iteration", "total_reward", "mean_task_reward", "sil_weight", "task_weight"]
    cols += [f"task_reward_{n}" for n in names]
    cols += [f"dtw_{n}" for n in names]
    cols += [f"quality_{n}" for n in names]
    cols += [f"threshold_{n}" for n in names]
    return cols


def _summary_row(record: MetricsRecord) -> list:
    def blank(x):
        return "" if x is None else repr(float(x))

    row = [
        record.iteration,
        repr(record.total_reward),
        repr(record.mean_task_reward),
        repr(record.sil_weight),
        repr(record.task_weight),
    ]
    row += [blank(x) for x in record.skill_task_rewards]
    row += [blank(x) for x in record.skill_dtw]
    row += [blank(x) for x in record.skill_quality]
    row += [blank(x) for x in record.buffer_thresholds]
    return row


def final_reward(records: list[MetricsRecord]) -> float:
    """Mean total reward over the trailing window of a run."""
    window = max(1, round(FINAL_WINDOW_FRACTION * len(records)))
    return float(np.mean([r.total_reward for r in records[-window:]]))


def run_training(cfg: ExperimentConfig, config_path, out_dir: Path) -> tuple[Trainer, list[MetricsRecord]]:
    """One full training run with streamed metrics and periodic checkpoints."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "checkpoints").mkdir(exist_ok=True)
    write_manifest(cfg, config_path, out_dir, seeds=[cfg.run.seed])

    trainer = Trainer(cfg)
    records: list[MetricsRecord] = []
    interval = cfg.run.checkpoint_interval
    with open(out_dir / "metrics.jsonl", "w") as metrics_fh:
        for i in range(cfg.run.iterations):
            record = trainer.train_iteration()
            records.append(record)
            metrics_fh.write(json.dumps(record.to_dict()))
            metrics_fh.write("\n")
            metrics_fh.flush()
            if interval > 0 and record.iteration % interval == 0:
                save_checkpoint(trainer, out_dir / "checkpoints" / f"iter_{record.iteration}.json")
            if record.iteration % 25 == 0 or record.iteration == cfg.run.iterations:
                log.info(
                    "[%s seed %d] iter %d/%d r=%.4f r_task=%.4f",
                    cfg.run.mode,
                    cfg.run.seed,
                    record.iteration,
                    cfg.run.iterations,
                    record.total_reward,
                    record.mean_task_reward,
                )
    save_checkpoint(trainer, out_dir / "checkpoints" / f"iter_{trainer.iteration}.json")
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_summary_columns(cfg))
        for record in records:
            writer.writerow(_summary_row(record))
    return trainer, records


def cmd_train(args) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg.run.out_dir)
    try:
        run_training(cfg, args.config, out_dir)
    except DivergenceError as exc:
        print(f"training diverged: {exc} (partial outputs kept in {out_dir})", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _comparison_columns(cfg: ExperimentConfig) -> list[str]:
    names = [s.name for s in cfg.env.skills]
    return (
        COMPARISON_BASE_COLUMNS
        + [f"quality_{n}" for n in names]
        + [f"eval_dtw_{n}" for n in names]
    )


def cmd_ablate(args) -> int:
    try:
        base = load_config(args.config)
        seeds = [int(s) for s in str(args.seed if args.seed is not None else base.run.seed).split(",")]
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_root = Path(args.out_dir if args.out_dir is not None else base.run.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    rows = []
    failures = 0
    for mode in MODES:
        for seed in seeds:
            try:
                cfg = load_config(args.config)
                cfg.run.mode = mode
                cfg.run.seed = seed
                if args.iterations is not None:
                    cfg.run.iterations = args.iterations
                if args.workers is not None:
                    cfg.ppo.num_envs = args.workers
                run_dir = out_root / f"{mode.replace('-', '_')}_seed{seed}"
                cfg.run.out_dir = str(run_dir)
                cfg.validate()
                trainer, records = run_training(cfg, args.config, run_dir)
                report = trainer.evaluate()
                with open(run_dir / "eval_report.json", "w") as fh:
                    json.dump(report, fh, sort_keys=True, indent=1)
                    fh.write("\n")
                last = records[-1]
                rows.append(
                    [mode, seed, repr(final_reward(records))]
                    + ["" if q is None else repr(float(q)) for q in last.skill_quality]
                    + [repr(float(d)) for d in report["skill_dtw"]]
                )
            except (ConfigError, DivergenceError) as exc:
                log.error("run %s/seed %d failed: %s", mode, seed, exc)
                skills = len(base.env.skills)
                rows.append([mode, seed, ""] + [""] * (2 * skills))
                failures += 1
    with open(out_root / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_comparison_columns(base))
        writer.writerows(rows)
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_eval(args) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out_dir = Path(cfg.run.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        trainer = load_checkpoint(cfg, args.checkpoint)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    traces = out_dir / "traces"
    traces.mkdir(exist_ok=True)
    report = trainer.evaluate(episodes=args.episodes, traces_dir=traces)
    with open(out_dir / "eval_report.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    log.info("eval report written to %s", out_dir / "eval_report.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autosil", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment TOML file")
        p.add_argument("--out-dir", help="output directory override")

    train = sub.add_parser("train", help="run one training experiment")
    common(train)
    train.add_argument("--seed", type=int, help="root seed override")
    train.add_argument("--iterations", type=int, help="iteration count override")
    train.add_argument("--mode", choices=MODES, help="training mode override")
    train.add_argument("--workers", type=int, help="parallel rollout environments")
    train.set_defaults(fn=cmd_train)

    ablate = sub.add_parser("ablate", help="run all four modes across seeds")
    common(ablate)
    ablate.add_argument("--seed", help="comma-separated seed list, e.g. 1,2")
    ablate.add_argument("--iterations", type=int)
    ablate.add_argument("--workers", type=int)
    ablate.set_defaults(fn=cmd_ablate)

    ev = sub.add_parser("eval", help="evaluate a trained checkpoint")
    common(ev)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--episodes", type=int, help="evaluation episodes per skill")
    ev.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
