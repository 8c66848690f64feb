"""Command line front end: simulate, train, infer, evaluate, sweep."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .config import (
    expand_config,
    experiment_from_config,
    load_config,
    resolve_data_path,
    section,
)
from .datafiles import load_dataset, save_dataset
from .evaluation import write_summary_json, write_trials_csv
from .experiments import run_experiment, sweep
from .model import CashModel, load_model
from .online import HashTable, stream_identify
from .plots import plot_confusion, plot_sweep, plot_trial_metrics, plot_training_log
from .signals import IQSignal, SignalDataset, SplitConfig, make_profile_bank, split_dataset
from .simulate import simulate_dataset
from .training import train_model

import numpy as np
import torch

MANIFEST_VERSION = 1


@dataclass
class RunManifest:
    """Provenance record written into every run directory."""

    command: str
    config: dict
    seed: int
    out_dir: str
    version: int = MANIFEST_VERSION
    package_version: str = __version__
    started_utc: str = ""
    finished_utc: str = ""
    status: str = "running"
    error: str = ""
    artifacts: list = field(default_factory=list)

    def path(self) -> Path:
        return Path(self.out_dir) / "run_manifest.json"

    def write(self) -> None:
        self.path().parent.mkdir(parents=True, exist_ok=True)
        self.path().write_text(json.dumps(asdict(self), indent=2))

    def start(self) -> None:
        self.started_utc = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        self.write()

    def finish(self, status: str, artifacts=None, error: str = "") -> None:
        self.finished_utc = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        self.status = status
        self.error = error
        if artifacts:
            self.artifacts = [str(a) for a in artifacts]
        self.write()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cashid",
        description="Online emitter identification via collision-alleviated signal hashing",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "generate a synthetic dataset onto disk"),
        ("train", "train a model from a config file"),
        ("infer", "stream signals through a trained model"),
        ("evaluate", "run seeded train+evaluate trials"),
        ("sweep", "rerun the evaluate harness across one axis"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="JSON config path")
        cmd.add_argument("--out", required=True, help="run output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override config seed")
        cmd.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
        cmd.add_argument("--no-identifier", action="store_true",
                         help="vanilla-hash ablation: drop the seen-emitters identifier")
        cmd.add_argument("--fsl", action="store_true", help="few-shot mode")
        cmd.add_argument("--freeze-encoder", choices=("on", "off"), default=None,
                         help="whether hasher training freezes the encoder")
    return parser


def _apply_flags(config: dict, args) -> dict:
    config = dict(config)
    if args.seed is not None:
        config["seed"] = args.seed
        config.setdefault("experiment", {})
        config["experiment"] = {**config["experiment"], "seed": args.seed}
        if "simulate" in config:
            config["simulate"] = {**config["simulate"], "seed": args.seed}
    if args.no_identifier:
        config["experiment"] = {**config.get("experiment", {}), "no_identifier": True}
    if args.fsl:
        config["experiment"] = {**config.get("experiment", {}), "mode": "fsl"}
        config["train"] = {**config.get("train", {}), "fsl_mode": True, "alpha": 0.0}
    if args.freeze_encoder is not None:
        config["train"] = {
            **config.get("train", {}),
            "freeze_encoder": args.freeze_encoder == "on",
        }
    return config


def _experiment_seed(config: dict) -> int:
    return int(config.get("experiment", {}).get("seed", config.get("seed", 0)))


def cmd_simulate(config: dict, out_dir: Path) -> list:
    spec = config.get("simulate", {})
    count = int(spec.get("profile_count", 0))
    bank = make_profile_bank(count, int(spec.get("profile_seed", 0)),
                             float(spec.get("spread", 1.0)),
                             spec.get("axis_spread"))
    dataset = simulate_dataset(
        bank,
        signals_per_class=int(spec.get("signals_per_class", 1)),
        length=int(spec.get("length", 4000)),
        snr_db=float(spec.get("snr_db", np.inf)),
        seed=int(spec.get("seed", 0)),
        sample_rate_hz=float(spec.get("sample_rate_hz", 1.0)),
    ) if bank else SignalDataset((), frozenset(), "train")
    manifest_path = save_dataset(dataset, out_dir / "dataset")
    print(f"wrote {len(dataset)} signals to {manifest_path}")
    return [manifest_path]


def _training_dataset(config: dict):
    source = config.get("dataset")
    if not source:
        raise ValueError("train config needs a 'dataset' section")
    if "manifest" in source:
        data = load_dataset(resolve_data_path(source["manifest"]))
    elif "simulate" in source:
        spec = source["simulate"]
        bank = make_profile_bank(
            int(spec.get("profile_count", 10)),
            int(spec.get("profile_seed", 0)), float(spec.get("spread", 1.0)),
            spec.get("axis_spread"),
        )
        data = simulate_dataset(
            bank, int(spec.get("signals_per_class", 100)),
            int(spec.get("length", 320)), float(spec.get("snr_db", 20.0)),
            seed=int(spec.get("seed", 0)),
        )
    else:
        raise ValueError("dataset section needs 'manifest' or 'simulate'")
    if "split" in config:
        return split_dataset(data, section(config, "split")).train
    return data


def cmd_train(config: dict, out_dir: Path) -> list:
    train_set = _training_dataset(config)
    encoder_cfg = section(config, "encoder")
    hasher_cfg = section(config, "hasher")
    identifier_cfg = section(config, "identifier")
    train_cfg = section(config, "train")
    no_identifier = bool(config.get("experiment", {}).get("no_identifier", False))
    seed = _experiment_seed(config)
    train_cfg = replace(train_cfg, seed=seed)
    dtype = torch.float64 if config.get("dtype", "float64") == "float64" else torch.float32
    model = CashModel(
        encoder_cfg, hasher_cfg, identifier_cfg, train_set.class_space,
        no_identifier=no_identifier, dtype=dtype, seed=seed,
    )
    log = train_model(train_set, model, train_cfg, log_path=out_dir / "training_log.jsonl")
    model_path = model.save(out_dir / "model.pt")
    artifacts = [model_path, out_dir / "training_log.jsonl"]
    if log:
        artifacts.append(plot_training_log(log, out_dir / "training_loss.png"))
    final = log[-1]["loss"] if log else float("nan")
    print(f"trained on {len(train_set)} signals; final loss {final:.6f}")
    print(f"model snapshot: {model_path}")
    return artifacts


def _stdin_signals():
    signals = []
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        raw = np.asarray(record["samples"], dtype=np.float64)
        if raw.size % 2:
            raise ValueError("stream record has an odd number of floats")
        signals.append(IQSignal(raw[0::2] + 1j * raw[1::2],
                                emitter_id=record.get("emitter_id")))
    return signals


def cmd_infer(config: dict, out_dir: Path) -> list:
    model = load_model(resolve_data_path(config["model"]))
    source = config.get("input", "-")
    if source == "-":
        signals = _stdin_signals()
    else:
        signals = list(load_dataset(resolve_data_path(source), role="test"))
    table = None
    if config.get("table"):
        table = HashTable.restore(resolve_data_path(config["table"]))
    rows, table = stream_identify(model, signals, table)
    out_path = out_dir / "labels.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w") as fh:
        for row in rows:
            line = json.dumps(row)
            fh.write(line + "\n")
            print(line)
    table_path = table.snapshot(out_dir / "table.json")
    return [out_path, table_path]


def cmd_evaluate(config: dict, out_dir: Path, jobs: int) -> list:
    exp = experiment_from_config(config)
    trials = int(config.get("trials", 1))
    result = run_experiment(exp, trials, jobs=jobs)
    artifacts = [
        write_trials_csv(result.rows, out_dir / "trials.csv"),
        write_summary_json(result.reports, out_dir / "summary.json",
                           extra={"trials": trials}),
        plot_trial_metrics(result.rows, out_dir / "trial_metrics.png"),
    ]
    for criterion, report in result.reports.items():
        artifacts.append(
            plot_confusion(report.confusion, out_dir / f"confusion_{criterion}.png",
                           title=f"{criterion}: summed cluster vs class counts")
        )
        print(
            f"{criterion}: acc_all={report.acc_all:.4f} acc_seen={report.acc_seen:.4f} "
            f"acc_novel={report.acc_novel:.4f} collision_rate={report.collision_rate:.4f} "
            f"({report.trials} trials)"
        )
    return artifacts


def cmd_sweep(config: dict, out_dir: Path, jobs: int) -> list:
    spec = config.get("sweep")
    if not spec:
        raise ValueError("sweep config needs a 'sweep' section with axis and values")
    exp = experiment_from_config(config)
    trials = int(config.get("trials", 1))
    result = sweep(exp, spec["axis"], spec["values"], trials, jobs=jobs)
    artifacts = []
    agg_path = out_dir / "sweep_aggregate.csv"
    agg_path.parent.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    with agg_path.open("w", newline="") as fh:
        writer = _csv.DictWriter(fh, fieldnames=list(result.aggregate_rows[0].keys()))
        writer.writeheader()
        writer.writerows(result.aggregate_rows)
    artifacts.append(agg_path)
    for value, res in zip(result.values, result.results):
        artifacts.append(
            write_trials_csv(res.rows, out_dir / f"value_{value}" / "trials.csv")
        )
    artifacts.append(plot_sweep(result.aggregate_rows, out_dir / "sweep.png"))
    for row in result.aggregate_rows:
        print(
            f"{row['axis']}={row['value']} {row['criterion']}: "
            f"acc_all={row['acc_all_mean']:.4f} (+/-{row['acc_all_std']:.4f})"
        )
    return artifacts


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        config = _apply_flags(load_config(args.config), args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest = RunManifest(
        command=args.command, config=config,
        seed=args.seed if args.seed is not None else _experiment_seed(config),
        out_dir=str(out_dir),
    )
    manifest.start()
    try:
        if args.command == "simulate":
            artifacts = cmd_simulate(config, out_dir)
        elif args.command == "train":
            artifacts = cmd_train(config, out_dir)
        elif args.command == "infer":
            artifacts = cmd_infer(config, out_dir)
        elif args.command == "evaluate":
            artifacts = cmd_evaluate(config, out_dir, args.jobs)
        else:
            artifacts = cmd_sweep(config, out_dir, args.jobs)
    except Exception as exc:  # noqa: BLE001 - every failure must flag the manifest
        manifest.finish("failed", error=f"{type(exc).__name__}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest.finish("completed", artifacts=artifacts)
    return 0


if __name__ == "__main__":
    sys.exit(main())
