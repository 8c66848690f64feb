"""Seeded multi-trial experiment harness and parameter sweeps."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .encoder import EncoderConfig
from .evaluation import CRITERIA, EvalReport, aggregate_reports, evaluate
from .hasher import HasherConfig
from .identifier import IdentifierConfig
from .model import CashModel
from .signals import (
    SignalDataset,
    SplitConfig,
    SplitResult,
    make_profile_bank,
    split_dataset,
)
from .simulate import simulate_dataset
from .training import TrainConfig, finetune_fsl, pretrain_fsl, train_model

import torch

SWEEP_AXES = ("code_length", "seen_count", "shots")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one seeded trial needs: data, split, model, training.

    gzsl mode simulates profile_count emitters, splits them into seen
    and novel classes and trains on seen signals only.  fsl mode
    treats all profile_count emitters as novel (shots_per_novel
    labeled samples each) and optionally pretrains the encoder on
    pretrain_profile_count disjoint emitters without labels.
    """

    mode: str = "gzsl"
    profile_count: int = 10
    signals_per_class: int = 240
    raw_length: int = 320
    snr_db: float = 20.0
    profile_seed: int = 0
    profile_spread: float = 1.0
    profile_axis_spread: Optional[dict] = None
    seen: Union[float, Sequence[int]] = 0.5
    shots_per_novel: int = 5
    test_per_class: int = 40
    encoder: EncoderConfig = field(default_factory=EncoderConfig.desk)
    hasher: HasherConfig = field(default_factory=lambda: HasherConfig(input_dim=128))
    identifier: IdentifierConfig = field(default_factory=IdentifierConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    no_identifier: bool = False
    criteria: Sequence[str] = ("task_aware", "task_agnostic")
    pretrain: bool = True
    pretrain_profile_count: int = 10
    pretrain_signals_per_class: int = 60
    dtype: str = "float64"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("gzsl", "fsl"):
            raise ValueError(f"mode must be 'gzsl' or 'fsl', got {self.mode!r}")
        if self.raw_length < self.encoder.input_length:
            raise ValueError("raw_length must be >= encoder input_length")
        unknown = set(self.criteria) - set(CRITERIA)
        if unknown:
            raise ValueError(f"unknown criteria {sorted(unknown)}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")
        if self.mode == "fsl" and not self.train.fsl_mode:
            raise ValueError("fsl experiments need a TrainConfig with fsl_mode")
        object.__setattr__(self, "criteria", tuple(self.criteria))

    @property
    def torch_dtype(self):
        return torch.float64 if self.dtype == "float64" else torch.float32


@dataclass
class TrialOutcome:
    """Reports per criterion plus bookkeeping for one trial."""

    reports: dict
    seed: int
    wall_seconds: float
    model: Optional[CashModel] = None


def _fsl_shots_split(dataset: SignalDataset, shots: int, test_per_class: int,
                     seed: int) -> SplitResult:
    """All classes novel: shots labeled samples to train, rest to test."""
    rng = np.random.default_rng(seed + 1)
    train_idx, test_idx = [], []
    by_class = {}
    for idx, sig in enumerate(dataset.signals):
        by_class.setdefault(sig.emitter_id, []).append(idx)
    for cls in sorted(by_class):
        indices = np.array(by_class[cls])
        rng.shuffle(indices)
        if len(indices) < test_per_class + shots:
            raise ValueError(
                f"class {cls} has {len(indices)} samples, needs {test_per_class + shots}"
            )
        test_idx.extend(int(i) for i in indices[:test_per_class])
        train_idx.extend(int(i) for i in indices[test_per_class : test_per_class + shots])
    train = SignalDataset(
        tuple(dataset.signals[i] for i in sorted(train_idx)),
        dataset.class_space, "train",
    )
    test = SignalDataset(
        tuple(dataset.signals[i] for i in sorted(test_idx)),
        dataset.class_space, "test",
    )
    return SplitResult(train, test, frozenset(), frozenset(dataset.class_space))


def _build_model(cfg: ExperimentConfig, classes, trial_seed: int) -> CashModel:
    return CashModel(
        cfg.encoder, cfg.hasher, cfg.identifier, classes,
        no_identifier=cfg.no_identifier, dtype=cfg.torch_dtype, seed=trial_seed,
    )


def run_trial(cfg: ExperimentConfig, trial: int, keep_model: bool = False) -> TrialOutcome:
    """Simulate, split, train and evaluate once with trial-specific seeds."""
    start = time.perf_counter()
    trial_seed = cfg.seed + trial
    train_cfg = replace(cfg.train, seed=trial_seed)

    if cfg.mode == "gzsl":
        bank = make_profile_bank(cfg.profile_count, cfg.profile_seed,
                                 cfg.profile_spread, cfg.profile_axis_spread)
        data = simulate_dataset(
            bank, cfg.signals_per_class, cfg.raw_length, cfg.snr_db,
            seed=1000 * cfg.seed + trial,
        )
        split = split_dataset(
            data,
            SplitConfig(
                mode="gzsl", seen=cfg.seen,
                test_per_class=cfg.test_per_class, seed=trial_seed,
            ),
        )
        model = _build_model(cfg, split.train.class_space, trial_seed)
        train_model(split.train, model, train_cfg)
    else:
        bank = make_profile_bank(cfg.profile_count, cfg.profile_seed,
                                 cfg.profile_spread, cfg.profile_axis_spread)
        data = simulate_dataset(
            bank, cfg.shots_per_novel + cfg.test_per_class, cfg.raw_length,
            cfg.snr_db, seed=1000 * cfg.seed + trial,
        )
        split = _fsl_shots_split(data, cfg.shots_per_novel, cfg.test_per_class, trial_seed)
        model = _build_model(cfg, split.train.class_space, trial_seed)
        if cfg.pretrain:
            pretrain_bank = make_profile_bank(
                cfg.pretrain_profile_count, cfg.profile_seed + 7919,
                cfg.profile_spread, cfg.profile_axis_spread,
            )
            pretrain_data = simulate_dataset(
                pretrain_bank, cfg.pretrain_signals_per_class, cfg.raw_length,
                cfg.snr_db, seed=1000 * cfg.seed + trial + 500,
            )
            pretrain_fsl(pretrain_data, model, train_cfg)
        finetune_fsl(split.train, model, train_cfg)

    reports = {}
    for criterion in cfg.criteria:
        reports[criterion] = evaluate(
            model, split.test, criterion, split.seen_classes, stream_seed=trial_seed
        )
    wall = time.perf_counter() - start
    return TrialOutcome(
        reports=reports, seed=trial_seed, wall_seconds=wall,
        model=model if keep_model else None,
    )


@dataclass
class ExperimentResult:
    """Aggregated reports per criterion plus per-trial CSV rows."""

    config: ExperimentConfig
    reports: dict
    rows: list


def _trial_rows(outcome: TrialOutcome, trial: int) -> list:
    rows = []
    for criterion, report in outcome.reports.items():
        rows.append(
            {
                "trial": trial,
                "criterion": criterion,
                "acc_all": report.acc_all,
                "acc_seen": report.acc_seen,
                "acc_novel": report.acc_novel,
                "collision_rate": report.collision_rate,
                "wall_seconds": round(outcome.wall_seconds, 3),
                "seed": outcome.seed,
            }
        )
    return rows


def run_experiment(cfg: ExperimentConfig, trials: int, jobs: int = 1) -> ExperimentResult:
    """Run seeded independent trials and aggregate per criterion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_trial, [cfg] * trials, range(trials)))
    else:
        outcomes = [run_trial(cfg, t) for t in range(trials)]
    rows = []
    for trial, outcome in enumerate(outcomes):
        rows.extend(_trial_rows(outcome, trial))
    reports = {
        criterion: aggregate_reports([o.reports[criterion] for o in outcomes])
        for criterion in cfg.criteria
    }
    return ExperimentResult(config=cfg, reports=reports, rows=rows)


def _apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "code_length":
        if value < 1:
            raise ValueError(f"infeasible code length {value}")
        return replace(cfg, hasher=replace(cfg.hasher, code_length=int(value)))
    if axis == "seen_count":
        if not 0 < value < cfg.profile_count:
            raise ValueError(f"seen_count {value} infeasible for {cfg.profile_count} classes")
        return replace(cfg, seen=value / cfg.profile_count)
    if axis == "shots":
        if value < 1:
            raise ValueError(f"infeasible shot count {value}")
        return replace(cfg, shots_per_novel=int(value))
    raise ValueError(f"axis must be one of {SWEEP_AXES}")


@dataclass
class SweepResult:
    axis: str
    values: list
    results: list          # ExperimentResult per value
    aggregate_rows: list   # one row per (value, criterion)


def sweep(cfg: ExperimentConfig, axis: str, values, trials: int,
          jobs: int = 1) -> SweepResult:
    """Rerun the experiment across axis values with shared trial seeds."""
    results, agg_rows = [], []
    for value in values:
        result = run_experiment(_apply_axis(cfg, axis, value), trials, jobs)
        results.append(result)
        for criterion, report in result.reports.items():
            accs = [t["acc_all"] for t in report.per_trial]
            agg_rows.append(
                {
                    "axis": axis,
                    "value": value,
                    "criterion": criterion,
                    "acc_all_mean": report.acc_all,
                    "acc_all_std": float(np.std(accs)) if accs else math.nan,
                    "acc_seen_mean": report.acc_seen,
                    "acc_novel_mean": report.acc_novel,
                    "collision_rate_mean": report.collision_rate,
                    "trials": report.trials,
                }
            )
    return SweepResult(axis=axis, values=list(values), results=results,
                       aggregate_rows=agg_rows)
