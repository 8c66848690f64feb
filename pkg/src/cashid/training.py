"""Two-step training, the few-shot schedule and the vanilla-hash ablation."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from .encoder import extract_embedding, instance_contrastive_loss, signals_to_tensor, supcon_loss
from .hasher import hash_regularizer, hasher_loss, soft_hash, vanilla_hash_loss
from .identifier import calibrate_threshold, classification_loss, margin_loss
from .model import CashModel
from .signals import SignalDataset, random_slice


class TrainingDiverged(RuntimeError):
    """Raised when an objective goes NaN/Inf during training."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimization schedule and loss weights for the two-step procedure.

    alpha weighs the identifier loss inside step 1; beta weighs the
    hash regularizer inside step 2.  Step 1 runs adam_epochs of Adam
    then sgd_epochs of plain SGD; step 2 reuses that structure unless
    the step2_* overrides are set.  batch_size counts signals per
    batch; every signal contributes two random slices, so the loss
    sees twice as many views.  fsl_mode forces alpha to 0.
    """

    alpha: float = 0.1
    beta: float = 100.0
    temperature: float = 1.0
    batch_size: int = 128
    adam_epochs: int = 500
    adam_lr: float = 1e-3
    sgd_epochs: int = 100
    sgd_lr: float = 1e-4
    step2_adam_epochs: Optional[int] = None
    step2_sgd_epochs: Optional[int] = None
    freeze_encoder: bool = True
    fsl_mode: bool = False
    fsl_pretrain_epochs: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.fsl_mode and self.alpha != 0.0:
            object.__setattr__(self, "alpha", 0.0)
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        epochs = (
            self.adam_epochs, self.sgd_epochs,
            self.step2_adam_epochs or 0, self.step2_sgd_epochs or 0,
            self.fsl_pretrain_epochs,
        )
        if min(epochs) < 0:
            raise ValueError("epoch counts must be >= 0")
        if min(self.adam_lr, self.sgd_lr) <= 0:
            raise ValueError("learning rates must be > 0")

    @classmethod
    def adsb(cls) -> "TrainConfig":
        return cls(alpha=0.1, beta=100.0)

    @classmethod
    def oracle(cls) -> "TrainConfig":
        return cls(alpha=1e-4, beta=15000.0)

    @classmethod
    def fsl(cls, beta: float = 100.0) -> "TrainConfig":
        """Few-shot finetune schedule: one Adam phase, small batches."""
        return cls(
            alpha=0.0, beta=beta, batch_size=10,
            adam_epochs=300, sgd_epochs=0, fsl_mode=True,
        )


def class_paired_batches(labels: np.ndarray, batch_size: int,
                         rng: np.random.Generator) -> list:
    """Batches of signal indices built from same-class pairs.

    Every represented class appears at least twice per batch, so each
    view always finds a positive.  A class holding a single signal
    pairs that signal with itself; an odd signal out re-pairs with a
    random already-used classmate.
    """
    pairs = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        if len(idx) == 1:
            pairs.append((int(idx[0]), int(idx[0])))
            continue
        if len(idx) % 2 == 1:
            partner = int(idx[rng.integers(0, len(idx) - 1)])
            idx = np.append(idx, partner)
        for k in range(0, len(idx), 2):
            pairs.append((int(idx[k]), int(idx[k + 1])))
    order = rng.permutation(len(pairs))
    per_batch = max(batch_size // 2, 1)
    batches = []
    for start in range(0, len(pairs), per_batch):
        chunk = [pairs[i] for i in order[start : start + per_batch]]
        batches.append([i for pair in chunk for i in pair])
    return batches


def two_view_batch(dataset: SignalDataset, indices, length: int,
                   rng: np.random.Generator, dtype):
    """Slice every chosen signal twice; returns (views tensor, labels tensor)."""
    first = [random_slice(dataset[i], length, rng) for i in indices]
    second = [random_slice(dataset[i], length, rng) for i in indices]
    views = signals_to_tensor(first + second, length, dtype)
    labels = torch.as_tensor(
        [dataset[i].emitter_id for i in indices] * 2, dtype=torch.long
    )
    return views, labels


def _phases(adam_epochs, adam_lr, sgd_epochs, sgd_lr):
    phases = []
    if adam_epochs > 0:
        phases.append(("adam", torch.optim.Adam, adam_lr, adam_epochs))
    if sgd_epochs > 0:
        phases.append(("sgd", torch.optim.SGD, sgd_lr, sgd_epochs))
    return phases


def _check_finite(value: float, phase: str, epoch: int):
    if not np.isfinite(value):
        raise TrainingDiverged(f"{phase} diverged at epoch {epoch}: loss={value}")


def _log_row(log, **row):
    if log is not None:
        log.append(row)


def calibrate_model(train_set: SignalDataset, model: CashModel,
                    cfg: TrainConfig) -> None:
    """Set the novelty threshold from two fresh slices of every train signal."""
    if model.points is None:
        return
    rng = np.random.default_rng(cfg.seed + 2)
    model.eval_mode()
    chunks = []
    indices = list(range(len(train_set)))
    with torch.no_grad():
        for start in range(0, len(indices), 128):
            batch = indices[start : start + 128]
            views, _ = two_view_batch(train_set, batch, model.input_length, rng, model.dtype)
            chunks.append(model.projector(extract_embedding(model.encoder, views)))
        z = torch.cat(chunks)
    model.identifier_state = calibrate_threshold(
        z, model.points, model.identifier_cfg.gamma
    )


def train_step1(train_set: SignalDataset, model: CashModel, cfg: TrainConfig,
                log: Optional[list] = None) -> None:
    """Joint encoder + identifier training, then threshold calibration.

    Minimizes the encoder contrastive loss plus alpha times the
    identifier loss.  With alpha = 0 (or a no-identifier model) the
    identifier term is skipped entirely, so the encoder follows the
    exact same trajectory as training on the contrastive loss alone.
    """
    if len(train_set) == 0:
        raise ValueError("train set is empty")
    rng = np.random.default_rng(cfg.seed + 1)
    labels_np = train_set.labels()
    use_identifier = model.points is not None and cfg.alpha > 0

    params = list(model.encoder.parameters()) + list(model.enhancer.parameters())
    if use_identifier:
        params += list(model.projector.parameters()) + list(model.points.parameters())

    start_time = time.perf_counter()
    for phase_name, opt_cls, lr, epochs in _phases(
        cfg.adam_epochs, cfg.adam_lr, cfg.sgd_epochs, cfg.sgd_lr
    ):
        optimizer = opt_cls(params, lr=lr)
        for epoch in range(epochs):
            model.train_mode()
            totals = np.zeros(3)
            batches = class_paired_batches(labels_np, cfg.batch_size, rng)
            for indices in batches:
                views, view_labels = two_view_batch(
                    train_set, indices, model.input_length, rng, model.dtype
                )
                e = extract_embedding(model.encoder, views)
                enc_loss = supcon_loss(model.enhancer(e), view_labels, cfg.temperature)
                if use_identifier:
                    z = model.projector(e)
                    targets = torch.as_tensor(
                        [model.class_to_index[int(c)] for c in view_labels.tolist()],
                        dtype=torch.long,
                    )
                    ident = classification_loss(z, targets, model.points)
                    ident = ident + model.identifier_cfg.margin_weight * margin_loss(
                        z, targets, model.points
                    )
                    loss = enc_loss + cfg.alpha * ident
                else:
                    ident = torch.zeros(())
                    loss = enc_loss
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                if use_identifier:
                    with torch.no_grad():
                        model.points.radius.clamp_(min=0.0)
                totals += [enc_loss.item(), ident.item(), loss.item()]
            means = totals / max(len(batches), 1)
            _check_finite(means[2], f"step1/{phase_name}", epoch)
            _log_row(
                log, phase="step1", optimizer=phase_name, epoch=epoch,
                encoder_loss=means[0], identifier_loss=means[1], loss=means[2],
                wall_seconds=round(time.perf_counter() - start_time, 3),
            )
    calibrate_model(train_set, model, cfg)


def train_step2(train_set: SignalDataset, model: CashModel, cfg: TrainConfig,
                log: Optional[list] = None) -> None:
    """Hasher training on top of the (normally frozen) encoder.

    Full models minimize the hash contrastive loss plus beta times the
    binary + similarity regularizer; vanilla (no-identifier) models
    train the sign projector with the contrastive loss alone.
    """
    if len(train_set) == 0:
        raise ValueError("train set is empty")
    rng = np.random.default_rng(cfg.seed + 3)
    labels_np = train_set.labels()
    vanilla = model.hasher.confidence_head is None

    params = list(model.hasher.parameters())
    if not cfg.freeze_encoder:
        params += list(model.encoder.parameters())

    adam_epochs = cfg.step2_adam_epochs if cfg.step2_adam_epochs is not None else cfg.adam_epochs
    sgd_epochs = cfg.step2_sgd_epochs if cfg.step2_sgd_epochs is not None else cfg.sgd_epochs

    start_time = time.perf_counter()
    for phase_name, opt_cls, lr, epochs in _phases(
        adam_epochs, cfg.adam_lr, sgd_epochs, cfg.sgd_lr
    ):
        optimizer = opt_cls(params, lr=lr)
        for epoch in range(epochs):
            model.hasher.train()
            if cfg.freeze_encoder:
                model.encoder.eval()
            else:
                model.encoder.train()
            totals = np.zeros(4)
            batches = class_paired_batches(labels_np, cfg.batch_size, rng)
            for indices in batches:
                views, view_labels = two_view_batch(
                    train_set, indices, model.input_length, rng, model.dtype
                )
                if cfg.freeze_encoder:
                    with torch.no_grad():
                        e = extract_embedding(model.encoder, views)
                else:
                    e = extract_embedding(model.encoder, views)
                if vanilla:
                    hash_loss = vanilla_hash_loss(
                        model.hasher, e, view_labels, cfg.temperature
                    )
                    c_bin = c_sim = torch.zeros(())
                    loss = hash_loss
                else:
                    soft = soft_hash(model.hasher, e)
                    hash_loss = hasher_loss(soft, view_labels, cfg.temperature)
                    c_bin, c_sim = hash_regularizer(soft, view_labels, cfg.temperature)
                    loss = hash_loss + cfg.beta * (c_bin + c_sim)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                totals += [hash_loss.item(), c_bin.item(), c_sim.item(), loss.item()]
            means = totals / max(len(batches), 1)
            _check_finite(means[3], f"step2/{phase_name}", epoch)
            _log_row(
                log, phase="step2", optimizer=phase_name, epoch=epoch,
                hasher_loss=means[0], binary_penalty=means[1],
                similarity_penalty=means[2], loss=means[3],
                wall_seconds=round(time.perf_counter() - start_time, 3),
            )


def pretrain_fsl(pretrain_set: SignalDataset, model: CashModel, cfg: TrainConfig,
                 log: Optional[list] = None) -> None:
    """Self-supervised encoder pretraining: two views per signal, the
    other view is the only positive.  Ignores labels entirely."""
    if len(pretrain_set) < 2:
        raise ValueError("pretraining needs at least two signals")
    rng = np.random.default_rng(cfg.seed + 4)
    params = list(model.encoder.parameters()) + list(model.enhancer.parameters())
    optimizer = torch.optim.Adam(params, lr=cfg.adam_lr)
    start_time = time.perf_counter()
    for epoch in range(cfg.fsl_pretrain_epochs):
        model.train_mode()
        order = rng.permutation(len(pretrain_set))
        total, count = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            indices = order[start : start + cfg.batch_size]
            if len(indices) < 2:
                continue
            first = [random_slice(pretrain_set[i], model.input_length, rng) for i in indices]
            second = [random_slice(pretrain_set[i], model.input_length, rng) for i in indices]
            views = signals_to_tensor(first + second, model.input_length, model.dtype)
            ids = torch.as_tensor(list(range(len(indices))) * 2, dtype=torch.long)
            features = model.enhancer(extract_embedding(model.encoder, views))
            loss = instance_contrastive_loss(features, ids, cfg.temperature)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item()
            count += 1
        mean = total / max(count, 1)
        _check_finite(mean, "pretrain", epoch)
        _log_row(
            log, phase="pretrain", optimizer="adam", epoch=epoch, loss=mean,
            wall_seconds=round(time.perf_counter() - start_time, 3),
        )


def finetune_fsl(shots_set: SignalDataset, model: CashModel, cfg: TrainConfig,
                 log: Optional[list] = None) -> None:
    """Few-shot finetuning: the two-step procedure with alpha forced to 0.

    Every test sample later receives the same constant indicator, so
    the identifier plays no role.
    """
    if not cfg.fsl_mode:
        raise ValueError("finetune_fsl requires fsl_mode")
    train_step1(shots_set, model, cfg, log)
    train_step2(shots_set, model, cfg, log)
    model.constant_indicator = -1
    model.identifier_state = None


def train_model(train_set: SignalDataset, model: CashModel, cfg: TrainConfig,
                log_path=None) -> list:
    """Run the full two-step procedure; returns the training log rows."""
    log: list = []
    if cfg.fsl_mode:
        finetune_fsl(train_set, model, cfg, log)
    else:
        train_step1(train_set, model, cfg, log)
        train_step2(train_set, model, cfg, log)
    if log_path is not None:
        write_training_log(log, log_path)
    return log


def write_training_log(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path
