"""Hungarian-matched accuracy, seen/novel breakdowns and collision rate."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .online import HashTable, encode_batch
from .signals import SignalDataset

CRITERIA = ("task_aware", "task_agnostic")

CSV_COLUMNS = (
    "trial", "criterion", "acc_all", "acc_seen", "acc_novel",
    "collision_rate", "wall_seconds", "seed",
)


@dataclass(frozen=True)
class EvalReport:
    """Identification accuracies for one evaluation pass or an aggregate.

    acc_all always comes from the joint assignment (task_agnostic) or
    the count-weighted correct fraction (task_aware), never from
    averaging acc_seen and acc_novel.  collision_rate is NaN under
    task_aware, where seen and novel streams never share a table.
    """

    criterion: str
    acc_all: float
    acc_seen: float
    acc_novel: float
    collision_rate: float
    confusion: np.ndarray
    trials: int = 1
    per_trial: tuple = ()
    metadata: dict = field(default_factory=dict)


def _contingency(preds: np.ndarray, truths: np.ndarray):
    pred_values, pred_idx = np.unique(preds, return_inverse=True)
    true_values, true_idx = np.unique(truths, return_inverse=True)
    matrix = np.zeros((len(pred_values), len(true_values)), dtype=np.int64)
    np.add.at(matrix, (pred_idx, true_idx), 1)
    return matrix, pred_values, true_values


def _best_assignment(preds: np.ndarray, truths: np.ndarray):
    """Optimal injective map of predicted labels onto true labels.

    Returns (matched_count, mapping) where mapping sends each predicted
    label to a true label or None when the cluster went unmatched
    (its samples all count as errors).
    """
    matrix, pred_values, true_values = _contingency(preds, truths)
    size = max(matrix.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: matrix.shape[0], : matrix.shape[1]] = matrix
    rows, cols = linear_sum_assignment(padded, maximize=True)
    matched = int(padded[rows, cols].sum())
    mapping = {}
    for r, c in zip(rows, cols):
        if r < len(pred_values):
            mapping[pred_values[r]] = true_values[c] if c < len(true_values) else None
    return matched, mapping


def hungarian_accuracy(preds, truths) -> float:
    """Best achievable accuracy over injective relabelings of the
    predicted clusters; invariant to bijections of either label set."""
    preds = np.asarray(preds)
    truths = np.asarray(truths)
    if preds.size == 0 or truths.size == 0:
        raise ValueError("empty input")
    if preds.shape != truths.shape:
        raise ValueError("preds and truths must have equal length")
    matched, _ = _best_assignment(preds, truths)
    return matched / preds.size


def collision_rate(assignments, truths, seen_set) -> float:
    """Fraction of samples in clusters mixing seen and novel ground truth.

    A cluster is mixed when it contains at least one sample whose true
    class is seen and one whose true class is novel; every sample in a
    mixed cluster counts toward the rate.
    """
    assignments = np.asarray(assignments)
    truths = np.asarray(truths)
    if assignments.size == 0:
        return 0.0
    seen_truth = np.isin(truths, sorted(seen_set))
    mixed = 0
    for label in np.unique(assignments):
        members = assignments == label
        statuses = seen_truth[members]
        if statuses.any() and (~statuses).any():
            mixed += int(members.sum())
    return mixed / assignments.size


def _accuracy_breakdown(preds, truths, seen_classes):
    """Joint assignment accuracies: (acc_all, acc_seen, acc_novel, confusion)."""
    matched, mapping = _best_assignment(preds, truths)
    mapped = np.array([mapping.get(p, None) is not None and mapping[p] == t
                       for p, t in zip(preds, truths)])
    acc_all = float(mapped.mean())
    seen_mask = np.isin(truths, sorted(seen_classes))
    acc_seen = float(mapped[seen_mask].mean()) if seen_mask.any() else math.nan
    acc_novel = float(mapped[~seen_mask].mean()) if (~seen_mask).any() else math.nan
    confusion, _, _ = _contingency(preds, truths)
    return acc_all, acc_seen, acc_novel, confusion


def evaluate(model, test_set: SignalDataset, criterion: str, seen_classes,
             stream_seed: int = 0) -> EvalReport:
    """Stream the test set through the online pipeline and score it.

    task_agnostic: one stream, one hash table, one joint matching;
    seen and novel accuracies are read off that joint assignment.
    task_aware: the seen and novel subsets are streamed through
    independent tables and matched independently (both must be
    nonempty); acc_all is the count-weighted correct fraction.
    The stream order is a seeded shuffle recorded in the metadata.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    if len(test_set) == 0:
        raise ValueError("test set is empty")
    truths = test_set.labels()
    seen_classes = frozenset(seen_classes)
    rng = np.random.default_rng(stream_seed)

    if criterion == "task_agnostic":
        order = rng.permutation(len(test_set))
        codes = encode_batch(model, [test_set[i] for i in order])
        table = HashTable()
        preds = np.array([table.identify(c) for c in codes])
        streamed_truths = truths[order]
        acc_all, acc_seen, acc_novel, confusion = _accuracy_breakdown(
            preds, streamed_truths, seen_classes
        )
        rate = collision_rate(preds, streamed_truths, seen_classes)
        metadata = {"stream_seed": stream_seed, "stream_order": order.tolist(),
                    "table_size": len(table)}
        return EvalReport(criterion, acc_all, acc_seen, acc_novel, rate,
                          confusion, metadata=metadata)

    seen_idx = np.flatnonzero(np.isin(truths, sorted(seen_classes)))
    novel_idx = np.flatnonzero(~np.isin(truths, sorted(seen_classes)))
    if seen_idx.size == 0 or novel_idx.size == 0:
        raise ValueError("task_aware needs nonempty seen and novel subsets")
    parts = {}
    orders = {}
    for name, idx in (("seen", seen_idx), ("novel", novel_idx)):
        order = idx[rng.permutation(idx.size)]
        codes = encode_batch(model, [test_set[i] for i in order])
        table = HashTable()
        preds = np.array([table.identify(c) for c in codes])
        matched, _ = _best_assignment(preds, truths[order])
        confusion, _, _ = _contingency(preds, truths[order])
        parts[name] = (matched, idx.size, confusion)
        orders[name] = order.tolist()
    acc_seen = parts["seen"][0] / parts["seen"][1]
    acc_novel = parts["novel"][0] / parts["novel"][1]
    acc_all = (parts["seen"][0] + parts["novel"][0]) / len(test_set)
    seen_conf, novel_conf = parts["seen"][2], parts["novel"][2]
    confusion = np.zeros(
        (seen_conf.shape[0] + novel_conf.shape[0],
         seen_conf.shape[1] + novel_conf.shape[1]), dtype=np.int64
    )
    confusion[: seen_conf.shape[0], : seen_conf.shape[1]] = seen_conf
    confusion[seen_conf.shape[0] :, seen_conf.shape[1] :] = novel_conf
    metadata = {"stream_seed": stream_seed, "stream_order": orders}
    return EvalReport(criterion, float(acc_all), float(acc_seen),
                      float(acc_novel), math.nan, confusion, metadata=metadata)


def aggregate_reports(reports) -> EvalReport:
    """Mean metrics over per-trial reports of one criterion."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to aggregate")
    criteria = {r.criterion for r in reports}
    if len(criteria) > 1:
        raise ValueError("cannot aggregate across criteria")
    shapes = {r.confusion.shape for r in reports}
    if len(shapes) == 1:
        confusion = np.sum([r.confusion for r in reports], axis=0)
    else:
        confusion = reports[0].confusion
    per_trial = tuple(
        {"trial": i, "acc_all": r.acc_all, "acc_seen": r.acc_seen,
         "acc_novel": r.acc_novel, "collision_rate": r.collision_rate}
        for i, r in enumerate(reports)
    )

    def mean(values):
        values = [v for v in values if not math.isnan(v)]
        return float(np.mean(values)) if values else math.nan

    return EvalReport(
        criterion=criteria.pop(),
        acc_all=mean([r.acc_all for r in reports]),
        acc_seen=mean([r.acc_seen for r in reports]),
        acc_novel=mean([r.acc_novel for r in reports]),
        collision_rate=mean([r.collision_rate for r in reports]),
        confusion=confusion,
        trials=len(reports),
        per_trial=per_trial,
    )


def write_trials_csv(rows, path) -> Path:
    """One CSV row per (trial, criterion) with the standard columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row.get(key) for key in CSV_COLUMNS})
    return path


def write_summary_json(reports: dict, path, extra: dict = None) -> Path:
    """JSON summary of aggregated reports keyed by criterion."""
    payload = {"criteria": {}}
    if extra:
        payload.update(extra)
    for name, report in reports.items():
        payload["criteria"][name] = {
            "acc_all": report.acc_all,
            "acc_seen": report.acc_seen,
            "acc_novel": report.acc_novel,
            "collision_rate": report.collision_rate,
            "trials": report.trials,
            "per_trial": list(report.per_trial),
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, allow_nan=True))
    return path
