"""Tests for assignment-based accuracy, collision rate and report plumbing."""

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cashid.evaluation import (
    CSV_COLUMNS,
    EvalReport,
    aggregate_reports,
    collision_rate,
    evaluate,
    hungarian_accuracy,
    write_summary_json,
    write_trials_csv,
)

from oracles import brute_force_cluster_accuracy, collision_rate_reference


class TestHungarianAccuracy:
    def test_identical_labels_score_one(self):
        labels = [3, 1, 4, 1, 5, 9, 2, 6]
        assert hungarian_accuracy(labels, labels) == 1.0

    def test_bijected_labels_score_one(self):
        truths = [0, 0, 1, 1, 2, 2]
        preds = [7, 7, 5, 5, 9, 9]
        assert hungarian_accuracy(preds, truths) == 1.0

    def test_partial_overlap_hand_count(self):
        # best injective map sends prediction 0 to truth 1 (2 hits) and
        # prediction 1 to truth 0 (2 hits); prediction 2 goes unmatched
        assert hungarian_accuracy([0, 0, 1, 1, 2], [1, 1, 0, 0, 0]) == 0.8

    def test_unmatched_cluster_counts_as_errors(self):
        # three predicted clusters onto one true class: only the largest
        # cluster can match
        preds = [0, 0, 0, 1, 2]
        truths = [5, 5, 5, 5, 5]
        assert hungarian_accuracy(preds, truths) == pytest.approx(0.6)

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 25))
            preds = rng.integers(0, 5, size=n)
            truths = rng.integers(0, 5, size=n)
            assert hungarian_accuracy(preds, truths) == pytest.approx(
                brute_force_cluster_accuracy(preds, truths)
            )

    @given(
        labels=st.lists(st.integers(0, 4), min_size=1, max_size=20),
        pred_shift=st.integers(1, 50),
        true_shift=st.integers(1, 50),
    )
    @settings(max_examples=40, deadline=None)
    def test_invariant_under_label_bijections(self, labels, pred_shift, true_shift):
        rng = np.random.default_rng(0)
        preds = np.array(labels)
        truths = rng.integers(0, 4, size=len(labels))
        base = hungarian_accuracy(preds, truths)
        # a shift is a bijection of the integer label alphabet
        assert hungarian_accuracy(preds + pred_shift, truths) == pytest.approx(base)
        assert hungarian_accuracy(preds, truths + true_shift) == pytest.approx(base)

    def test_empty_input_raises(self):
        with pytest.raises(ValueError):
            hungarian_accuracy([], [])

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            hungarian_accuracy([0, 1], [0, 1, 2])


class TestCollisionRate:
    def test_pure_clusters_score_zero(self):
        assignments = [0, 0, 1, 1]
        truths = [10, 10, 20, 20]
        assert collision_rate(assignments, truths, {10}) == 0.0

    def test_singleton_clusters_score_zero(self):
        assignments = np.arange(9)
        truths = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
        assert collision_rate(assignments, truths, {0, 1}) == 0.0

    def test_mixed_cluster_hand_count(self):
        # cluster 0 holds two seen and two novel samples; six other
        # samples sit in pure clusters, so 4 of 10 samples collide
        assignments = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
        truths = [5, 5, 9, 9, 5, 5, 5, 9, 9, 9]
        assert collision_rate(assignments, truths, {5}) == pytest.approx(0.4)

    def test_everything_in_one_mixed_cluster(self):
        assignments = [7] * 6
        truths = [0, 0, 0, 1, 1, 1]
        assert collision_rate(assignments, truths, {0}) == 1.0

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            assignments = rng.integers(0, 6, size=n)
            truths = rng.integers(0, 6, size=n)
            seen = set(rng.choice(6, size=3, replace=False).tolist())
            assert collision_rate(assignments, truths, seen) == pytest.approx(
                collision_rate_reference(assignments, truths, seen)
            )

    def test_empty_input_scores_zero(self):
        assert collision_rate([], [], {0}) == 0.0


class TestEvaluate:
    def test_rejects_unknown_criterion(self, desk_run):
        with pytest.raises(ValueError):
            evaluate(desk_run.model, desk_run.split.test, "oracle", {0})

    def test_task_agnostic_report_structure(self, desk_run):
        report = evaluate(
            desk_run.model, desk_run.split.test, "task_agnostic",
            desk_run.split.seen_classes,
        )
        assert report.criterion == "task_agnostic"
        for value in (report.acc_all, report.acc_seen, report.acc_novel):
            assert 0.0 <= value <= 1.0
        assert 0.0 <= report.collision_rate <= 1.0
        assert report.confusion.sum() == len(desk_run.split.test)

    def test_task_agnostic_acc_all_is_count_weighted(self, desk_run):
        test_set = desk_run.split.test
        report = evaluate(
            desk_run.model, test_set, "task_agnostic", desk_run.split.seen_classes
        )
        truths = test_set.labels()
        n_seen = int(np.isin(truths, sorted(desk_run.split.seen_classes)).sum())
        n_novel = len(test_set) - n_seen
        combined = (report.acc_seen * n_seen + report.acc_novel * n_novel)
        assert combined / len(test_set) == pytest.approx(report.acc_all)

    def test_task_aware_report_structure(self, desk_run):
        report = evaluate(
            desk_run.model, desk_run.split.test, "task_aware",
            desk_run.split.seen_classes,
        )
        assert report.criterion == "task_aware"
        # seen and novel streams never share a table, so collisions are
        # undefined under this criterion
        assert math.isnan(report.collision_rate)
        truths = desk_run.split.test.labels()
        n_seen = int(np.isin(truths, sorted(desk_run.split.seen_classes)).sum())
        n_novel = len(truths) - n_seen
        combined = report.acc_seen * n_seen + report.acc_novel * n_novel
        assert combined / len(truths) == pytest.approx(report.acc_all)

    def test_stream_order_is_seeded(self, desk_run):
        first = evaluate(
            desk_run.model, desk_run.split.test, "task_agnostic",
            desk_run.split.seen_classes, stream_seed=3,
        )
        second = evaluate(
            desk_run.model, desk_run.split.test, "task_agnostic",
            desk_run.split.seen_classes, stream_seed=3,
        )
        assert first.metadata["stream_order"] == second.metadata["stream_order"]
        assert first.acc_all == second.acc_all

    def test_task_aware_requires_both_subsets(self, desk_run):
        all_classes = set(desk_run.split.test.labels().tolist())
        with pytest.raises(ValueError):
            evaluate(desk_run.model, desk_run.split.test, "task_aware", all_classes)

    def test_empty_test_set_raises(self, desk_run):
        empty = desk_run.split.test.subset([])
        with pytest.raises(ValueError):
            evaluate(desk_run.model, empty, "task_agnostic", {0})


def _report(acc_all, acc_seen, acc_novel, rate, criterion="task_agnostic"):
    return EvalReport(
        criterion=criterion, acc_all=acc_all, acc_seen=acc_seen,
        acc_novel=acc_novel, collision_rate=rate,
        confusion=np.zeros((2, 2), dtype=np.int64),
    )


class TestAggregateReports:
    def test_means_per_metric(self):
        merged = aggregate_reports(
            [_report(0.8, 0.9, 0.7, 0.2), _report(0.6, 0.7, 0.5, 0.4)]
        )
        assert merged.acc_all == pytest.approx(0.7)
        assert merged.acc_seen == pytest.approx(0.8)
        assert merged.acc_novel == pytest.approx(0.6)
        assert merged.collision_rate == pytest.approx(0.3)
        assert merged.trials == 2
        assert len(merged.per_trial) == 2

    def test_nan_collision_rates_stay_nan(self):
        merged = aggregate_reports(
            [
                _report(0.8, 0.9, 0.7, math.nan, "task_aware"),
                _report(0.6, 0.7, 0.5, math.nan, "task_aware"),
            ]
        )
        assert math.isnan(merged.collision_rate)
        assert merged.acc_all == pytest.approx(0.7)

    def test_mixed_criteria_raise(self):
        with pytest.raises(ValueError):
            aggregate_reports(
                [_report(0.5, 0.5, 0.5, 0.0, "task_aware"),
                 _report(0.5, 0.5, 0.5, 0.0, "task_agnostic")]
            )

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            aggregate_reports([])


class TestWriters:
    def test_trials_csv_roundtrip(self, tmp_path):
        rows = [
            {"trial": 0, "criterion": "task_agnostic", "acc_all": 0.75,
             "acc_seen": 0.9, "acc_novel": 0.6, "collision_rate": 0.1,
             "wall_seconds": 12.5, "seed": 0},
            {"trial": 1, "criterion": "task_aware", "acc_all": 0.8,
             "acc_seen": 0.95, "acc_novel": 0.65, "collision_rate": math.nan,
             "wall_seconds": 11.0, "seed": 1},
        ]
        path = write_trials_csv(rows, tmp_path / "out" / "trials.csv")
        assert path.exists()
        with path.open() as fh:
            parsed = list(csv.DictReader(fh))
        assert [tuple(parsed[0])] == [CSV_COLUMNS]
        assert len(parsed) == 2
        assert float(parsed[0]["acc_all"]) == pytest.approx(0.75)
        assert parsed[1]["criterion"] == "task_aware"

    def test_summary_json_roundtrip(self, tmp_path):
        reports = {
            "task_agnostic": aggregate_reports(
                [_report(0.8, 0.9, 0.7, 0.2), _report(0.6, 0.7, 0.5, 0.4)]
            )
        }
        path = write_summary_json(
            reports, tmp_path / "summary.json", extra={"trials": 2}
        )
        payload = json.loads(path.read_text())
        assert payload["trials"] == 2
        entry = payload["criteria"]["task_agnostic"]
        assert entry["acc_all"] == pytest.approx(0.7)
        assert len(entry["per_trial"]) == 2
