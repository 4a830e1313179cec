"""Splits, metrics, expert comparison, and report artifacts."""

import csv
import itertools

import numpy as np
import pytest

from deauville.errors import UndefinedKappaError, ValidationError
from deauville.evaluation import (
    EXPERT_HEADER,
    FoldResult,
    MetricSummary,
    aggregate,
    accuracy,
    compare_expert,
    confusion_filename,
    confusion_matrix,
    fold_result,
    make_splits,
    read_expert_file,
    render_accuracy_chart,
    simulate_expert_review,
    split_sizes,
    weighted_kappa,
    weighted_kappa_labels,
    write_confusion_csv,
    write_expert_csv,
    write_results_csv,
)


def ids(n):
    return [f"e{i:05d}" for i in range(n)]


# --- splits -------------------------------------------------------------------


def test_split_sizes_floor_floor_remainder():
    assert split_sizes(1664, (0.8, 0.1, 0.1)) == (1331, 166, 167)
    assert split_sizes(10, (0.8, 0.1, 0.1)) == (8, 1, 1)


def test_fractions_must_sum_to_one():
    with pytest.raises(ValidationError):
        split_sizes(100, (0.7, 0.1, 0.1))
    with pytest.raises(ValidationError):
        make_splits(ids(50), fractions=(0.5, 0.5, 0.1))


def test_seven_iterations_disjoint_and_exhaustive():
    exam_ids = ids(1664)
    plans = make_splits(exam_ids, n_iterations=7, seed=4)
    assert [p.iteration for p in plans] == [1, 2, 3, 4, 5, 6, 7]
    for plan in plans:
        assert (len(plan.train_ids), len(plan.val_ids), len(plan.test_ids)) == (
            1331, 166, 167,
        )
        parts = set(plan.train_ids) | set(plan.val_ids) | set(plan.test_ids)
        assert parts == set(exam_ids)
        assert not set(plan.train_ids) & set(plan.test_ids)
        assert not set(plan.train_ids) & set(plan.val_ids)
        assert not set(plan.val_ids) & set(plan.test_ids)


def test_splits_deterministic_and_seed_sensitive():
    a = make_splits(ids(100), n_iterations=3, seed=9)
    b = make_splits(ids(100), n_iterations=3, seed=9)
    c = make_splits(ids(100), n_iterations=3, seed=10)
    assert [p.test_ids for p in a] == [p.test_ids for p in b]
    assert [p.test_ids for p in a] != [p.test_ids for p in c]
    # iterations differ from each other
    assert a[0].test_ids != a[1].test_ids


def test_splits_need_ten_ids():
    with pytest.raises(ValidationError):
        make_splits(ids(9))
    with pytest.raises(ValidationError):
        make_splits(ids(20) + ["e00000"])  # duplicate


def test_stratified_splits_balance_classes():
    exam_ids = ids(200)
    labels = {x: (i % 5) + 1 for i, x in enumerate(exam_ids)}
    plans = make_splits(exam_ids, n_iterations=2, seed=0, stratify_labels=labels)
    for plan in plans:
        assert (len(plan.train_ids), len(plan.val_ids), len(plan.test_ids)) == (160, 20, 20)
        test_counts = {}
        for x in plan.test_ids:
            test_counts[labels[x]] = test_counts.get(labels[x], 0) + 1
        assert set(test_counts.values()) == {4}   # 20 test ids over 5 equal classes


# --- kappa ---------------------------------------------------------------------


def brute_force_kappa(confusion, weighting):
    """Independent re-derivation straight from the definition."""
    confusion = np.asarray(confusion, dtype=float)
    n = confusion.sum()
    k = confusion.shape[0]
    if weighting == "linear":
        w = np.array([[abs(i - j) for j in range(k)] for i in range(k)], dtype=float)
    else:
        w = np.array([[(i - j) ** 2 for j in range(k)] for i in range(k)], dtype=float)
    observed = confusion / n
    row = confusion.sum(axis=1) / n
    col = confusion.sum(axis=0) / n
    expected = np.outer(row, col)
    denom = (w * expected).sum()
    if denom == 0:
        raise ZeroDivisionError
    return 1.0 - (w * observed).sum() / denom


@pytest.mark.parametrize("weighting", ["linear", "quadratic"])
def test_kappa_matches_brute_force(weighting):
    rng = np.random.default_rng(12)
    for _ in range(200):
        confusion = rng.integers(0, 30, size=(5, 5)).astype(float)
        if confusion.sum() == 0:
            continue
        try:
            want = brute_force_kappa(confusion, weighting)
        except ZeroDivisionError:
            with pytest.raises(UndefinedKappaError):
                weighted_kappa(confusion, weighting)
            continue
        got = weighted_kappa(confusion, weighting)
        assert abs(got - want) <= 1e-12


@pytest.mark.parametrize("weighting", ["linear", "quadratic"])
def test_diagonal_confusion_gives_exactly_one(weighting):
    confusion = np.diag([5.0, 1.0, 7.0, 3.0, 2.0])
    assert weighted_kappa(confusion, weighting) == 1.0


def test_degenerate_confusion_is_undefined():
    confusion = np.zeros((5, 5))
    confusion[2, 2] = 10.0   # single class on both axes
    with pytest.raises(UndefinedKappaError):
        weighted_kappa(confusion, "linear")


def test_kappa_input_validation():
    with pytest.raises(ValidationError):
        weighted_kappa(np.zeros((4, 4)), "linear")
    with pytest.raises(ValidationError):
        weighted_kappa(np.full((5, 5), -1.0), "linear")
    with pytest.raises(ValidationError):
        weighted_kappa(np.ones((5, 5)), "cubic")


def test_kappa_from_labels():
    y_true = [1, 2, 3, 4, 5, 1, 2]
    y_pred = [1, 2, 3, 4, 5, 2, 2]
    got = weighted_kappa_labels(y_true, y_pred, "linear")
    want = brute_force_kappa(confusion_matrix(y_true, y_pred), "linear")
    assert abs(got - want) <= 1e-12


# --- fold results ----------------------------------------------------------------


def test_fold_result_invariants():
    truths = [1, 2, 3, 4, 5, 5, 4]
    preds = [1, 2, 3, 4, 5, 4, 4]
    fr = fold_result(1, ids(7), truths, preds)
    assert fr.confusion.sum() == 7
    assert fr.accuracy == pytest.approx(6 / 7, abs=1e-12)
    assert fr.kappa("linear") == fr.kappa_w
    with pytest.raises(ValidationError):
        FoldResult(
            iteration=1, exam_ids=tuple(ids(7)), truths=tuple(truths),
            preds=tuple(preds), accuracy=0.5,   # wrong accuracy
            kappa_w=fr.kappa_w, confusion=fr.confusion,
        )


def test_aggregate_needs_two_folds():
    truths = [1, 2, 3, 4, 5]
    fr = fold_result(1, ids(5), truths, truths)
    with pytest.raises(ValidationError):
        aggregate([fr], "m")


def test_aggregate_means_and_sd():
    a = fold_result(1, ids(5), [1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
    b = fold_result(2, ids(5), [1, 2, 3, 4, 5], [1, 2, 3, 4, 4])
    summary = aggregate([a, b], "demo", "linear")
    assert summary.acc_mean == pytest.approx((1.0 + 0.8) / 2)
    assert summary.acc_sd == pytest.approx(np.std([1.0, 0.8], ddof=1))
    assert summary.model_name == "demo"
    assert len(summary.folds) == 2


def test_accuracy_and_confusion_validate_labels():
    with pytest.raises(ValidationError):
        accuracy([1, 2], [1, 6])
    with pytest.raises(ValidationError):
        confusion_matrix([0, 1], [1, 1])
    assert accuracy([1, 2, 3], [1, 2, 5]) == pytest.approx(2 / 3)


# --- expert review -----------------------------------------------------------------


def truths_for(n=80):
    rng = np.random.default_rng(3)
    return {x: int(rng.integers(1, 6)) for x in ids(n)}


def test_simulated_review_is_deterministic():
    truths = truths_for()
    a = simulate_expert_review(truths, n_cases=30, seed=2)
    b = simulate_expert_review(truths, n_cases=30, seed=2)
    assert a.exam_ids == b.exam_ids
    assert a.y_pred == b.y_pred
    assert len(a.exam_ids) == 30


def test_simulated_review_tracks_agreement_rate():
    truths = truths_for(600)
    review = simulate_expert_review(truths, n_cases=500, agreement_rate=0.66, seed=0)
    agree = sum(p == t for p, t in zip(review.y_pred, review.y_true)) / 500
    assert 0.56 < agree < 0.76
    # disagreements cluster near the truth on the ordinal scale
    dist = [abs(p - t) for p, t in zip(review.y_pred, review.y_true) if p != t]
    assert np.mean(dist) < 2.0


def test_expert_csv_round_trip(tmp_path):
    rows = [("e1", 3), ("e2", 5)]
    path = tmp_path / "expert.csv"
    write_expert_csv(rows, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(EXPERT_HEADER)
    assert read_expert_file(path) == rows


def test_expert_file_validation(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("exam_id,predicted_ds\ne1,9\n")
    with pytest.raises(ValidationError, match="line 2"):
        read_expert_file(bad)
    bad.write_text("exam_id,wrong\ne1,3\n")
    with pytest.raises(ValidationError):
        read_expert_file(bad)


def test_compare_expert(tmp_path):
    truths = {"e1": 3, "e2": 5, "e3": 1}
    path = tmp_path / "expert.csv"
    write_expert_csv([("e1", 3), ("e2", 4), ("e3", 1)], path)
    comp = compare_expert(path, truths)
    assert comp.n_cases == 3
    assert comp.accuracy == pytest.approx(2 / 3)
    assert comp.confusion.sum() == 3
    write_expert_csv([("e1", 3), ("zz", 4)], path)
    with pytest.raises(ValidationError, match="zz"):
        compare_expert(path, truths)


# --- reporting ---------------------------------------------------------------------


def two_fold_summaries():
    out = []
    rng = np.random.default_rng(5)
    for name in ("alpha", "beta"):
        folds = []
        for it in (1, 2, 3):
            truths = rng.integers(1, 6, size=40).tolist()
            preds = [
                t if rng.random() < 0.7 else int(rng.integers(1, 6)) for t in truths
            ]
            folds.append(fold_result(it, ids(40), truths, preds))
        out.append(aggregate(folds, name, "linear"))
        out.append(aggregate(folds, name, "quadratic"))
    return out


def test_results_csv_schema(tmp_path):
    summaries = two_fold_summaries()
    path = tmp_path / "results.csv"
    write_results_csv(summaries, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [
        "model", "weighting", "acc_mean", "acc_sd", "kappa_mean",
        "acc_fold_1", "acc_fold_2", "acc_fold_3",
        "kappa_fold_1", "kappa_fold_2", "kappa_fold_3",
    ]
    assert len(rows) == 1 + 4   # two models x two weightings
    names = [r[0] for r in rows[1:]]
    assert names == sorted(names)
    for row in rows[1:]:
        for cell in row[2:]:
            float(cell)
            assert len(cell.split(".")[1]) == 6   # fixed 6dp formatting


def test_confusion_csv(tmp_path):
    fr = fold_result(2, ids(5), [1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
    name = confusion_filename("alpha", 2)
    assert name == "confusion_alpha_2.csv"
    write_confusion_csv(fr.confusion, tmp_path / name)
    rows = list(csv.reader(open(tmp_path / name, newline="")))
    assert len(rows) == 6
    assert rows[1][1] == "1"


def test_chart_renders_one_bar_per_model(tmp_path):
    summaries = [s for s in two_fold_summaries() if s.weighting == "linear"]
    path = tmp_path / "chart.svg"
    render_accuracy_chart(summaries, path)
    svg = path.read_text()
    assert 'id="bar-alpha"' in svg
    assert 'id="bar-beta"' in svg
    assert "LineCollection" in svg or "errorbar" in svg   # SD whiskers present


def test_chart_is_byte_deterministic(tmp_path):
    summaries = [s for s in two_fold_summaries() if s.weighting == "linear"]
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_accuracy_chart(summaries, a)
    render_accuracy_chart(summaries, b)
    assert a.read_bytes() == b.read_bytes()
