import numpy as np
import pytest

from mimic_audit.errors import DimensionError, DomainError, EmptyInputError, StratificationError, UndefinedMetricError
from mimic_audit.metrics import (
    METRIC_NAMES,
    ConfusionMatrix,
    auc,
    build_report,
    compute_metrics,
    confusion,
    confusion_layout,
    eer,
    misclassified,
    roc_curve,
)
from mimic_audit.schema import Label


def pairwise_auc(scores, positive):
    pos, neg = scores[positive], scores[~positive]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (pos.size * neg.size)


def test_confusion_counts_each_cell():
    cm = confusion(["faked", "real", "faked", "real", "faked"], ["faked", "faked", "real", "real", "faked"])
    assert cm == ConfusionMatrix(tp=2, fp=1, fn=1, tn=1)
    assert cm.total == 5
    assert confusion_layout(cm) == [[2, 1], [1, 1]]


def test_confusion_accepts_labels_and_indices():
    assert confusion([Label.FAKED, Label.REAL], [1, 0]) == ConfusionMatrix(1, 0, 0, 1)
    assert confusion([" Faked", "REAL"], [Label.REAL, Label.FAKED]) == ConfusionMatrix(0, 1, 1, 0)


def test_confusion_errors():
    with pytest.raises(DimensionError):
        confusion(["real"], ["real", "faked"])
    with pytest.raises(EmptyInputError):
        confusion([], [])
    with pytest.raises(DomainError):
        confusion(["maybe"], ["real"])
    with pytest.raises(DomainError):
        ConfusionMatrix(-1, 0, 0, 0)


# Published three-decimal rows for the four reference matrices (tp, fp, fn, tn).
# The published F1 cells of the last two read 0.925 and 0.976, which the counts do
# not produce (2 tp / (2 tp + fp + fn) gives 0.976 and 0.943); those two use the
# values recomputed from the counts.
PUBLISHED_ROWS = [
    ((372, 13, 4, 357), dict(sensitivity=0.989, specificity=0.965, fall_out=0.035, miss_rate=0.011,
                             precision=0.966, accuracy=0.977, balanced_accuracy=0.977, f1=0.977)),
    ((85, 9, 2, 91), dict(sensitivity=0.977, specificity=0.910, fall_out=0.090, miss_rate=0.023,
                          precision=0.904, accuracy=0.941, balanced_accuracy=0.944, f1=0.939)),
    ((450, 13, 9, 429), dict(sensitivity=0.980, specificity=0.971, fall_out=0.029, miss_rate=0.020,
                             precision=0.972, accuracy=0.976, balanced_accuracy=0.976, f1=0.976)),
    ((108, 10, 3, 105), dict(sensitivity=0.973, specificity=0.913, fall_out=0.087, miss_rate=0.027,
                             precision=0.915, accuracy=0.942, balanced_accuracy=0.943, f1=0.943)),
]


@pytest.mark.parametrize("cells,expected", PUBLISHED_ROWS)
def test_metrics_match_published_rows(cells, expected):
    report = compute_metrics(ConfusionMatrix(*cells))
    assert set(expected) == set(METRIC_NAMES)
    for name, value in expected.items():
        assert getattr(report, name) == pytest.approx(value, abs=1e-3), name


@pytest.mark.parametrize("cells,expected", [
    ((372, 13, 4, 357), {"sensitivity": 0.98936, "specificity": 0.96486, "precision": 0.96623,
                         "accuracy": 0.97721, "balanced_accuracy": 0.97711, "f1": 0.97766}),
    ((85, 9, 2, 91), {"accuracy": 0.94118, "f1": 0.93923, "precision": 0.90426, "specificity": 0.91,
                      "sensitivity": 0.97701, "balanced_accuracy": 0.94351}),
    ((450, 13, 9, 429), {"accuracy": 0.97558, "f1": 0.97614, "sensitivity": 0.98039,
                         "specificity": 0.97059, "precision": 0.97192}),
    ((108, 10, 3, 105), {"accuracy": 0.94248, "f1": 0.94323, "sensitivity": 0.97297,
                         "specificity": 0.91304, "precision": 0.91525}),
])
def test_metric_values(cells, expected):
    report = compute_metrics(ConfusionMatrix(*cells))
    for name, value in expected.items():
        assert getattr(report, name) == pytest.approx(value, abs=1e-5)
    assert report.fall_out == pytest.approx(1.0 - report.specificity)
    assert report.miss_rate == pytest.approx(1.0 - report.sensitivity)


def test_rounded_report():
    report = compute_metrics(ConfusionMatrix(372, 13, 4, 357)).as_dict(rounded=True)
    assert list(report) == list(METRIC_NAMES)
    assert report["accuracy"] == 0.977
    assert report["sensitivity"] == 0.989


@pytest.mark.parametrize("cells,metric", [
    ((0, 3, 0, 5), "sensitivity"),
    ((3, 0, 2, 0), "specificity"),
    ((0, 0, 5, 5), "precision"),
    ((0, 3, 5, 5), "f1"),
])
def test_undefined_metrics(cells, metric):
    with pytest.raises(UndefinedMetricError) as err:
        compute_metrics(ConfusionMatrix(*cells))
    assert err.value.metric == metric
    assert err.value.exit_code == 4


def test_perfect_ranking():
    curve = roc_curve([0.9, 0.8, 0.7, 0.6], ["faked", "faked", "real", "real"])
    assert curve.auc == 1.0
    assert curve.eer == 0.0
    assert curve.thresholds[0] == np.inf
    assert curve.points[0].tolist() == [0.0, 0.0]
    assert curve.points[-1].tolist() == [1.0, 1.0]


def test_reversed_ranking():
    curve = roc_curve([0.1, 0.2, 0.8, 0.9], ["faked", "faked", "real", "real"])
    assert curve.auc == 0.0
    assert curve.eer == 1.0


def test_all_tied_scores():
    curve = roc_curve([0.5] * 6, [1, 0, 1, 0, 1, 0])
    assert curve.points.tolist() == [[0.0, 0.0], [1.0, 1.0]]
    assert curve.auc == pytest.approx(0.5)
    assert curve.eer == pytest.approx(0.5)


def test_alternating_labels():
    curve = roc_curve([0.9, 0.8, 0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0, 1, 0])
    assert curve.auc == pytest.approx(2.0 / 3.0)
    assert curve.eer == pytest.approx(1.0 / 3.0)
    assert len(curve.thresholds) == 7


def test_eer_is_interpolated_between_points():
    curve = roc_curve([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 1])
    assert curve.eer == pytest.approx(0.25)


def test_curve_is_monotone(rng):
    curve = roc_curve(rng.random(200), rng.integers(0, 2, 200))
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert np.all(np.diff(curve.thresholds) < 0)


def test_auc_matches_pairwise_probability(rng):
    for _ in range(100):
        n = int(rng.integers(4, 60))
        scores = np.round(rng.random(n), 1)
        positive = rng.random(n) < 0.5
        positive[:2] = [True, False]
        curve = roc_curve(scores, positive.astype(int))
        assert curve.auc == pytest.approx(pairwise_auc(scores, positive), abs=1e-12)


def test_mirrored_problem_keeps_eer_and_auc(rng):
    scores = rng.normal(size=80)
    labels = np.r_[np.ones(40, dtype=int), np.zeros(40, dtype=int)]
    scores[:40] += 1.0
    curve = roc_curve(scores, labels)
    mirrored = roc_curve(-scores, 1 - labels)
    assert mirrored.eer == pytest.approx(curve.eer, abs=1e-12)
    assert mirrored.auc == pytest.approx(curve.auc, abs=1e-12)


def test_monotone_rescaling_leaves_curve_unchanged(rng):
    scores = rng.random(50)
    labels = rng.integers(0, 2, 50)
    labels[:2] = [0, 1]
    a = roc_curve(scores, labels)
    b = roc_curve(3.0 * scores + 1.0, labels)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.auc == b.auc and a.eer == b.eer


def test_auc_and_eer_accept_raw_points():
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert auc(pts) == 1.0
    assert eer(pts) == 0.0


def test_roc_errors():
    with pytest.raises(DimensionError):
        roc_curve([0.1, 0.2], [1])
    with pytest.raises(DomainError):
        roc_curve([0.1, np.nan], [1, 0])
    with pytest.raises(StratificationError):
        roc_curve([0.1, 0.2], ["real", "real"])


def test_build_report():
    cm = ConfusionMatrix(3, 1, 1, 3)
    curve = roc_curve([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 1])
    report = build_report(cm, curve)
    assert set(report) == {"confusion", "metrics", "auc", "eer"}
    assert report["confusion"] == {"tp": 3, "fp": 1, "fn": 1, "tn": 3}
    assert report["metrics"]["accuracy"] == 0.75
    assert report["auc"] == curve.auc


def test_misclassified():
    names = ["0001r.wav", "0002f.wav", "0003f.wav"]
    assert misclassified(names, ["real", "faked", "faked"], ["faked", "faked", "real"]) == ["0001r.wav", "0003f.wav"]
    with pytest.raises(DimensionError):
        misclassified(names, ["real"], ["real"])
