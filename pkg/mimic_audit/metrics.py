"""Confusion matrix, the eight detection metrics, ROC, AUC and EER.

"faked" is the positive class throughout.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, DomainError, EmptyInputError, StratificationError, UndefinedMetricError
from .schema import Label

LabelLike = Union[Label, str, int]

METRIC_NAMES: Tuple[str, ...] = (
    "sensitivity",
    "specificity",
    "fall_out",
    "miss_rate",
    "precision",
    "accuracy",
    "balanced_accuracy",
    "f1",
)

REPORT_DECIMALS = 3

METRIC_LABELS: Dict[str, str] = {
    "sensitivity": "Sensitivity (TPR)",
    "specificity": "Specificity (TNR)",
    "fall_out": "Fall-out (FPR)",
    "miss_rate": "Miss rate (FNR)",
    "precision": "Precision (PPV)",
    "accuracy": "Accuracy",
    "balanced_accuracy": "Balanced accuracy",
    "f1": "F1 score",
}


def _is_faked(value: LabelLike) -> bool:
    if isinstance(value, Label):
        return value is Label.FAKED
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return Label.from_index(int(value)) is Label.FAKED
    try:
        return Label(str(value).strip().lower()) is Label.FAKED
    except ValueError as e:
        raise DomainError(f"not a class label: {value!r}") from e


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if int(getattr(self, name)) < 0:
                raise DomainError(f"confusion count {name} must be non-negative")
            object.__setattr__(self, name, int(getattr(self, name)))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(labels: Sequence[LabelLike], predictions: Sequence[LabelLike]) -> ConfusionMatrix:
    if len(labels) != len(predictions):
        raise DimensionError(f"{len(labels)} labels but {len(predictions)} predictions")
    if not len(labels):
        raise EmptyInputError("confusion matrix needs at least one sample")
    tp = fp = fn = tn = 0
    for truth, guess in zip(labels, predictions):
        t, g = _is_faked(truth), _is_faked(guess)
        if t and g:
            tp += 1
        elif g:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def confusion_layout(cm: ConfusionMatrix) -> List[List[int]]:
    """[[TP, FP], [FN, TN]], the layout used in printed reports."""
    return [[cm.tp, cm.fp], [cm.fn, cm.tn]]


@dataclass(frozen=True)
class MetricsReport:
    sensitivity: float
    specificity: float
    fall_out: float
    miss_rate: float
    precision: float
    accuracy: float
    balanced_accuracy: float
    f1: float
    confusion: ConfusionMatrix

    def as_dict(self, rounded: bool = False) -> Dict[str, float]:
        values = {name: float(getattr(self, name)) for name in METRIC_NAMES}
        if rounded:
            return {k: round(v, REPORT_DECIMALS) for k, v in values.items()}
        return values


def _ratio(num: int, den: int, metric: str) -> float:
    if den == 0:
        raise UndefinedMetricError(metric)
    return num / den


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    tpr = _ratio(cm.tp, cm.tp + cm.fn, "sensitivity")
    tnr = _ratio(cm.tn, cm.tn + cm.fp, "specificity")
    ppv = _ratio(cm.tp, cm.tp + cm.fp, "precision")
    if ppv + tpr == 0.0:
        raise UndefinedMetricError("f1")
    return MetricsReport(
        sensitivity=tpr,
        specificity=tnr,
        fall_out=cm.fp / (cm.fp + cm.tn),
        miss_rate=cm.fn / (cm.fn + cm.tp),
        precision=ppv,
        accuracy=(cm.tp + cm.tn) / cm.total,
        balanced_accuracy=(tpr + tnr) / 2.0,
        f1=2.0 * ppv * tpr / (ppv + tpr),
        confusion=cm,
    )


@dataclass(frozen=True)
class RocCurve:
    points: np.ndarray  # [k x 2] (fpr, tpr), threshold descending
    thresholds: np.ndarray  # thresholds[0] = inf for the (0,0) anchor
    auc: float
    eer: float

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]


def _curve_points(scores: np.ndarray, positive: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-scores, kind="stable")
    s, pos = scores[order], positive[order]
    tps = np.cumsum(pos)
    fps = np.cumsum(~pos)
    # Last index of each run of equal scores: tied samples move as one step.
    last = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    n_pos, n_neg = tps[-1], fps[-1]
    fpr = np.r_[0.0, fps[last] / n_neg]
    tpr = np.r_[0.0, tps[last] / n_pos]
    thresholds = np.r_[np.inf, s[last]]
    return np.column_stack([fpr, tpr]), thresholds


def auc(curve: Union[RocCurve, np.ndarray]) -> float:
    """Trapezoidal area under the (fpr, tpr) polyline."""
    pts = curve.points if isinstance(curve, RocCurve) else np.asarray(curve, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def eer(curve: Union[RocCurve, np.ndarray]) -> float:
    """Rate where fpr = 1 - tpr, linearly interpolated between adjacent curve points."""
    pts = curve.points if isinstance(curve, RocCurve) else np.asarray(curve, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    gap = (1.0 - y) - x  # 1 at the (0,0) anchor, -1 at (1,1)
    for i in range(len(gap) - 1):
        if gap[i] == 0.0:
            return float(x[i])
        if gap[i] > 0.0 >= gap[i + 1]:
            a = gap[i] / (gap[i] - gap[i + 1])
            return float(x[i] + a * (x[i + 1] - x[i]))
    return float(x[-1])


def roc_curve(scores: Sequence[float], labels: Sequence[LabelLike]) -> RocCurve:
    """Sweep every distinct score as a threshold (predict faked when score >= t)."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.size != len(labels):
        raise DimensionError(f"{s.size} scores but {len(labels)} labels")
    if not np.all(np.isfinite(s)):
        raise DomainError("ROC scores must be finite")
    positive = np.array([_is_faked(v) for v in labels], dtype=bool)
    if positive.all() or not positive.any():
        raise StratificationError("ROC needs both real and faked samples")
    points, thresholds = _curve_points(s, positive)
    return RocCurve(points=points, thresholds=thresholds, auc=auc(points), eer=eer(points))


def build_report(cm: ConfusionMatrix, curve: RocCurve) -> Dict[str, object]:
    """Machine-readable evaluation document, full precision."""
    return {
        "confusion": cm.as_dict(),
        "metrics": compute_metrics(cm).as_dict(),
        "auc": curve.auc,
        "eer": curve.eer,
    }


def misclassified(filenames: Sequence[str], labels: Sequence[LabelLike], predictions: Sequence[LabelLike]) -> List[str]:
    if not len(filenames) == len(labels) == len(predictions):
        raise DimensionError("filenames, labels and predictions differ in length")
    return [name for name, t, g in zip(filenames, labels, predictions) if _is_faked(t) != _is_faked(g)]
