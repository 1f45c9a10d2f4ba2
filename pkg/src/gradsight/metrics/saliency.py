"""
gradsight.metrics.saliency
~~~~~~~~~~~~~~~~~~~~~~~~~~
Saliency evaluation: thresholded PR / ROC samples and the scalar metrics
Fm, Pmax, mean-PR, AUC, MAE, RMSE and CE. Only pixels flagged by the
ValidMask are counted; everything else is never read.

Conventions:
  - thresholds t_k = k / (levels - 1), k = 0 .. levels - 1
  - M = (S >= t_k)
  - P = 1 when M is empty
  - curve integrals use the trapezoid rule after sorting the abscissa,
    duplicate abscissae keep the largest ordinate
"""

import concurrent.futures
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..errors import DegenerateGroundTruthError, DimensionMismatchError, FieldValidationError
from ..models import GroundTruth, MetricReport, PRCurve, ScalarField, ValidMask

DEFAULT_LEVELS = 256
FAST_LEVELS = 51
DEFAULT_BETA_SQUARED = 0.3
CE_EPSILON = 1e-7


def _masked_pixels(
    s: ScalarField, g: GroundTruth, mask: Optional[ValidMask]
) -> Tuple[np.ndarray, np.ndarray]:
    if s.shape != g.shape:
        raise DimensionMismatchError(f"Saliency map {s.shape} and ground truth {g.shape} differ in size")
    if mask is None:
        return s.values.ravel(), g.mask.ravel()
    if mask.shape != s.shape:
        raise DimensionMismatchError(f"Valid mask {mask.shape} and saliency map {s.shape} differ in size")
    if mask.count == 0:
        raise FieldValidationError("Valid mask selects no pixel")
    return s.values[mask.flags], g.mask[mask.flags]


def _check_unit_range(values: np.ndarray) -> None:
    if values.min() < 0.0 or values.max() > 1.0:
        raise FieldValidationError(
            f"Saliency values must lie in [0, 1], got [{values.min():.4g}, {values.max():.4g}]"
        )


def threshold_grid(levels: int) -> np.ndarray:
    if levels < 2:
        raise FieldValidationError(f"A PR curve needs at least 2 threshold levels, got {levels}")
    return np.arange(levels) / (levels - 1)


def pr_curve(
    s: ScalarField,
    g: GroundTruth,
    mask: Optional[ValidMask] = None,
    levels: int = DEFAULT_LEVELS,
) -> PRCurve:
    sv, gv = _masked_pixels(s, g, mask)
    _check_unit_range(sv)

    n_pos = int(np.count_nonzero(gv))
    n_neg = gv.size - n_pos
    if n_pos == 0 or n_neg == 0:
        kind = "all-negative" if n_pos == 0 else "all-positive"
        raise DegenerateGroundTruthError(f"Ground truth is {kind} under the mask; recall or false-positive rate undefined")

    thresholds = threshold_grid(levels)

    # |{S >= t}| をソート済み配列の二分探索で数える
    all_sorted = np.sort(sv)
    pos_sorted = np.sort(sv[gv])
    predicted = all_sorted.size - np.searchsorted(all_sorted, thresholds, side="left")
    true_pos = pos_sorted.size - np.searchsorted(pos_sorted, thresholds, side="left")
    false_pos = predicted - true_pos

    safe = np.maximum(predicted, 1)
    precision = np.where(predicted > 0, true_pos / safe, 1.0)
    recall = true_pos / n_pos
    fpr = false_pos / n_neg

    return PRCurve(
        thresholds=thresholds,
        precision=precision,
        recall=recall,
        false_positive_rate=fpr,
        predicted=predicted,
    )


def _check_curve(curve: PRCurve) -> None:
    if curve.levels == 0:
        raise FieldValidationError("Empty PR curve")


def f_measure(curve: PRCurve, beta_squared: float = DEFAULT_BETA_SQUARED) -> float:
    """max over thresholds of (1 + β²)PR / (β²P + R); thresholds with β²P + R = 0 are skipped."""
    _check_curve(curve)
    p, r = curve.precision, curve.recall
    denom = beta_squared * p + r
    valid = denom > 0
    if not np.any(valid):
        return 0.0
    scores = (1.0 + beta_squared) * p[valid] * r[valid] / denom[valid]
    return float(scores.max())


def max_precision(curve: PRCurve) -> float:
    """Largest precision over thresholds whose binary mask is non-empty."""
    _check_curve(curve)
    populated = curve.predicted > 0
    if not np.any(populated):
        return 1.0
    return float(curve.precision[populated].max())


def _trapezoid_merged(x: np.ndarray, y: np.ndarray) -> float:
    xs, inverse = np.unique(x, return_inverse=True)
    ys = np.full(xs.size, -np.inf)
    np.maximum.at(ys, inverse, y)
    if xs.size == 1:
        return float(ys[0])
    return float(np.trapezoid(ys, xs))


def mean_pr(curve: PRCurve) -> float:
    """Area under precision plotted against recall."""
    _check_curve(curve)
    return _trapezoid_merged(curve.recall, curve.precision)


def auc(curve: PRCurve) -> float:
    """Area under recall plotted against the false-positive rate."""
    _check_curve(curve)
    return _trapezoid_merged(curve.false_positive_rate, curve.recall)


def mae(s: ScalarField, g: GroundTruth, mask: Optional[ValidMask] = None) -> float:
    sv, gv = _masked_pixels(s, g, mask)
    return float(np.mean(np.abs(sv - gv)))


def rmse(s: ScalarField, g: GroundTruth, mask: Optional[ValidMask] = None) -> float:
    sv, gv = _masked_pixels(s, g, mask)
    return float(np.sqrt(np.mean((sv - gv) ** 2)))


def cross_entropy(
    s: ScalarField,
    g: GroundTruth,
    mask: Optional[ValidMask] = None,
    epsilon: float = CE_EPSILON,
) -> float:
    sv, gv = _masked_pixels(s, g, mask)
    _check_unit_range(sv)
    clamped = np.clip(sv, epsilon, 1.0 - epsilon)
    terms = np.where(gv, np.log(clamped), np.log(1.0 - clamped))
    return float(-np.mean(terms))


def evaluate_all(
    s: ScalarField,
    g: GroundTruth,
    mask: Optional[ValidMask] = None,
    levels: int = DEFAULT_LEVELS,
    beta_squared: float = DEFAULT_BETA_SQUARED,
    epsilon: float = CE_EPSILON,
    name: Optional[str] = None,
) -> MetricReport:
    curve = pr_curve(s, g, mask, levels)
    return MetricReport(
        name=name,
        f_measure=f_measure(curve, beta_squared),
        max_precision=max_precision(curve),
        mean_pr=mean_pr(curve),
        auc=auc(curve),
        mae=mae(s, g, mask),
        rmse=rmse(s, g, mask),
        cross_entropy=cross_entropy(s, g, mask, epsilon),
        beta_squared=beta_squared,
    )


def average_reports(reports: Sequence[MetricReport], name: str = "mean") -> MetricReport:
    """Field-wise mean, summed in the given order."""
    if not reports:
        raise FieldValidationError("No reports to average")
    count = len(reports)

    def _avg(attr: str) -> float:
        total = 0.0
        for r in reports:
            total += getattr(r, attr)
        return total / count

    return MetricReport(
        name=name,
        f_measure=_avg("f_measure"),
        max_precision=_avg("max_precision"),
        mean_pr=_avg("mean_pr"),
        auc=_avg("auc"),
        mae=_avg("mae"),
        rmse=_avg("rmse"),
        cross_entropy=_avg("cross_entropy"),
        beta_squared=reports[0].beta_squared,
    )


def evaluate_batch(
    items: Sequence[Tuple[str, ScalarField, GroundTruth, Optional[ValidMask]]],
    levels: int = DEFAULT_LEVELS,
    beta_squared: float = DEFAULT_BETA_SQUARED,
    epsilon: float = CE_EPSILON,
    workers: int = 1,
) -> Tuple[List[MetricReport], MetricReport]:
    """
    Evaluate (name, s, g, mask) items. Per-item reports come back sorted by
    name, followed by their average.
    """
    ordered = sorted(items, key=lambda item: item[0])

    def _run(item) -> MetricReport:
        name, s, g, mask = item
        return evaluate_all(s, g, mask, levels, beta_squared, epsilon, name=name)

    if workers > 1 and len(ordered) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(_run, ordered))
    else:
        reports = [_run(item) for item in ordered]

    logger.debug(f"Evaluated {len(reports)} map(s) at {levels} levels")
    return reports, average_reports(reports)
