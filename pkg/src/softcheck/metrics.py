"""Detection metrics: threshold calibration, FNR99, error correlation.

The detector is a single threshold on the per-sample checksum error,
calibrated on validation data so that a target fraction (default 99%)
of in-distribution samples falls at or below it. FNR99 is then the
fraction of true OOD samples the threshold fails to flag.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .checksum import ChecksumSpec, checksum_batch
from .data import LabeledDataset
from .errors import ConfigError, DataError, NumericError
from .network import ModelParams, forward, normalize_targets

DEFAULT_TN_RATE = 0.99

SCATTER_COLUMNS = ("checksum_error", "prediction_error", "partition")


def per_sample_errors(params: ModelParams, data: LabeledDataset, spec: ChecksumSpec) -> np.ndarray:
    """Per-row (checksum_error, prediction_error), shape (N, 2).

    Both errors live in normalized target space: checksum_error is
    (C(y_hat) - c_hat)^2 and prediction_error is the per-sample mean
    squared prediction error.
    """
    y_hat, c_hat = forward(params, data.inputs)
    y = normalize_targets(params, data.targets)
    cs_err = (checksum_batch(spec, y_hat) - c_hat) ** 2
    pred_err = np.mean((y - y_hat) ** 2, axis=1)
    return np.column_stack([cs_err, pred_err])


def calibrate_threshold(validation_errors, tn_rate: float = DEFAULT_TN_RATE) -> float:
    """Nearest-rank upper quantile of the validation checksum errors.

    Returns the smallest listed error value with at least a tn_rate
    fraction of the list at or below it.
    """
    tn_rate = float(tn_rate)
    if not 0.0 < tn_rate <= 1.0:
        raise ConfigError(f"tn_rate must be in (0, 1], got {tn_rate!r}")
    errors = np.asarray(validation_errors, dtype=np.float64)
    if errors.ndim != 1 or errors.size == 0:
        raise DataError(f"need a non-empty 1-D error list, got shape {errors.shape}")
    if not np.all(np.isfinite(errors)):
        raise NumericError("validation errors contain non-finite values")
    n = errors.size
    # smallest rank m with m/n >= tn_rate; the ceil result is nudged
    # because e.g. ceil(0.9 * 10) is 10 in floating point
    m = min(n, max(1, math.ceil(tn_rate * n)))
    while m > 1 and (m - 1) / n >= tn_rate:
        m -= 1
    while m < n and m / n < tn_rate:
        m += 1
    return float(np.sort(errors)[m - 1])


def flag(checksum_error: float, threshold: float) -> str:
    """Trust label for one sample: 'id' at or below threshold, else 'ood'."""
    return "id" if checksum_error <= threshold else "ood"


def fnr99(ood_errors, threshold: float) -> float:
    """Fraction of OOD checksum errors the threshold fails to flag."""
    errors = np.asarray(ood_errors, dtype=np.float64)
    if errors.ndim != 1 or errors.size == 0:
        raise DataError(f"need a non-empty 1-D error list, got shape {errors.shape}")
    return float(np.mean(errors <= threshold))


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"need matching 1-D sequences, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DataError(f"need at least 2 points, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0.0 or not np.isfinite(denom):
        raise NumericError("correlation undefined: an input is constant or overflows")
    return float(np.sum(dx * dy) / denom)


@dataclass
class EvalReport:
    """Detection quality of one model against one validation/OOD pair."""

    threshold: float
    tn_rate_achieved: float
    fnr99: float
    pearson_r: float
    n_validation: int
    n_ood: int
    scatter: list

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "tn_rate_achieved": self.tn_rate_achieved,
            "fnr99": self.fnr99,
            "pearson_r": self.pearson_r,
            "n_validation": self.n_validation,
            "n_ood": self.n_ood,
        }


def evaluate(
    params: ModelParams,
    validation: LabeledDataset,
    ood: LabeledDataset,
    spec: ChecksumSpec,
    tn_rate: float = DEFAULT_TN_RATE,
) -> EvalReport:
    """Calibrate on validation rows, score detection on OOD rows."""
    val_errors = per_sample_errors(params, validation, spec)
    ood_errors = per_sample_errors(params, ood, spec)
    threshold = calibrate_threshold(val_errors[:, 0], tn_rate)
    achieved = float(np.mean(val_errors[:, 0] <= threshold))
    rate = fnr99(ood_errors[:, 0], threshold)
    r = pearson(ood_errors[:, 0], ood_errors[:, 1])
    scatter = []
    for row, tag in ((val_errors, "validation"), (ood_errors, "ood")):
        for ce, pe in row:
            scatter.append((float(ce), float(pe), tag))
    return EvalReport(
        threshold=threshold,
        tn_rate_achieved=achieved,
        fnr99=rate,
        pearson_r=r,
        n_validation=validation.n,
        n_ood=ood.n,
        scatter=scatter,
    )


def save_report(report: EvalReport, path) -> None:
    """Write the scalar report fields as JSON (scatter goes to CSV)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(report.to_dict(), indent=2, allow_nan=False))
        fh.write("\n")


def save_scatter(report: EvalReport, path) -> None:
    """Write per-sample (checksum_error, prediction_error, partition) rows."""
    lines = [",".join(SCATTER_COLUMNS)]
    for ce, pe, tag in report.scatter:
        lines.append(f"{ce!r},{pe!r},{tag}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
