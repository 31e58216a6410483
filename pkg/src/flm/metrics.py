"""Error statistics: point-wise absolute errors aggregated over every
collocation point of every sample, per-sample spatially averaged errors for
field tasks, percentiles, and boxplot summaries.

Percentiles use inclusive linear interpolation between order statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array
from .errors import DataFormatError

PERCENTILE_LEVELS = (95, 97, 99)


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    max_ae: float
    percentiles: dict
    count: int
    split: str
    image_based: dict | None = None  # field tasks only
    boxplot: dict | None = None

    def to_json(self) -> dict:
        return {
            "mae": self.mae,
            "max_ae": self.max_ae,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
            "count": self.count,
            "split": self.split,
            "image_based": self.image_based,
            "boxplot": self.boxplot,
        }


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = as_float_array(pred, "predictions")
    t = as_float_array(truth, "truth")
    if p.shape != t.shape:
        raise DataFormatError(
            f"prediction shape {p.shape} does not match truth shape {t.shape}"
        )
    if p.size == 0:
        raise DataFormatError("empty inputs")
    return p, t


def pointwise_errors(pred, truth) -> np.ndarray:
    """|pred - truth| flattened across all samples and collocation points."""
    p, t = _pair(pred, truth)
    return np.abs(p - t).reshape(-1)


def image_based_errors(pred, truth) -> np.ndarray:
    """Per-sample spatial mean of |pred - truth|; needs (Q, N') arrays."""
    p, t = _pair(pred, truth)
    if p.ndim != 2:
        raise DataFormatError(
            "image-based errors need (samples, points) arrays; "
            f"got shape {p.shape}"
        )
    if p.shape[1] < 2:
        raise DataFormatError("image-based errors are undefined for scalar tasks")
    return np.abs(p - t).mean(axis=1)


def _percentiles(errors: np.ndarray) -> dict:
    return {
        lvl: float(np.percentile(errors, lvl, method="linear"))
        for lvl in PERCENTILE_LEVELS
    }


def boxplot_stats(errors: np.ndarray) -> dict:
    """Median, quartiles, 1.5*IQR whiskers, and the outlier count (values
    beyond the whiskers)."""
    e = as_float_array(errors, "errors").reshape(-1)
    if e.size == 0:
        raise DataFormatError("empty inputs")
    q1, med, q3 = (float(np.percentile(e, q, method="linear")) for q in (25, 50, 75))
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = e[(e >= lo_fence) & (e <= hi_fence)]
    return {
        "median": med,
        "q1": q1,
        "q3": q3,
        "whisker_low": float(inside.min()) if inside.size else med,
        "whisker_high": float(inside.max()) if inside.size else med,
        "outliers": int(((e < lo_fence) | (e > hi_fence)).sum()),
    }


def summarize(pred, truth, split: str) -> MetricsReport:
    """Full report; image_based statistics are included when the outputs are
    fields (more than one value per sample)."""
    p, t = _pair(pred, truth)
    point = np.abs(p - t).reshape(-1)
    image_based = None
    if p.ndim == 2 and p.shape[1] >= 2:
        per_sample = image_based_errors(p, t)
        image_based = {
            "mae": float(per_sample.mean()),
            "max": float(per_sample.max()),
            "percentiles": {str(k): v for k, v in _percentiles(per_sample).items()},
        }
    return MetricsReport(
        mae=float(point.mean()),
        max_ae=float(point.max()),
        percentiles=_percentiles(point),
        count=int(p.shape[0]) if p.ndim >= 1 else 1,
        split=split,
        image_based=image_based,
        boxplot=boxplot_stats(point),
    )


def report_to_csv_rows(report: MetricsReport) -> list[tuple[str, str, float]]:
    """Flat (split, metric, value) rows for spreadsheet import."""
    rows = [
        (report.split, "mae", report.mae),
        (report.split, "max_ae", report.max_ae),
    ]
    for lvl, val in report.percentiles.items():
        rows.append((report.split, f"p{lvl}", val))
    if report.image_based:
        rows.append((report.split, "image_mae", report.image_based["mae"]))
        rows.append((report.split, "image_max", report.image_based["max"]))
        for lvl, val in report.image_based["percentiles"].items():
            rows.append((report.split, f"image_p{lvl}", val))
    for key, val in (report.boxplot or {}).items():
        rows.append((report.split, f"box_{key}", float(val)))
    rows.append((report.split, "count", float(report.count)))
    return rows
