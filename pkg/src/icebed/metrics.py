"""Column-wise error statistics between a predicted and a reference surface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Surface
from .errors import DimMismatch

DEFAULT_KS = (1, 5)


@dataclass(frozen=True)
class MetricsReport:
    mean_error: float
    median_mean_error: float
    precision_at: dict
    per_slice: np.ndarray

    def to_dict(self):
        return {
            "mean_error_px": self.mean_error,
            "median_mean_error_px": self.median_mean_error,
            "precision_at": {str(k): v for k, v in self.precision_at.items()},
            "per_slice_mean_error_px": [float(v) for v in self.per_slice],
        }


def evaluate(pred, gt, ks=DEFAULT_KS) -> MetricsReport:
    """Compare ``pred`` to ``gt``.

    ``median_mean_error`` is the median over slices of each slice's mean
    absolute error; ``precision_at[k]`` is the fraction of pixels with
    ``|pred - gt| <= k``.
    """
    p = np.asarray(pred.labels if isinstance(pred, Surface) else pred, dtype=np.int64)
    g = np.asarray(gt.labels if isinstance(gt, Surface) else gt, dtype=np.int64)
    if p.shape != g.shape:
        raise DimMismatch(f"prediction {p.shape} vs ground truth {g.shape}")
    err = np.abs(p - g)
    per_slice = err.mean(axis=1)
    return MetricsReport(
        mean_error=float(err.mean()),
        median_mean_error=float(np.median(per_slice)),
        precision_at={int(k): float(np.mean(err <= k)) for k in sorted(ks)},
        per_slice=per_slice,
    )


def format_table(reports: dict) -> str:
    """Plain-text table, one row per named report: error columns then precision columns."""
    ks = sorted({k for r in reports.values() for k in r.precision_at})
    w = max([16] + [len(str(n)) + 2 for n in reports])
    head = f"{'':<{w}}{'Mean':>10}{'Median Mean':>14}" + "".join(f"{f'{k} px':>10}" for k in ks)
    lines = [f"{'':<{w}}{'Error (px)':^24}{'Precision':^{10 * len(ks)}}", head, "-" * len(head)]
    for name, r in reports.items():
        row = f"{name:<{w}}{r.mean_error:>10.2f}{r.median_mean_error:>14.2f}"
        row += "".join(f"{100 * r.precision_at.get(k, float('nan')):>9.1f}%" for k in ks)
        lines.append(row)
    return "\n".join(lines) + "\n"
