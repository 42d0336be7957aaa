"""Empirical margin statistics and the cumulative margin curve."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MarginStats:
    margins: np.ndarray
    theta_hat: float
    semi_variance: float
    objective: float | None

    @classmethod
    def from_margins(cls, margins) -> "MarginStats":
        margins = _as_margins(margins)
        theta = empirical_average_margin(margins)
        sv = empirical_semi_variance(margins, theta)
        obj = sv / theta**2 if theta > 0 else None
        return cls(margins, theta, sv, obj)


def _as_margins(margins) -> np.ndarray:
    margins = np.asarray(margins, dtype=float).ravel()
    if margins.size == 0:
        raise ValueError("margin vector is empty")
    return margins


def empirical_average_margin(margins) -> float:
    margins = _as_margins(margins)
    if not np.all(np.isfinite(margins)):
        raise ValueError("margins must be finite")
    return float(np.mean(margins))


def empirical_semi_variance(margins, theta_hat: float) -> float:
    """Mean squared shortfall below ``theta_hat``; margins above it count zero."""
    margins = _as_margins(margins)
    shortfall = np.maximum(theta_hat - margins, 0.0)
    return float(np.mean(shortfall**2))


def squared_margin_loss(margin, theta: float):
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    # (theta - m)_+ / theta rather than 1 - m / theta: same value, and it rounds
    # exactly like the semi-variance shortfall
    loss = (np.maximum(theta - np.asarray(margin, dtype=float), 0.0) / theta) ** 2
    return float(loss) if loss.ndim == 0 else loss


def objective(margins) -> float:
    """Semi-variance over squared average margin.

    Raises ``ValueError`` when the average margin is not positive; solvers
    flip the model sign before that can happen.
    """
    margins = _as_margins(margins)
    theta = empirical_average_margin(margins)
    if theta <= 0:
        raise ValueError(f"average margin {theta} is not positive")
    return empirical_semi_variance(margins, theta) / theta**2


def cumulative_margin_curve(margins) -> list[tuple[float, float]]:
    margins = np.sort(_as_margins(margins))
    n = margins.size
    values, counts = np.unique(margins, return_counts=True)
    freq = np.cumsum(counts) / n
    return [(float(v), float(f)) for v, f in zip(values, freq)]


def curve_to_csv(curve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["margin", "cumulative_frequency"])
    for m, f in curve:
        writer.writerow([f"{m:.17g}", f"{f:.17g}"])
    return buf.getvalue()
