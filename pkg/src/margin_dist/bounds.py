"""Margin-distribution generalisation bound and Rademacher upper bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class BoundInputs:
    n: int
    delta: float
    nu: float
    theta_hat: float
    sv: float
    rademacher_upper: float


@dataclass(frozen=True)
class BoundReport:
    sv_over_theta_sq: float
    discretization_term: float
    discretization_sq_term: float
    rademacher_term: float
    concentration_term: float
    total: float
    inputs: BoundInputs

    def to_dict(self) -> dict:
        return asdict(self)


def rademacher_linear(r: float, Lambda: float, n: int) -> float:
    """``r * Lambda / sqrt(n)`` for norm-bounded linear functions on a ball of radius ``r``."""
    if not (r > 0 and Lambda > 0):
        raise ValueError("radius and Lambda must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    return r * Lambda / math.sqrt(n)


def rademacher_kernel(kernel_diagonal, Lambda: float) -> float:
    diag = np.asarray(kernel_diagonal, dtype=float).ravel()
    if diag.size == 0:
        raise ValueError("kernel diagonal is empty")
    if np.any(diag < 0):
        raise ValueError("kernel diagonal must be nonnegative")
    if not Lambda > 0:
        raise ValueError("Lambda must be positive")
    return 2.0 * Lambda / diag.size * math.sqrt(float(diag.sum()))


def generalization_bound(sv: float, theta_hat: float, rademacher: float, n: int,
                         delta: float, nu: float) -> BoundReport:
    """Explicit-constant form of the semi-variance generalisation bound.

    The total is ``sv/theta^2 + (2+2nu)/(n nu^3) + 1/(n^2 nu^2)
    + (4/theta + 4/theta^2) R + 3(1+nu)^2/nu^2 * sqrt(ln(4n/delta)/(2n))``.
    It holds for classifiers whose average margin is at least ``nu``.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if nu > theta_hat:
        raise ValueError(
            f"nu={nu} exceeds the average margin {theta_hat}; the classifier is not "
            "in the relatively-good set")
    if sv < 0 or rademacher < 0:
        raise ValueError("sv and rademacher must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")

    main = sv / theta_hat**2
    disc = (2 + 2 * nu) / (n * nu**3)
    disc_sq = 1 / (n**2 * nu**2)
    rad = (4 / theta_hat + 4 / theta_hat**2) * rademacher
    conc = 3 * (1 + nu) ** 2 / nu**2 * math.sqrt(math.log(4 * n / delta) / (2 * n))
    return BoundReport(
        sv_over_theta_sq=main,
        discretization_term=disc,
        discretization_sq_term=disc_sq,
        rademacher_term=rad,
        concentration_term=conc,
        total=main + disc + disc_sq + rad + conc,
        inputs=BoundInputs(n=n, delta=delta, nu=nu, theta_hat=theta_hat, sv=sv,
                           rademacher_upper=rademacher),
    )


def default_nu(theta_hat: float) -> float:
    return min(theta_hat, 0.01)
