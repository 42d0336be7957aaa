"""Alternating semi-variance / average-margin optimisation for linear models.

Each iteration freezes the set of instances whose margin falls below the
current average, solves the proximal least-squares problem on that set in
closed form, takes a closed-form proximal ascent step on the average margin
and projects back to the unit sphere. The inverse of the system matrix
``I + sum_{i in A} x_i x_i^T / (n beta)`` is carried between iterations and
patched with rank-one updates as instances enter and leave the active set.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Dataset, LinearModel

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when an iterate becomes non-finite or degenerate."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class DegenerateInitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters shared by the linear and kernel solvers.

    Parameters
    ----------
    T : int
        Number of iterations; the solver always runs all of them unless
        ``tol`` is set.
    alpha : float
        Proximal weight of the average-margin step.
    beta : float
        Proximal weight of the semi-variance step.
    sm_denominator_floor : float
        Sherman-Morrison removals with a smaller denominator in absolute
        value fall back to direct inversion.
    tol : float or None
        Optional early stop on ``||w_k - w_{k-1}||``. Off by default.
    """

    T: int = 100
    alpha: float = 1.0
    beta: float = 1.0
    sm_denominator_floor: float = 1e-12
    tol: Optional[float] = None

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.sm_denominator_floor > 0:
            raise ValueError("sm_denominator_floor must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive when given")


@dataclass
class SolverState:
    w: np.ndarray
    M: np.ndarray
    active_set: np.ndarray
    iteration: int
    theta_hat: float = float("nan")
    inverse_stats: "InverseUpdateStats" = field(default_factory=lambda: InverseUpdateStats())


@dataclass
class InverseUpdateStats:
    """Counts of rank-one updates and direct re-inversions."""

    rank_one: int = 0
    direct: int = 0


def init_w0(data: Dataset) -> np.ndarray:
    """Unit vector maximising the empirical average margin."""
    s = data.y @ data.X
    norm = np.linalg.norm(s)
    if norm == 0.0 or not np.isfinite(norm):
        warnings.warn(
            "labelled feature sum is zero; initialising with the first basis vector",
            DegenerateInitWarning, stacklevel=2)
        w = np.zeros(data.d)
        w[0] = 1.0
        return w
    return s / norm


def active_set(data: Dataset, w: np.ndarray, theta_hat: float) -> np.ndarray:
    margins = data.y * (data.X @ w)
    return np.flatnonzero(margins < theta_hat)


def _sm_update(M: np.ndarray, x: np.ndarray, n_beta: float, sign: int) -> tuple[np.ndarray, float]:
    Mx = M @ x
    denom = x @ Mx + sign * n_beta
    return M - np.outer(Mx, Mx) / denom, denom


def direct_inverse(X_active: np.ndarray, n_beta: float, base: Optional[np.ndarray] = None) -> np.ndarray:
    """``(base + X_active^T X_active / n_beta)^-1``; ``base`` defaults to I."""
    d = X_active.shape[1]
    A = np.eye(d) if base is None else base.copy()
    A += X_active.T @ X_active / n_beta
    return np.linalg.solve(A, np.eye(d))


def update_inverse(M_prev: np.ndarray, removed: np.ndarray, added: np.ndarray,
                   n_beta: float, *, sm_denominator_floor: float = 1e-12,
                   recompute: Optional[Callable[[], np.ndarray]] = None,
                   stats: Optional[InverseUpdateStats] = None) -> np.ndarray:
    """Sherman-Morrison maintenance of the semi-variance system inverse.

    ``removed`` and ``added`` are arrays of instance rows (not indices).
    Removals are applied before additions. If a removal denominator is
    smaller than ``sm_denominator_floor`` the incremental path is abandoned
    and ``recompute()`` supplies the exact inverse for the new active set.
    """
    M = np.array(M_prev, dtype=float, copy=True)
    removed = np.asarray(removed, dtype=float).reshape(-1, M.shape[0])
    added = np.asarray(added, dtype=float).reshape(-1, M.shape[0])
    for x in removed:
        M_next, denom = _sm_update(M, x, n_beta, -1)
        if abs(denom) < sm_denominator_floor:
            if recompute is None:
                raise SolverError(
                    f"Sherman-Morrison removal denominator {denom:.3e} below floor "
                    "and no direct recompute available")
            logger.debug("SM removal denominator %.3e below floor, inverting directly", denom)
            if stats is not None:
                stats.direct += 1
            return recompute()
        M = M_next
    for x in added:
        M, _ = _sm_update(M, x, n_beta, +1)
    if stats is not None:
        stats.rank_one += len(removed) + len(added)
    return (M + M.T) / 2


def semivariance_step(data: Dataset, w_prev: np.ndarray, theta_hat: float,
                      M: np.ndarray, A: np.ndarray, beta: float) -> np.ndarray:
    """Closed-form minimiser of the frozen-active-set proximal problem."""
    if len(A) == 0:
        return np.array(w_prev, dtype=float, copy=True)
    n_beta = data.n * beta
    rhs = theta_hat / n_beta * (data.y[A] @ data.X[A]) + w_prev
    return M @ rhs


def average_margin_step(w_sv: np.ndarray, data: Dataset, alpha: float) -> np.ndarray:
    return w_sv + (data.y @ data.X) / (2.0 * alpha * data.n)


def _check_finite(v: np.ndarray, what: str, k: int) -> None:
    if not np.all(np.isfinite(v)):
        raise SolverError(f"non-finite {what}", iteration=k)


def train_linear(data: Dataset, config: SolverConfig = SolverConfig(), *,
                 callback: Optional[Callable[[SolverState], None]] = None) -> LinearModel:
    """Run the alternating solver for ``config.T`` iterations.

    ``callback`` receives the solver state at the end of every iteration
    (after normalisation and the sign safeguard).
    """
    n, d = data.n, data.d
    X, y = data.X, data.y
    n_beta = n * config.beta
    w = init_w0(data)
    M = np.eye(d)
    A_prev = np.empty(0, dtype=int)
    state = SolverState(w=w, M=M, active_set=A_prev, iteration=0)

    for k in range(1, config.T + 1):
        margins = y * (X @ w)
        theta = float(np.mean(margins))
        A = np.flatnonzero(margins < theta)

        removed = np.setdiff1d(A_prev, A, assume_unique=True)
        added = np.setdiff1d(A, A_prev, assume_unique=True)
        n_changes = len(removed) + len(added)
        if n_changes:
            def recompute(A=A):
                return direct_inverse(X[A], n_beta)

            if n_changes > d:
                # d rank-one updates already cost as much as one inversion
                M = recompute()
                state.inverse_stats.direct += 1
            else:
                M = update_inverse(M, X[removed], X[added], n_beta,
                                   sm_denominator_floor=config.sm_denominator_floor,
                                   recompute=recompute, stats=state.inverse_stats)
        _check_finite(M, "inverse", k)

        w_prev = w
        w = semivariance_step(data, w_prev, theta, M, A, config.beta)
        w = average_margin_step(w, data, config.alpha)
        _check_finite(w, "weights", k)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise SolverError("weight vector collapsed to zero", iteration=k)
        w = w / norm
        if y @ (X @ w) < 0:
            w = -w

        A_prev = A
        state.w, state.M, state.active_set, state.iteration = w, M, A, k
        state.theta_hat = float(np.mean(y * (X @ w)))
        if callback is not None:
            callback(state)
        if config.tol is not None and np.linalg.norm(w - w_prev) < config.tol:
            logger.debug("converged after %d iterations", k)
            break

    return LinearModel(w=w)
