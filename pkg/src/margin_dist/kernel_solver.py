"""Coefficient-space version of the alternating solver for kernel models.

The model is ``h(x) = sum_i a_i k(x_i, x)``. The semi-variance step uses an
``(I + K)``-weighted proximal term, the average-margin step a ``K``-weighted
one, and every iterate is rescaled to unit RKHS norm ``a^T K a = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .core import Dataset, KernelModel, KernelSpec, gram_matrix
from .linear_solver import (InverseUpdateStats, SolverConfig, SolverError,
                            update_inverse)

logger = logging.getLogger(__name__)

JITTER = 1e-10


@dataclass
class KernelSolverState:
    a: np.ndarray
    M: np.ndarray
    active_set: np.ndarray
    K: np.ndarray
    iteration: int
    theta_hat: float = float("nan")
    inverse_stats: InverseUpdateStats = field(default_factory=InverseUpdateStats)


def kernel_margins(K: np.ndarray, labels: np.ndarray, a: np.ndarray) -> np.ndarray:
    return labels * (K @ a)


def init_a0(K: np.ndarray, labels: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Maximiser of the average kernel margin on the ``a^T K a = 1`` ellipsoid.

    Stationarity of the Lagrangian gives ``K y / n = 2 lambda K a``, so the
    labels themselves are a maximising direction.
    """
    y = np.asarray(labels, dtype=float)
    q = float(y @ K @ y)
    if not q > tol:
        raise SolverError(f"degenerate gram matrix for these labels (y^T K y = {q:.3e})")
    return y / np.sqrt(q)


def kernel_active_set(K: np.ndarray, labels, a: np.ndarray, theta_hat: float) -> np.ndarray:
    return np.flatnonzero(kernel_margins(K, labels, a) < theta_hat)


def _inverse_pd(A: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix, with one jitter retry."""
    n = A.shape[0]
    try:
        c = linalg.cho_factor(A)
    except linalg.LinAlgError:
        logger.debug("cholesky failed, retrying with jitter %.0e", JITTER)
        try:
            c = linalg.cho_factor(A + JITTER * np.eye(n))
        except linalg.LinAlgError as exc:
            raise SolverError("system matrix is not positive definite") from exc
    return linalg.cho_solve(c, np.eye(n))


def kernel_system_inverse(K: np.ndarray, A: np.ndarray, n_beta: float) -> np.ndarray:
    """Direct ``(sum_{i in A} K_i K_i^T / n_beta + K + I)^-1``."""
    KA = K[:, A]
    S = K + np.eye(K.shape[0]) + KA @ KA.T / n_beta
    return _inverse_pd((S + S.T) / 2)


def kernel_semivariance_step(K: np.ndarray, labels, a_prev: np.ndarray, theta_hat: float,
                             A: np.ndarray, beta: float, M: Optional[np.ndarray] = None) -> np.ndarray:
    """Closed-form frozen-active-set minimiser in coefficient space.

    ``M`` is the maintained system inverse for ``A``; it is computed
    directly when omitted.
    """
    n = K.shape[0]
    n_beta = n * beta
    if M is None:
        M = kernel_system_inverse(K, A, n_beta)
    y = np.asarray(labels, dtype=float)
    rhs = K @ a_prev + a_prev
    if len(A):
        rhs = rhs + theta_hat / n_beta * (K[:, A] @ y[A])
    return M @ rhs


def kernel_average_margin_step(a_sv: np.ndarray, labels, alpha: float) -> np.ndarray:
    y = np.asarray(labels, dtype=float)
    return a_sv + y / (2.0 * alpha * y.shape[0])


def _check_finite(v: np.ndarray, what: str, k: int) -> None:
    if not np.all(np.isfinite(v)):
        raise SolverError(f"non-finite {what}", iteration=k)


def train_kernel(data: Dataset, kernel: KernelSpec, config: SolverConfig = SolverConfig(), *,
                 K: Optional[np.ndarray] = None,
                 callback: Optional[Callable[[KernelSolverState], None]] = None) -> KernelModel:
    """Kernelised alternating solver.

    Parameters
    ----------
    data : Dataset
        Training sample; it becomes the model's support set.
    kernel : KernelSpec
    config : SolverConfig
    K : ndarray, optional
        Precomputed gram matrix of ``data`` (e.g. shared across a grid).
    callback : callable, optional
        Called with the solver state after every iteration.
    """
    if K is None:
        K = gram_matrix(data, kernel)
    n = data.n
    y = data.y.astype(float)
    n_beta = n * config.beta

    a = init_a0(K, y)
    M = _inverse_pd(K + np.eye(n))
    A_prev = np.empty(0, dtype=int)
    state = KernelSolverState(a=a, M=M, active_set=A_prev, K=K, iteration=0)

    for k in range(1, config.T + 1):
        m = kernel_margins(K, y, a)
        theta = float(np.mean(m))
        A = np.flatnonzero(m < theta)

        removed = np.setdiff1d(A_prev, A, assume_unique=True)
        added = np.setdiff1d(A, A_prev, assume_unique=True)
        n_changes = len(removed) + len(added)
        if n_changes:
            def recompute(A=A):
                return kernel_system_inverse(K, A, n_beta)

            if 4 * n_changes > n:
                M = recompute()
                state.inverse_stats.direct += 1
            else:
                # columns of K play the role of instances in the linear case
                M = update_inverse(M, K[:, removed].T, K[:, added].T, n_beta,
                                   sm_denominator_floor=config.sm_denominator_floor,
                                   recompute=recompute, stats=state.inverse_stats)
        _check_finite(M, "inverse", k)

        a_prev = a
        a = kernel_semivariance_step(K, y, a_prev, theta, A, config.beta, M=M)
        a = kernel_average_margin_step(a, y, config.alpha)
        _check_finite(a, "coefficients", k)
        q = float(a @ K @ a)
        if not q > 0:
            raise SolverError(f"coefficients have non-positive K-norm {q:.3e}", iteration=k)
        a = a / np.sqrt(q)
        if y @ (K @ a) < 0:
            a = -a

        A_prev = A
        state.a, state.M, state.active_set, state.iteration = a, M, A, k
        state.theta_hat = float(np.mean(kernel_margins(K, y, a)))
        if callback is not None:
            callback(state)
        if config.tol is not None and np.linalg.norm(a - a_prev) < config.tol:
            break

    return KernelModel(a=a, support=data, kernel=kernel)
