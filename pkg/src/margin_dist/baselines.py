"""Baseline classifiers used for comparison (MAMC, LSSVM, FMM)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from .core import Dataset, KernelModel, KernelSpec, LinearModel, gram_matrix
from .linear_solver import SolverError, init_w0

logger = logging.getLogger(__name__)


def train_mamc(data: Dataset) -> LinearModel:
    """Maximal average margin classifier: the normalised labelled feature sum."""
    return LinearModel(w=init_w0(data), algorithm="mamc")


def lssvm_system(K: np.ndarray, y: np.ndarray, C: float) -> tuple[np.ndarray, np.ndarray]:
    """Bordered LSSVM system ``[[0, y^T], [y, Omega + I/C]] [b; alpha] = [0; 1]``."""
    n = y.shape[0]
    y = y.astype(float)
    A = np.empty((n + 1, n + 1))
    A[0, 0] = 0.0
    A[0, 1:] = y
    A[1:, 0] = y
    A[1:, 1:] = np.outer(y, y) * K + np.eye(n) / C
    rhs = np.ones(n + 1)
    rhs[0] = 0.0
    return A, rhs


def train_lssvm(data: Dataset, C: float = 1.0, kernel: KernelSpec = KernelSpec()) -> KernelModel:
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    K = gram_matrix(data, kernel)
    A, rhs = lssvm_system(K, data.y, C)
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        logger.debug("LSSVM system singular, retrying with jitter")
        jitter = 1e-10 * np.eye(A.shape[0])
        jitter[0, 0] = 0.0
        try:
            sol = np.linalg.solve(A + jitter, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError("LSSVM system is singular") from exc
    if not np.all(np.isfinite(sol)):
        raise SolverError("LSSVM solution is not finite")
    b, alpha = sol[0], sol[1:]
    return KernelModel(a=alpha * data.y, support=data, kernel=kernel, bias=float(b),
                       algorithm="lssvm")


@dataclass(frozen=True)
class FmmConfig:
    """Settings for momentum ascent on the smoothed minimum margin.

    ``step`` is the learning rate, ``iterations`` the number of updates
    (0 returns the initialiser) and ``temperature`` the softmin sharpness.
    """

    step: float = 2.0**-4
    iterations: int = 100
    momentum: float = 0.9
    temperature: float = 100.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a nonnegative integer, got {self.iterations}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")


def min_margin(data: Dataset, w: np.ndarray) -> float:
    """Smallest margin of the unit-norm direction of ``w``."""
    return float(np.min(data.y * (data.X @ w)) / np.linalg.norm(w))


def _smoothed_min_margin_grad(Z: np.ndarray, w: np.ndarray, tau: float) -> np.ndarray:
    # margins m_i = <w, z_i> / ||w||^2 with z_i = y_i x_i
    sq = w @ w
    m = Z @ w / sq
    weights = softmax(-tau * m)
    # d m_i / d w = z_i / ||w||^2 - 2 m_i w / ||w||^2
    return (weights @ Z - 2.0 * (weights @ m) * w) / sq


def train_fmm(data: Dataset, config: FmmConfig = FmmConfig()) -> LinearModel:
    """Momentum ascent on the normalised minimum margin.

    Iterates are kept on the unit sphere, where the objective coincides with
    the minimum margin of the direction. The best iterate seen is returned.
    """
    Z = data.y[:, None] * data.X
    w = init_w0(data)
    best_w, best = w, min_margin(data, w)
    v = np.zeros_like(w)
    for k in range(1, config.iterations + 1):
        g = _smoothed_min_margin_grad(Z, w, config.temperature)
        v = config.momentum * v + config.step * g
        w = w + v
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0.0:
            raise SolverError("FMM iterate degenerated", iteration=k)
        w = w / norm
        current = min_margin(data, w)
        if current > best:
            best_w, best = w, current
    return LinearModel(w=best_w / np.linalg.norm(best_w), algorithm="fmm")
