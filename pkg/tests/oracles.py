"""Independent reference computations used by the solver tests."""

import numpy as np


def linear_prox_objective(w, X, y, A, theta, w_prev, beta):
    n = X.shape[0]
    r = theta - y[A] * (X[A] @ w)
    return np.sum(r**2) / n + beta * np.sum((w - w_prev) ** 2)


def kernel_prox_objective(a, K, y, A, theta, a_prev, beta):
    n = K.shape[0]
    r = theta - y[A] * (K[A] @ a)
    diff = a - a_prev
    return np.sum(r**2) / n + beta * diff @ (np.eye(n) + K) @ diff


def central_gradient(f, x, h=1e-6):
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def linear_step_lstsq(X, y, A, theta, w_prev, beta):
    """Stacked least-squares form of the frozen-set proximal problem."""
    n, d = X.shape
    rows = np.vstack([(y[A, None] * X[A]) / np.sqrt(n), np.sqrt(beta) * np.eye(d)])
    target = np.concatenate([np.full(len(A), theta / np.sqrt(n)), np.sqrt(beta) * w_prev])
    return np.linalg.lstsq(rows, target, rcond=None)[0]


def kernel_step_lstsq(K, y, A, theta, a_prev, beta):
    n = K.shape[0]
    L = np.linalg.cholesky(np.eye(n) + K)
    rows = np.vstack([(y[A, None] * K[A]) / np.sqrt(n), np.sqrt(beta) * L.T])
    target = np.concatenate([np.full(len(A), theta / np.sqrt(n)), np.sqrt(beta) * L.T @ a_prev])
    return np.linalg.lstsq(rows, target, rcond=None)[0]


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    B = rng.standard_normal((n, rank))
    K = B @ B.T / rank
    return (K + K.T) / 2


def churn_sequence(rng, n, steps):
    """Random active sets with add/remove churn between consecutive steps."""
    current = set(rng.choice(n, size=rng.integers(0, n + 1), replace=False).tolist())
    sets = []
    for _ in range(steps):
        flip = rng.choice(n, size=rng.integers(1, max(2, n // 4) + 1), replace=False)
        current ^= set(flip.tolist())
        sets.append(np.array(sorted(current), dtype=int))
    return sets
