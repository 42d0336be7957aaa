"""Small synthetic binary problems used by the tests and example configs."""

from __future__ import annotations

import numpy as np

from .core import Dataset


def make_two_gaussians(n: int = 200, sigma: float = 0.2, seed: int = 0,
                       center: float = 1.0) -> Dataset:
    """Balanced classes around ``(+center, 0)`` and ``(-center, 0)``."""
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    X = np.column_stack([center * y, np.zeros(n)]) + sigma * rng.standard_normal((n, 2))
    return Dataset(X, y)


def make_xor(n: int = 400, sigma: float = 0.15, seed: int = 0) -> Dataset:
    """Four clusters at (+-1, +-1); the label is the sign of the coordinate product."""
    rng = np.random.default_rng(seed)
    centers = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    which = np.arange(n) % 4
    X = centers[which] + sigma * rng.standard_normal((n, 2))
    y = (centers[which, 0] * centers[which, 1]).astype(int)
    return Dataset(X, y)


def write_csv(data: Dataset, path) -> None:
    rows = np.column_stack([data.X, data.y])
    with open(path, "w") as fh:
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row[:-1]) + f",{int(row[-1])}\n")
