"""Domain types shared by every module, plus kernels and prediction helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform


class Instance(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """Ordered binary sample with labels in {+1, -1}.

    Arrays are copied and marked read-only, so a dataset can be shared
    between workers without defensive copies.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float, ndmin=2)
        y = np.array(self.y, dtype=int).ravel()
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one instance")
        if X.shape[0] != y.shape[0]:
            raise ValueError(
                f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be +1 or -1")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Instance:
        return Instance(self.X[i], int(self.y[i]))

    def __iter__(self) -> Iterator[Instance]:
        for i in range(self.n):
            yield self[i]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], self.y[indices])

    @classmethod
    def from_instances(cls, instances) -> "Dataset":
        instances = list(instances)
        return cls(np.array([inst.features for inst in instances], dtype=float),
                   np.array([inst.label for inst in instances], dtype=int))


class KernelKind(str, Enum):
    LINEAR = "linear"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.LINEAR
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.GAUSSIAN and not self.gamma > 0:
            raise ValueError(f"gaussian kernel needs gamma > 0, got {self.gamma}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "gamma": float(self.gamma)}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(KernelKind(d["kind"]), float(d.get("gamma", 1.0)))


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature min-max scaling fitted on a training sample."""

    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mins.shape[0]:
            raise ValueError(
                f"data has {X.shape[1]} features, scaling expects {self.mins.shape[0]}")
        span = self.maxs - self.mins
        # constant training features map to 0; test values are not clamped
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (X - self.mins) / safe, 0.0)

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(np.asarray(d["mins"], dtype=float),
                   np.asarray(d["maxs"], dtype=float))


@dataclass(frozen=True)
class LinearModel:
    w: np.ndarray
    bias_augmented: bool = False
    scaling: Optional[ScalingParams] = None
    algorithm: str = "msvmav"

    @property
    def dim(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class KernelModel:
    a: np.ndarray
    support: Dataset
    kernel: KernelSpec
    bias: float = 0.0
    bias_augmented: bool = False
    scaling: Optional[ScalingParams] = None
    algorithm: str = "msvmav"

    def __post_init__(self):
        if self.a.shape[0] != self.support.n:
            raise ValueError(
                f"{self.a.shape[0]} coefficients for {self.support.n} support instances")

    @property
    def dim(self) -> int:
        return self.support.d


Model = Union[LinearModel, KernelModel]


def gaussian_kernel(x, x_prime, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape != x_prime.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_prime.shape}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    diff = x - x_prime
    return math.exp(-gamma * float(diff @ diff))


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Cross kernel matrix ``k(A[i], B[j])``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if kernel.kind is KernelKind.LINEAR:
        return A @ B.T
    return np.exp(-kernel.gamma * cdist(A, B, "sqeuclidean"))


def gram_matrix(data: Dataset, kernel: KernelSpec) -> np.ndarray:
    X = data.X
    if kernel.kind is KernelKind.LINEAR:
        K = X @ X.T
        # enforce exact symmetry; BLAS may round the two triangles differently
        upper = np.triu(K)
        return upper + np.triu(K, 1).T
    if data.n == 1:
        return np.ones((1, 1))
    return np.exp(-kernel.gamma * squareform(pdist(X, "sqeuclidean")))


def decision_scores(model: Model, X: np.ndarray) -> np.ndarray:
    """Vectorised ``predict_score`` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise ValueError(f"data has {X.shape[1]} features, model expects {model.dim}")
    if isinstance(model, LinearModel):
        return X @ model.w
    return kernel_matrix(X, model.support.X, model.kernel) @ model.a + model.bias


def predict_score(model: Model, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return float(decision_scores(model, x[None, :])[0])


def classify(score) -> int:
    score = float(score)
    if not math.isfinite(score):
        raise ValueError(f"cannot classify non-finite score {score}")
    return 1 if score >= 0 else -1


def classify_scores(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("cannot classify non-finite scores")
    return np.where(scores >= 0, 1, -1)


def margins(model: Model, data: Dataset) -> np.ndarray:
    return data.y * decision_scores(model, data.X)
