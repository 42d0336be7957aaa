"""Benchmark protocol over repeated random train/test splits.

Each split is scaled on its training part, gets a bias column, and has its
hyperparameters chosen by grid-search cross validation. Accuracies of every
algorithm are then compared with a reference by paired t-tests.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
from joblib import Parallel, delayed
from scipy import stats
from sklearn.base import clone

from .core import Dataset, ScalingParams
from .estimators import ESTIMATORS
from .io import load_dataset, normalize_format

logger = logging.getLogger(__name__)

POWER2_GRID = [2.0**k for k in range(-10, 11, 2)]
FMM_STEP_GRID = [2.0**k for k in range(-10, 1, 2)]
FMM_ITER_GRID = [50, 100, 200, 400, 800, 1600]
THREADS_ENV = "MARGIN_DIST_THREADS"


# --------------------------------------------------------------------------
# data preparation

def fit_scaling(data: Dataset) -> ScalingParams:
    return ScalingParams(data.X.min(axis=0), data.X.max(axis=0))


def apply_scaling(data: Dataset, params: ScalingParams) -> Dataset:
    return Dataset(params.apply(data.X), data.y)


def scale_features(data: Dataset) -> tuple[Dataset, ScalingParams]:
    """Min-max scale every feature of ``data`` into [0, 1]."""
    params = fit_scaling(data)
    return apply_scaling(data, params), params


def augment_bias(data: Dataset) -> Dataset:
    return Dataset(np.hstack([data.X, np.ones((data.n, 1))]), data.y)


def split_indices(n: int, seed: int, train_fraction: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(train_fraction * n)
    return perm[:n_train], perm[n_train:]


def random_split(data: Dataset, seed: int, train_fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    if data.n < 2:
        raise ValueError("need at least two instances to split")
    train_idx, test_idx = split_indices(data.n, seed, train_fraction)
    if len(test_idx) == 0:
        raise ValueError(f"train_fraction {train_fraction} leaves no test instances")
    return data.subset(train_idx), data.subset(test_idx)


# --------------------------------------------------------------------------
# model selection

def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product in declared key and value order."""
    if not grid:
        return [{}]
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def cross_validate(train: Dataset, estimator, grid, cv_folds: int = 5, seed: int = 0):
    """Grid point with the best mean validation accuracy.

    ``grid`` is a list of parameter dicts (or a dict of lists, expanded in
    declared order). Folds are contiguous blocks of a seeded permutation;
    ties go to the earliest grid point. Returns ``(best_params, mean_scores)``.
    """
    points = expand_grid(grid) if isinstance(grid, dict) else list(grid)
    if not points:
        raise ValueError("grid is empty")
    if len(points) == 1:
        return points[0], [float("nan")]
    if cv_folds < 2:
        raise ValueError("cv_folds must be at least 2")
    if train.n < cv_folds:
        raise ValueError(f"{train.n} instances cannot form {cv_folds} folds")
    perm = np.random.default_rng(seed).permutation(train.n)
    folds = np.array_split(perm, cv_folds)
    X, y = train.X, train.y
    scores = []
    for params in points:
        accs = []
        for f, val_idx in enumerate(folds):
            fit_idx = np.concatenate([folds[g] for g in range(cv_folds) if g != f])
            est = clone(estimator).set_params(**params)
            est.fit(X[fit_idx], y[fit_idx])
            accs.append(float(np.mean(est.predict(X[val_idx]) == y[val_idx])))
        scores.append(float(np.mean(accs)))
    best = int(np.argmax(scores))
    return points[best], scores


# --------------------------------------------------------------------------
# significance

class Significance(str, Enum):
    BETTER = "significant_better"
    WORSE = "significant_worse"
    TIE = "tie"


def t_critical(df: int, significance: float = 0.05) -> float:
    return float(stats.t.ppf(1.0 - significance / 2.0, df))


def paired_t_test(a, b, significance: float = 0.05) -> Significance:
    """Two-sided paired Student t-test of ``a`` against ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = a - b
    mean = float(np.mean(d))
    if np.all(d == d[0]):
        if mean == 0.0:
            return Significance.TIE
        return Significance.BETTER if mean > 0 else Significance.WORSE
    t = mean / (float(np.std(d, ddof=1)) / math.sqrt(d.size))
    if abs(t) <= t_critical(d.size - 1, significance):
        return Significance.TIE
    return Significance.BETTER if t > 0 else Significance.WORSE


# --------------------------------------------------------------------------
# configuration

_GRID_VALUES = {"oneOf": [{"type": "array", "minItems": 1}, {"const": "default"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "datasets": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "path": {"type": "string"},
                    "format": {"enum": ["csv", "dense_csv", "sparse", "sparse_index_value", "libsvm"]},
                },
                "required": ["path"],
                "additionalProperties": False,
            },
        },
        "algorithms": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "algorithm": {"enum": sorted(ESTIMATORS)},
                    "params": {"type": "object"},
                    "grid": {"type": "object", "additionalProperties": _GRID_VALUES},
                    "external": {"type": "string"},
                },
                "required": ["name"],
                "oneOf": [{"required": ["algorithm"]}, {"required": ["external"]}],
                "additionalProperties": False,
            },
        },
        "reference": {"type": "string"},
        "n_repeats": {"type": "integer", "minimum": 1},
        "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "cv_folds": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "significance": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "scale": {"type": "boolean"},
        "augment_bias": {"type": "boolean"},
    },
    "required": ["datasets", "algorithms"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: Path
    format: str = "csv"


@dataclass(frozen=True)
class AlgorithmEntry:
    name: str
    algorithm: Optional[str] = None
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    external: Optional[str] = None

    def external_path(self, dataset: DatasetEntry, base: Path) -> Path:
        return _resolve(self.external.format(dataset=dataset.name), base)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    algorithms: tuple
    reference: str
    n_repeats: int = 30
    train_fraction: float = 0.8
    cv_folds: int = 5
    seed: int = 0
    significance: float = 0.05
    scale: bool = True
    augment_bias: bool = True
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
            raise ConfigError(exc.message, path) from None
        base = Path(base_dir)
        datasets = tuple(
            DatasetEntry(name=d.get("name", Path(d["path"]).stem),
                         path=_resolve(d["path"], base),
                         format=normalize_format(d.get("format", "csv")))
            for d in raw["datasets"])
        algorithms = tuple(AlgorithmEntry(name=a["name"], algorithm=a.get("algorithm"),
                                          params=dict(a.get("params", {})),
                                          grid=dict(a.get("grid", {})),
                                          external=a.get("external"))
                           for a in raw["algorithms"])
        names = [a.name for a in algorithms]
        if len(set(names)) != len(names):
            raise ConfigError("algorithm names must be unique", "$.algorithms")
        reference = raw.get("reference", names[0])
        if reference not in names:
            raise ConfigError(f"unknown reference algorithm {reference!r}", "$.reference")
        if algorithms[names.index(reference)].external is not None:
            raise ConfigError("the reference algorithm cannot be external", "$.reference")
        for i, a in enumerate(algorithms):
            if a.algorithm is None:
                continue
            valid = ESTIMATORS[a.algorithm]().get_params()
            for key in itertools.chain(a.params, a.grid):
                if key not in valid or key == "fit_intercept":
                    raise ConfigError(f"unknown parameter {key!r} for {a.algorithm}",
                                      f"$.algorithms[{i}]")
        return cls(datasets=datasets, algorithms=algorithms, reference=reference,
                   n_repeats=raw.get("n_repeats", 30), train_fraction=raw.get("train_fraction", 0.8),
                   cv_folds=raw.get("cv_folds", 5), seed=raw.get("seed", 0),
                   significance=raw.get("significance", 0.05), scale=raw.get("scale", True),
                   augment_bias=raw.get("augment_bias", True), base_dir=base)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)


def _resolve(p: str, base: Path) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def default_grid(algorithm: str, param: str, d: int) -> list:
    if param == "gamma":
        return [g / d for g in POWER2_GRID]
    if algorithm == "fmm" and param == "step":
        return list(FMM_STEP_GRID)
    if algorithm == "fmm" and param == "max_iter":
        return list(FMM_ITER_GRID)
    return list(POWER2_GRID)


def resolve_grid(entry: AlgorithmEntry, d: int) -> dict:
    return {k: default_grid(entry.algorithm, k, d) if v == "default" else list(v)
            for k, v in entry.grid.items()}


# --------------------------------------------------------------------------
# results

@dataclass
class AlgorithmResult:
    name: str
    accuracies: Optional[list]
    selected_params: list
    train_seconds: list

    @property
    def available(self) -> bool:
        return self.accuracies is not None

    @property
    def mean(self) -> Optional[float]:
        return float(np.mean(self.accuracies)) if self.available else None

    @property
    def std(self) -> Optional[float]:
        return float(np.std(self.accuracies)) if self.available else None

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {"name": self.name, "status": "ok" if self.available else "N/A",
             "accuracies": self.accuracies, "mean": self.mean, "std": self.std,
             "selected_params": self.selected_params}
        if include_timing:
            d["train_seconds"] = self.train_seconds
        return d


@dataclass
class DatasetResult:
    name: str
    n: int
    d: int
    algorithms: list
    significance: dict

    def to_dict(self, include_timing: bool = True) -> dict:
        return {"name": self.name, "n": self.n, "d": self.d,
                "algorithms": [a.to_dict(include_timing) for a in self.algorithms],
                "significance": self.significance}


@dataclass
class ExperimentResult:
    reference: str
    settings: dict
    datasets: list

    def win_tie_loss(self) -> dict:
        """Counts over datasets of the reference being better / tied / worse."""
        counts = {}
        for ds in self.datasets:
            for name, mark in ds.significance.items():
                c = counts.setdefault(name, {"win": 0, "tie": 0, "loss": 0})
                if mark in (Significance.BETTER.value, "N/A"):
                    c["win"] += 1
                elif mark == Significance.WORSE.value:
                    c["loss"] += 1
                else:
                    c["tie"] += 1
        return counts

    def to_dict(self, include_timing: bool = True) -> dict:
        return {"reference": self.reference, "settings": self.settings,
                "datasets": [d.to_dict(include_timing) for d in self.datasets],
                "win_tie_loss": self.win_tie_loss()}

    def timing_dict(self) -> dict:
        return {ds.name: {a.name: a.train_seconds for a in ds.algorithms} for ds in self.datasets}


# --------------------------------------------------------------------------
# protocol

def n_jobs_from_env() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return -1 if value <= 0 else value


def prepare_split(data: Dataset, train_idx, test_idx, scale: bool = True,
                  bias: bool = True) -> tuple[Dataset, Dataset]:
    """Fit scaling on the training part only, then optionally append a bias column."""
    train, test = data.subset(train_idx), data.subset(test_idx)
    if scale:
        params = fit_scaling(train)
        train, test = apply_scaling(train, params), apply_scaling(test, params)
    if bias:
        train, test = augment_bias(train), augment_bias(test)
    return train, test


def _run_repeat(data: Dataset, config: ExperimentConfig, r: int):
    train_idx, test_idx = split_indices(data.n, config.seed + r, config.train_fraction)
    train, test = prepare_split(data, train_idx, test_idx, config.scale, config.augment_bias)
    raw_d = data.d
    out = {}
    for entry in config.algorithms:
        if entry.external is not None:
            continue
        base = ESTIMATORS[entry.algorithm](fit_intercept=False).set_params(**entry.params)
        if "gamma" in base.get_params() and base.gamma is None:
            base.set_params(gamma=1.0 / raw_d)
        params, _ = cross_validate(train, base, resolve_grid(entry, raw_d),
                                   config.cv_folds, seed=config.seed + r)
        est = clone(base).set_params(**params)
        start = time.perf_counter()
        est.fit(train.X, train.y)
        seconds = time.perf_counter() - start
        acc = float(np.mean(est.predict(test.X) == test.y))
        out[entry.name] = (acc, params, seconds)
        logger.debug("repeat %d %s acc=%.4f params=%s", r, entry.name, acc, params)
    return test_idx, out


def read_external_scores(path) -> dict:
    scores = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row[0].strip() == "repeat_index"):
                continue
            try:
                scores[(int(row[0]), int(row[1]))] = float(row[2])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: expected repeat_index,instance_index,score") from None
    return scores


def _external_result(entry, path, data, splits) -> AlgorithmResult:
    if not path.exists():
        logger.warning("external predictions %s not found; marking %s N/A", path, entry.name)
        return AlgorithmResult(entry.name, None, [], [])
    scores = read_external_scores(path)
    accs = []
    for r, test_idx in enumerate(splits):
        try:
            s = np.array([scores[(r, int(i))] for i in test_idx])
        except KeyError:
            logger.warning("%s lacks predictions for repeat %d; marking N/A", entry.name, r)
            return AlgorithmResult(entry.name, None, [], [])
        pred = np.where(s >= 0, 1, -1)
        accs.append(float(np.mean(pred == data.y[test_idx])))
    return AlgorithmResult(entry.name, accs, [], [])


def run_dataset(data: Dataset, name: str, config: ExperimentConfig,
                entry: Optional[DatasetEntry] = None, n_jobs: Optional[int] = None) -> DatasetResult:
    n_jobs = n_jobs_from_env() if n_jobs is None else n_jobs
    repeats = Parallel(n_jobs=n_jobs)(
        delayed(_run_repeat)(data, config, r) for r in range(config.n_repeats))
    splits = [test_idx for test_idx, _ in repeats]

    results = []
    for alg in config.algorithms:
        if alg.external is not None:
            path = alg.external_path(entry or DatasetEntry(name, Path(name)), config.base_dir)
            results.append(_external_result(alg, path, data, splits))
            continue
        rows = [out[alg.name] for _, out in repeats]
        results.append(AlgorithmResult(alg.name, [r[0] for r in rows],
                                       [r[1] for r in rows], [r[2] for r in rows]))

    ref = next(a for a in results if a.name == config.reference)
    significance = {}
    for other in results:
        if other.name == config.reference:
            continue
        if not other.available:
            significance[other.name] = "N/A"
        elif config.n_repeats < 2:
            significance[other.name] = Significance.TIE.value
        else:
            significance[other.name] = paired_t_test(ref.accuracies, other.accuracies,
                                                     config.significance).value
    return DatasetResult(name=name, n=data.n, d=data.d, algorithms=results,
                         significance=significance)


def run_experiment(config: ExperimentConfig, n_jobs: Optional[int] = None) -> ExperimentResult:
    datasets = []
    for entry in config.datasets:
        data = load_dataset(entry.path, entry.format)
        datasets.append(run_dataset(data, entry.name, config, entry, n_jobs=n_jobs))
    settings = {"n_repeats": config.n_repeats, "train_fraction": config.train_fraction,
                "cv_folds": config.cv_folds, "seed": config.seed,
                "significance": config.significance, "scale": config.scale,
                "augment_bias": config.augment_bias}
    return ExperimentResult(reference=config.reference, settings=settings, datasets=datasets)


def split_table(n: int, config: ExperimentConfig) -> list[tuple[int, int, str]]:
    """``(repeat, instance, partition)`` rows, for external baselines to reuse our splits."""
    rows = []
    for r in range(config.n_repeats):
        train_idx, test_idx = split_indices(n, config.seed + r, config.train_fraction)
        rows += [(r, int(i), "train") for i in sorted(train_idx)]
        rows += [(r, int(i), "test") for i in sorted(test_idx)]
    return rows
