"""Command-line entry point with one subcommand per workflow step.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds
from .baselines import FmmConfig, train_fmm, train_lssvm, train_mamc
from .core import (Dataset, KernelKind, KernelModel, KernelSpec, LinearModel,
                   classify_scores, decision_scores, gram_matrix)
from .harness import (ConfigError, ExperimentConfig, augment_bias, run_experiment,
                      scale_features, split_table)
from .io import (DataFormatError, dump_json, load_dataset, load_model, read_arrays,
                 save_model, write_text_atomic)
from .kernel_solver import train_kernel
from .linear_solver import SolverConfig, SolverError, train_linear
from .margin_stats import MarginStats, cumulative_margin_curve, curve_to_csv

logger = logging.getLogger("margin_dist")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _positive(kind=float):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a valid {kind.__name__}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _open_unit(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="margin-dist",
        description="Train and evaluate margin-distribution classifiers.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=["csv", "sparse"], default="csv")
    p.add_argument("--algo", choices=["msvmav", "mamc", "lssvm", "fmm"], default="msvmav")
    p.add_argument("--kernel", choices=["linear", "gaussian"], default="linear")
    p.add_argument("--gamma", type=_positive(), help="gaussian width (default 1/d)")
    p.add_argument("--alpha", type=_positive(), default=1.0)
    p.add_argument("--beta", type=_positive(), default=1.0)
    p.add_argument("--iters", type=_positive(int), default=100)
    p.add_argument("--C", type=_positive(), default=1.0, help="LSSVM regularisation")
    p.add_argument("--step", type=_positive(), default=2.0**-4, help="FMM learning rate")
    p.add_argument("--out", default="model.json")
    p.add_argument("--seed", type=int, default=0,
                   help="accepted for interface stability; training is deterministic")

    p = sub.add_parser("predict", help="score a dataset with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=["csv", "sparse"], default="csv")
    p.add_argument("--out", required=True)

    p = sub.add_parser("benchmark", help="run the repeated-split benchmark protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--splits-out", help="also write the train/test partition table as CSV")

    p = sub.add_parser("margins", help="export the cumulative margin curve")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=["csv", "sparse"], default="csv")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bound", help="evaluate the margin-distribution generalisation bound")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=["csv", "sparse"], default="csv")
    p.add_argument("--delta", type=_open_unit, required=True)
    p.add_argument("--nu", type=_positive(), help="relative-good threshold (default min(theta, 0.01))")
    p.add_argument("--lambda", dest="Lambda", type=_positive(),
                   help="norm bound (default: the model's own norm)")
    p.add_argument("--radius", type=_positive(),
                   help="instance radius for linear models (default: max instance norm)")
    p.add_argument("--out", help="write the report here as well as to stdout")
    return parser


# --------------------------------------------------------------------------

def _transform(model, X: np.ndarray) -> np.ndarray:
    if model.scaling is not None:
        X = model.scaling.apply(X)
    if model.bias_augmented:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return X


def _raw_dim(model) -> int:
    if model.scaling is not None:
        return model.scaling.mins.shape[0]
    return model.dim - int(model.bias_augmented)


def _read_for_model(model, path, fmt):
    n_features = _raw_dim(model) if fmt == "sparse" else None
    X, y = read_arrays(path, fmt, n_features=n_features)
    if X.shape[0] and X.shape[1] != _raw_dim(model):
        raise DataFormatError(
            f"data has {X.shape[1]} features but the model expects {_raw_dim(model)}", path)
    return X, y


def _model_stats(model, data: Dataset) -> dict:
    m = data.y * decision_scores(model, data.X)
    st = MarginStats.from_margins(m)
    out = {"theta_hat": st.theta_hat, "semi_variance": st.semi_variance,
           "objective": st.objective}
    if isinstance(model, LinearModel):
        out["w_norm"] = float(np.linalg.norm(model.w))
    else:
        K = gram_matrix(model.support, model.kernel)
        out["a_K_a"] = float(model.a @ K @ model.a)
    return out


def cmd_train(args) -> int:
    raw = load_dataset(args.data, args.format)
    scaled, scaling = scale_features(raw)
    data = augment_bias(scaled)
    notes = []
    kernel = KernelSpec()
    if args.kernel == "gaussian":
        gamma = args.gamma
        if gamma is None:
            gamma = 1.0 / raw.d
            notes.append(f"gamma defaulted to 1/d = {gamma!r}")
        kernel = KernelSpec(KernelKind.GAUSSIAN, gamma)

    if args.algo == "msvmav":
        config = SolverConfig(T=args.iters, alpha=args.alpha, beta=args.beta)
        if kernel.kind is KernelKind.LINEAR:
            model = train_linear(data, config)
        else:
            model = train_kernel(data, kernel, config)
    elif args.algo == "mamc":
        model = train_mamc(data)
    elif args.algo == "lssvm":
        model = train_lssvm(data, args.C, kernel)
    else:
        model = train_fmm(data, FmmConfig(step=args.step, iterations=args.iters))
    if args.algo in ("mamc", "fmm") and kernel.kind is KernelKind.GAUSSIAN:
        notes.append(f"{args.algo} is linear-only; --kernel ignored")

    model = dataclasses.replace(model, scaling=scaling, bias_augmented=True)
    save_model(model, args.out)
    summary = {"model": str(args.out), "algorithm": model.algorithm,
               "type": "linear" if isinstance(model, LinearModel) else "kernel",
               **_model_stats(model, data)}
    if isinstance(model, KernelModel):
        summary["gamma"] = model.kernel.gamma
    if notes:
        summary["notes"] = notes
    print(json.dumps(summary))
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, _ = _read_for_model(model, args.data, args.format)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_index", "score", "label"])
    if X.shape[0]:
        scores = decision_scores(model, _transform(model, X))
        for i, (s, lab) in enumerate(zip(scores, classify_scores(scores))):
            writer.writerow([i, f"{s:.17g}", int(lab)])
    write_text_atomic(args.out, buf.getvalue())
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    missing = [str(d.path) for d in config.datasets if not Path(d.path).exists()]
    if missing:
        raise FileNotFoundError(f"dataset not found: {', '.join(missing)}")
    result = run_experiment(config)
    out = Path(args.out)
    write_text_atomic(out, dump_json(result.to_dict(include_timing=False)))
    write_text_atomic(out.with_name(out.stem + ".timing.json"), dump_json(result.timing_dict()))
    if args.splits_out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["dataset", "repeat_index", "instance_index", "partition"])
        for ds in result.datasets:
            writer.writerows((ds.name, *row) for row in split_table(ds.n, config))
        write_text_atomic(args.splits_out, buf.getvalue())

    for ds in result.datasets:
        for alg in ds.algorithms:
            if alg.available:
                print(f"{ds.name}\t{alg.name}\t{alg.mean:.4f}±{alg.std:.4f}")
            else:
                print(f"{ds.name}\t{alg.name}\tN/A")
    for name, c in result.win_tie_loss().items():
        print(f"{result.reference} vs {name}: Win/Tie/Loss {c['win']}/{c['tie']}/{c['loss']}")
    return EXIT_OK


def _load_model_and_data(args):
    model = load_model(args.model)
    X, y = _read_for_model(model, args.data, args.format)
    if X.shape[0] == 0:
        raise DataFormatError("no instances", args.data)
    return model, Dataset(_transform(model, X), y)


def cmd_margins(args) -> int:
    model, data = _load_model_and_data(args)
    m = data.y * decision_scores(model, data.X)
    write_text_atomic(args.out, curve_to_csv(cumulative_margin_curve(m)))
    return EXIT_OK


def cmd_bound(args) -> int:
    model, data = _load_model_and_data(args)
    st = MarginStats.from_margins(data.y * decision_scores(model, data.X))
    if st.theta_hat <= 0:
        raise SolverError(f"average margin {st.theta_hat} is not positive; no bound applies")
    nu = bounds.default_nu(st.theta_hat) if args.nu is None else args.nu
    if nu > st.theta_hat:
        raise ValueError(
            f"--nu {nu} exceeds the empirical average margin {st.theta_hat:.6g}; the bound only "
            "covers classifiers whose average margin is at least nu")
    if isinstance(model, LinearModel):
        Lambda = args.Lambda or float(np.linalg.norm(model.w))
        radius = args.radius or float(np.max(np.linalg.norm(data.X, axis=1)))
        rad = bounds.rademacher_linear(radius, Lambda, data.n)
        kind = "linear"
    else:
        K = gram_matrix(model.support, model.kernel)
        Lambda = args.Lambda or float(np.sqrt(model.a @ K @ model.a))
        diag = gram_matrix(data, model.kernel).diagonal()
        rad = bounds.rademacher_kernel(diag, Lambda)
        kind = "kernel"
    report = bounds.generalization_bound(st.semi_variance, st.theta_hat, rad, data.n,
                                         args.delta, nu)
    out = {"model_type": kind, "Lambda": Lambda, **report.to_dict()}
    text = json.dumps(out)
    if args.out:
        write_text_atomic(args.out, dump_json(out))
    print(text)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "benchmark": cmd_benchmark,
            "margins": cmd_margins, "bound": cmd_bound}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: invalid config at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"error: training failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
