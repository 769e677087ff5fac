"""Command-line interface: ``gendwd {fit,predict,cv,simulate,bench,verify}``.

Every command writes its report to stdout as JSON lines and its tabular outputs as CSV files with a
header row.

Exit codes:
    0: success.
    1: at least one verification check failed.
    2: bad flags or an unsupported combination of them.
    3: unusable data or model file.
    4: numerical failure (non-convergence under ``--strict``, or an unfactorizable system).
"""

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from gendwd.config import DEFAULT_MAX_ITER, DEFAULT_TOL, SolverConfig
from gendwd.data_io import (
    DEFAULT_LABEL_COLUMN,
    load_csv,
    load_features,
    load_libsvm,
    save_csv,
    standardize_dataset,
    train_test_split,
)
from gendwd.datagen import SCENARIO_ALIASES, BayesOracle, Scenario, ScenarioSpec
from gendwd.dataset import Dataset
from gendwd.exceptions import DatasetError, ModelFileError, SingularSystemError
from gendwd.kernel_dwd import fit_kernel, fit_kernel_path
from gendwd.kernels import KernelSpec, median_heuristic_sigma
from gendwd.linear import FitReport, fit_linear, fit_linear_path
from gendwd.model import Model, decision_function, predict, read_model_document, save_model
from gendwd.oracle import bayes_error_mc
from gendwd.tuning import CvPlan, CvResult, cross_validate
from gendwd.verify import FAMILIES, run_verification

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

DEFAULT_MODEL_PATH = "model.json"
DEFAULT_PREDICTIONS_PATH = "predictions.csv"
DEFAULT_GRID_PATH = "cv_grid.csv"
DEFAULT_BENCH_SCENARIOS = ("ex1", "ex2", "ex3", "ex4")
DEFAULT_BENCH_LAMBDAS = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_BENCH_REPS = 100
DEFAULT_MONTE_CARLO = 100_000
DEFAULT_GRID_SIZE = 200
KERNEL_CHOICES = ("linear", "poly", "gauss")


class UsageError(Exception):
    """Flags that parse individually but cannot be honored together."""


def _positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a number, got {value!r}") from e
    if not math.isfinite(number) or number <= 0:
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {value}")
    return number


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}") from e
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return number


def _ratio(value: str) -> float:
    number = _positive_float(value)
    if number >= 1:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return number


def _float_list(value: str) -> list[float]:
    return [_positive_float(part) for part in value.split(",") if part.strip()]


def _int_list(value: str) -> list[int]:
    return [_positive_int(part) for part in value.split(",") if part.strip()]


def _class_weights(value: str) -> tuple[float, float]:
    parts = value.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'w+:w-', got {value!r}")
    return _positive_float(parts[0]), _positive_float(parts[1])


def _label_column(value: str) -> Union[int, str]:
    try:
        return int(value)
    except ValueError:
        return value


def _scenario(value: str) -> Scenario:
    if value in SCENARIO_ALIASES:
        return SCENARIO_ALIASES[value]
    try:
        return Scenario(value)
    except ValueError as e:
        choices = sorted(SCENARIO_ALIASES) + [s.value for s in Scenario]
        raise argparse.ArgumentTypeError(
            f"unknown scenario {value!r}; choose from {choices}"
        ) from e


def _scenario_list(value: str) -> list[Scenario]:
    return [_scenario(part.strip()) for part in value.split(",") if part.strip()]


def _family_list(value: str) -> list[str]:
    families = [part.strip() for part in value.split(",") if part.strip()]
    unknown = [f for f in families if f not in FAMILIES]
    if unknown or not families:
        raise argparse.ArgumentTypeError(
            f"unknown families {unknown}; choose from {list(FAMILIES)}"
        )
    return families


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _emit(record: dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(record, default=_to_builtin) + "\n")
    sys.stdout.flush()


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load_training_data(args: argparse.Namespace) -> Dataset:
    if args.libsvm:
        data = load_libsvm(args.data)
        if args.standardize:
            data = standardize_dataset(data)
    else:
        data = load_csv(
            args.data,
            label_column=args.label_column,
            header=not args.no_header,
            standardize=args.standardize,
        )
    if args.weights is not None:
        positive, negative = args.weights
        data = data.with_class_weights(positive=positive, negative=negative)
    return data


def _kernel_spec(
    args: argparse.Namespace, data: Dataset
) -> tuple[Optional[KernelSpec], Optional[str]]:
    """The kernel named by the flags and, for the gaussian kernel, where its sigma came from."""
    if args.kernel == "linear":
        return None, None
    if args.kernel == "poly":
        return KernelSpec.polynomial(offset=args.offset, degree=args.degree), None
    if args.sigma is not None:
        return KernelSpec.gaussian(args.sigma), "flag"
    sigma = median_heuristic_sigma(data.X, seed=args.seed)
    logger.info("no --sigma given; median heuristic chose sigma=%g", sigma)
    return KernelSpec.gaussian(sigma), "median_heuristic"


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iter=args.max_iter)


def _training_error(model: Model, data: Dataset) -> float:
    return float(np.mean(predict(model, data.X) != data.y))


def _save(model: Model, path: Path, data: Dataset) -> None:
    save_model(
        model,
        path,
        label_mapping=data.label_mapping,
        feature_scaling=data.feature_scaling,
        feature_names=list(data.feature_names) if data.feature_names else None,
    )


def _path_output(out: Path, index: int) -> Path:
    return out.with_name(f"{out.stem}_{index}{out.suffix}")


def _kernel_description(kernel: Optional[KernelSpec]) -> str:
    return "linear" if kernel is None else kernel.describe()


def _tracking_params(args: argparse.Namespace, kernel: Optional[KernelSpec]) -> dict[str, Any]:
    params: dict[str, Any] = {
        "data": str(args.data),
        "kernel": _kernel_description(kernel),
        "standardize": args.standardize,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "seed": args.seed,
    }
    if args.weights is not None:
        params["weights"] = f"{args.weights[0]:g}:{args.weights[1]:g}"
    return params


def _import_tracking():
    try:
        from gendwd import tracking
    except ImportError as e:
        raise UsageError(str(e)) from e
    return tracking


def _fit_record(
    model: Model,
    report: FitReport,
    data: Dataset,
    kernel: Optional[KernelSpec],
    sigma_source: Optional[str],
    path: Path,
) -> dict[str, Any]:
    record: dict[str, Any] = {
        "command": "fit",
        "q": model.q,
        "lambda": model.lam,
        "kernel": _kernel_description(kernel),
    }
    if sigma_source is not None:
        record["sigma"] = kernel.sigma
        record["sigma_source"] = sigma_source
    record.update(
        {
            "converged": report.converged,
            "iterations": report.iterations,
            "final_objective": report.final_objective,
            "kkt_residual": report.kkt_residual,
            "jitter": report.jitter,
            "wall_time": report.wall_time,
            "train_error": _training_error(model, data),
            "model_path": str(path),
            "objective_trace": report.objective_trace,
        }
    )
    return record


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit one model per penalty value and save each to a model file."""
    data = _load_training_data(args)
    kernel, sigma_source = _kernel_spec(args, data)
    config = _solver_config(args)
    out = Path(args.out)

    if args.lambda_path is not None:
        if kernel is None:
            fits = fit_linear_path(data, args.q, args.lambda_path, config)
        else:
            fits = fit_kernel_path(data, kernel, args.q, args.lambda_path, config)
        paths = [_path_output(out, i) for i in range(len(fits))]
    else:
        if kernel is None:
            fits = [fit_linear(data, args.q, args.lam, config)]
        else:
            fits = [fit_kernel(data, kernel, args.q, args.lam, config)]
        paths = [out]

    tracking = _import_tracking() if args.track else None
    for (model, report), path in zip(fits, paths, strict=True):
        _save(model, path, data)
        record = _fit_record(model, report, data, kernel, sigma_source, path)
        if tracking is not None:
            record["run_id"] = tracking.log_fit(
                model,
                report,
                _tracking_params(args, kernel),
                model_path=path,
                experiment=args.experiment,
            )
        _emit(record)

    missed = sum(1 for _, report in fits if not report.converged)
    if missed and args.strict:
        logger.error(f"{missed} of {len(fits)} fit(s) did not converge; failing under --strict.")
        return EXIT_NUMERICAL
    return EXIT_OK


def _prediction_error(
    predicted: np.ndarray, truth: list[str], label_mapping: Optional[dict[int, str]]
) -> float:
    if label_mapping:
        mapped = [label_mapping[int(p)] for p in predicted]
        return float(np.mean([p != t for p, t in zip(mapped, truth, strict=True)]))
    try:
        values = np.asarray([float(t) for t in truth])
    except ValueError as e:
        raise DatasetError(
            f"The model has no label mapping, but the labels are not numeric: {e}"
        ) from e
    return float(np.mean(values != predicted))


def cmd_predict(args: argparse.Namespace) -> int:
    """Label (and optionally score) every row of a feature file with a saved model."""
    document = read_model_document(args.model)
    model = document.to_model()
    table = load_features(args.data, header=not args.no_header, label_column=args.label_column)

    X = table.X
    if X.shape[0] == 0:
        scores = np.empty(0)
    else:
        if document.feature_scaling is not None:
            X = document.feature_scaling.apply(X)
        scores = decision_function(model, X)
    predicted = np.where(scores >= 0, 1, -1).astype(int)

    mapping = document.label_mapping
    frame = pd.DataFrame(
        {"label": [mapping[int(v)] for v in predicted] if mapping else predicted.tolist()}
    )
    if args.scores:
        frame["score"] = scores
    frame.to_csv(args.out, index=False)

    record: dict[str, Any] = {
        "command": "predict",
        "n": int(predicted.shape[0]),
        "path": str(args.out),
    }
    if table.labels is not None and predicted.shape[0] > 0:
        record["error"] = _prediction_error(predicted, table.labels, mapping)
    _emit(record)
    return EXIT_OK


def _cv_kernel(args: argparse.Namespace) -> tuple[Optional[KernelSpec], Optional[list[float]]]:
    if args.kernel == "linear":
        return None, None
    if args.kernel == "poly":
        return KernelSpec.polynomial(offset=args.offset, degree=args.degree), None
    if args.sigma_grid is not None:
        sigma_grid = args.sigma_grid
    elif args.sigma is not None:
        sigma_grid = [args.sigma]
    else:
        sigma_grid = None
    # cross_validate replaces this sigma with every value of the sigma grid.
    return KernelSpec.gaussian(args.sigma or 1.0), sigma_grid


def _best_index(result: CvResult) -> tuple[int, int]:
    j = int(np.flatnonzero(result.lambda_grid == result.best_lambda)[0])
    if result.sigma_grid is None:
        return 0, j
    return int(np.flatnonzero(result.sigma_grid == result.best_sigma)[0]), j


def cmd_cv(args: argparse.Namespace) -> int:
    """Tune lambda (and the gaussian sigma) by k-fold cross-validation, then refit and save."""
    data = _load_training_data(args)
    test = None
    if args.train_ratio is not None:
        data, test = train_test_split(data, ratio=args.train_ratio, seed=args.seed)

    kernel, sigma_grid = _cv_kernel(args)
    plan_fields: dict[str, Any] = {"folds": args.folds, "seed": args.seed, "sigma_grid": sigma_grid}
    if args.lambda_grid is not None:
        plan_fields["lambda_grid"] = args.lambda_grid
    plan = CvPlan(**plan_fields)
    result = cross_validate(data, args.q, kernel, plan, _solver_config(args))

    out = Path(args.out)
    grid_out = Path(args.grid_out)
    result.to_frame().to_csv(grid_out, index=False)
    _save(result.model, out, data)

    s, j = _best_index(result)
    record: dict[str, Any] = {
        "command": "cv",
        "q": result.q,
        "kernel": _kernel_description(result.kernel),
        "folds": plan.folds,
        "fold_seed": result.fold_seed,
        "best_lambda": result.best_lambda,
        "best_sigma": result.best_sigma,
        "mean_error": float(result.mean_error[s, j]),
        "se": float(result.standard_error[s, j]),
        "nonconverged": result.nonconverged,
        "converged": result.report.converged,
        "train_error": _training_error(result.model, data),
        "model_path": str(out),
        "grid_path": str(grid_out),
    }
    if test is not None:
        record["test_error"] = _training_error(result.model, test)
    if args.track:
        tracking = _import_tracking()
        record["run_id"] = tracking.log_cv(
            result,
            _tracking_params(args, result.kernel),
            model_path=out,
            experiment=args.experiment,
        )
    _emit(record)

    if args.strict and (result.nonconverged or not result.report.converged):
        logger.error("cross-validation had non-converged fits; failing under --strict.")
        return EXIT_NUMERICAL
    return EXIT_OK


def _bayes_score_grid(oracle: BayesOracle, data: Dataset, size: int) -> pd.DataFrame:
    low = data.X.min(axis=0) - 1.0
    high = data.X.max(axis=0) + 1.0
    first, second = np.meshgrid(
        np.linspace(low[0], high[0], size), np.linspace(low[1], high[1], size)
    )
    points = np.column_stack([first.ravel(), second.ravel()])
    return pd.DataFrame(
        {"x1": points[:, 0], "x2": points[:, 1], "bayes_score": oracle.score(points)}
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    """Write one synthetic dataset; for the mixture, also estimate its Bayes error."""
    spec = ScenarioSpec(
        kind=args.scenario,
        n=args.n,
        p=args.p,
        seed=args.seed,
        shared_outlier_coordinate=args.shared_outlier_coordinate,
    )
    if args.grid_out is not None and spec.kind != Scenario.MIXTURE:
        raise UsageError("--grid-out is only available for the mixture scenario.")
    data, oracle = spec.generate()
    out = Path(args.out) if args.out else Path(f"{spec.kind.value}_seed{spec.seed}.csv")
    save_csv(data, out, comments=spec.header_comments())

    record: dict[str, Any] = {
        "command": "simulate",
        "scenario": spec.kind.value,
        "n": data.n,
        "p": data.p,
        "seed": spec.seed,
        "path": str(out),
    }
    if oracle is not None:
        estimate = bayes_error_mc(oracle, args.n_mc, seed=spec.seed + 1)
        record["bayes_error"] = estimate.rate
        record["bayes_error_se"] = estimate.standard_error
        if args.grid_out is not None:
            grid = _bayes_score_grid(oracle, data, args.grid_size)
            grid.to_csv(args.grid_out, index=False)
            record["grid_path"] = str(args.grid_out)
    _emit(record)
    return EXIT_OK


def _nested_subset(data: Dataset, n: int) -> Dataset:
    """The first ``n / 2`` points of each class, so smaller sizes are subsets of larger ones."""
    half = n // 2
    positive = np.flatnonzero(data.y > 0)[:half]
    negative = np.flatnonzero(data.y < 0)[:half]
    if positive.shape[0] < half or negative.shape[0] < half:
        raise UsageError(f"Cannot take {n} balanced rows from a sample of {data.n}.")
    return data.subset(np.concatenate([positive, negative]))


def _bench_spec(kind: Scenario, n: int, p: int, seed: int) -> ScenarioSpec:
    if kind == Scenario.DATAPILING:
        return ScenarioSpec(kind=kind, seed=seed)
    if kind == Scenario.MIXTURE:
        return ScenarioSpec(kind=kind, n=n, seed=seed)
    return ScenarioSpec(kind=kind, n=n, p=p, seed=seed)


def cmd_bench(args: argparse.Namespace) -> int:
    """Time linear-DWD fit paths over scenarios, exponents and sample sizes.

    Replicate ``r`` uses seed ``--seed + r``. Timings are taken one fit path at a time so concurrent
    work does not distort them.
    """
    if any(n % 2 for n in args.n):
        raise UsageError("Benchmark sample sizes must be even.")
    config = _solver_config(args)
    largest = max(args.n)
    rows = []
    for kind in args.scenarios:
        timings = {(q, n): [] for q in args.q_values for n in args.n}
        missed = {key: 0 for key in timings}
        for rep in range(args.reps):
            full, _ = _bench_spec(kind, largest, args.p, args.seed + rep).generate()
            for n in args.n:
                data = _nested_subset(full, n)
                for q in args.q_values:
                    start = time.perf_counter()
                    path = fit_linear_path(data, q, args.lambdas, config)
                    timings[(q, n)].append(time.perf_counter() - start)
                    missed[(q, n)] += sum(1 for _, report in path if not report.converged)
        for (q, n), values in timings.items():
            rows.append(
                {
                    "scenario": kind.value,
                    "n": n,
                    "p": full.p,
                    "q": q,
                    "lambdas": len(args.lambdas),
                    "reps": args.reps,
                    "mean_seconds": float(np.mean(values)),
                    "sd_seconds": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
                    "nonconverged": missed[(q, n)],
                }
            )
        logger.info("benchmarked %s over %d replicate(s)", kind.value, args.reps)

    frame = pd.DataFrame(rows)
    if args.out:
        frame.to_csv(args.out, index=False)
    if args.format == "table":
        sys.stdout.write(frame.to_markdown(index=False) + "\n")
    else:
        for row in rows:
            _emit({"command": "bench", **row})
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the oracle checks; exit 1 if any of them fails."""
    results = run_verification(args.only, seed=args.seed, lipschitz_scale=args.lipschitz_scale)
    lines = [json.dumps(r.to_dict(), default=_to_builtin) for r in results]
    if args.out:
        Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    for line in lines:
        sys.stdout.write(line + "\n")
    failed = sum(1 for r in results if not r.passed)
    _emit({"command": "verify", "checks": len(results), "failed": failed})
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for progress, -vv for solver detail."
    )
    parser.add_argument("--seed", type=int, default=0, help="Seed of every random choice.")
    return parser


def _solver_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--q", type=_positive_float, default=1.0, help="Loss exponent q > 0.")
    parser.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    parser.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)
    parser.add_argument(
        "--strict", action="store_true", help="Exit 4 if any fit does not converge."
    )
    return parser


def _data_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("data", type=Path, help="Training data (CSV unless --libsvm).")
    parser.add_argument(
        "--label-column",
        type=_label_column,
        default=DEFAULT_LABEL_COLUMN,
        help="Label column position or name (default: last).",
    )
    parser.add_argument("--no-header", action="store_true", help="The CSV has no header row.")
    parser.add_argument("--libsvm", action="store_true", help="Read sparse 'label idx:value' data.")
    parser.add_argument("--standardize", action="store_true", help="Standardize feature columns.")
    parser.add_argument(
        "--weights", type=_class_weights, default=None, help="Per-class weights as 'w+:w-'."
    )
    parser.add_argument("--kernel", choices=KERNEL_CHOICES, default="linear")
    parser.add_argument(
        "--sigma", type=_positive_float, default=None, help="Gaussian bandwidth (median heuristic)."
    )
    parser.add_argument("--degree", type=_positive_int, default=2, help="Polynomial degree.")
    parser.add_argument("--offset", type=float, default=1.0, help="Polynomial offset.")
    parser.add_argument("--out", default=DEFAULT_MODEL_PATH, help="Model file to write.")
    parser.add_argument("--track", action="store_true", help="Log the run to MLflow.")
    parser.add_argument("--experiment", default=None, help="MLflow experiment name.")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gendwd", description="Generalized distance weighted discrimination."
    )
    commands = parser.add_subparsers(dest="command", required=True)
    common, solver, data = _common_parser(), _solver_parser(), _data_parser()

    fit = commands.add_parser(
        "fit", parents=[common, solver, data], help="Fit at one lambda or along a path."
    )
    penalty = fit.add_mutually_exclusive_group(required=True)
    penalty.add_argument("--lambda", dest="lam", type=_positive_float, help="Penalty lambda > 0.")
    penalty.add_argument(
        "--lambda-path",
        type=_float_list,
        help="Comma-separated penalties; model i is written to <stem>_i<suffix>.",
    )
    fit.set_defaults(handler=cmd_fit)

    pred = commands.add_parser("predict", parents=[common], help="Predict with a saved model.")
    pred.add_argument("model", type=Path, help="Model file written by fit or cv.")
    pred.add_argument("data", type=Path, help="CSV of feature rows.")
    pred.add_argument("--out", default=DEFAULT_PREDICTIONS_PATH, help="Predictions CSV to write.")
    pred.add_argument("--scores", action="store_true", help="Add a column of decision values.")
    pred.add_argument("--no-header", action="store_true", help="The CSV has no header row.")
    pred.add_argument(
        "--label-column",
        type=_label_column,
        default=None,
        help="Label column to split off and score predictions against.",
    )
    pred.set_defaults(handler=cmd_predict)

    cv = commands.add_parser(
        "cv", parents=[common, solver, data], help="Tune lambda (and sigma) by cross-validation."
    )
    cv.add_argument("--folds", type=int, default=5)
    cv.add_argument("--lambda-grid", type=_float_list, default=None)
    cv.add_argument("--sigma-grid", type=_float_list, default=None)
    cv.add_argument(
        "--train-ratio",
        type=_ratio,
        default=None,
        help="Hold out a stratified test split; cross-validate on this fraction of the rows.",
    )
    cv.add_argument("--grid-out", default=DEFAULT_GRID_PATH, help="CSV of every grid point.")
    cv.set_defaults(handler=cmd_cv)

    sim = commands.add_parser("simulate", parents=[common], help="Generate a synthetic dataset.")
    sim.add_argument("--scenario", type=_scenario, required=True)
    sim.add_argument("--n", type=_positive_int, default=None)
    sim.add_argument("--p", type=_positive_int, default=None)
    sim.add_argument("--shared-outlier-coordinate", action="store_true")
    sim.add_argument("--out", default=None, help="Dataset CSV (default <scenario>_seed<seed>.csv).")
    sim.add_argument(
        "--grid-out", default=None, help="Mixture only: CSV of Bayes scores on a grid."
    )
    sim.add_argument("--grid-size", type=_positive_int, default=DEFAULT_GRID_SIZE)
    sim.add_argument("--n-mc", type=_positive_int, default=DEFAULT_MONTE_CARLO)
    sim.set_defaults(handler=cmd_simulate)

    bench = commands.add_parser("bench", parents=[common, solver], help="Time linear fit paths.")
    bench.add_argument(
        "--scenarios",
        type=_scenario_list,
        default=[SCENARIO_ALIASES[s] for s in DEFAULT_BENCH_SCENARIOS],
    )
    bench.add_argument("--q-values", type=_float_list, default=[1.0])
    bench.add_argument("--lambdas", type=_float_list, default=list(DEFAULT_BENCH_LAMBDAS))
    bench.add_argument("--n", type=_int_list, default=[500], help="Comma-separated sample sizes.")
    bench.add_argument("--p", type=_positive_int, default=50)
    bench.add_argument("--reps", type=_positive_int, default=DEFAULT_BENCH_REPS)
    bench.add_argument("--out", default=None, help="Timing CSV to write.")
    bench.add_argument("--format", choices=("jsonl", "table"), default="jsonl")
    bench.set_defaults(handler=cmd_bench)

    ver = commands.add_parser("verify", parents=[common], help="Run the oracle checks.")
    ver.add_argument("--only", type=_family_list, default=None, help="Comma-separated families.")
    ver.add_argument("--lipschitz-scale", type=_positive_float, default=1.0)
    ver.add_argument("--out", default=None, help="Also write the JSON-lines report here.")
    ver.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except (UsageError, ValidationError) as e:
        sys.stderr.write(f"gendwd {args.command}: error: {e}\n")
        return EXIT_USAGE
    except (DatasetError, ModelFileError) as e:
        sys.stderr.write(f"gendwd {args.command}: error: {e}\n")
        return EXIT_DATA
    except SingularSystemError as e:
        sys.stderr.write(f"gendwd {args.command}: error: {e}\n")
        return EXIT_NUMERICAL
    except ValueError as e:
        sys.stderr.write(f"gendwd {args.command}: error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
