import logging
import time
from pathlib import Path
from typing import Any, Optional, Union

try:
    import mlflow
    from mlflow.entities import Metric
except ImportError as e:
    raise ImportError(
        "Experiment tracking requires gendwd[tracking]. "
        "Please install with: pip install gendwd[tracking]"
    ) from e

from gendwd.linear import FitReport
from gendwd.tuning import CvResult

__all__ = ["log_cv", "log_fit"]

logger = logging.getLogger(__name__)

# MLflow rejects batches with more metrics than this
MAX_METRICS_PER_BATCH = 1000


def _start(experiment: Optional[str], run_name: str):
    if experiment:
        mlflow.set_experiment(experiment)
    return mlflow.start_run(run_name=run_name)


def _log_artifact(model_path: Optional[Union[str, Path]]) -> None:
    if model_path is not None:
        mlflow.log_artifact(str(model_path))


def _log_trace(run_id: str, key: str, values: list[float]) -> None:
    client = mlflow.MlflowClient()
    timestamp = int(time.time() * 1000)
    metrics = [Metric(key, value, timestamp, step) for step, value in enumerate(values)]
    for start in range(0, len(metrics), MAX_METRICS_PER_BATCH):
        client.log_batch(run_id, metrics=metrics[start : start + MAX_METRICS_PER_BATCH])


def log_fit(
    model: Any,
    report: FitReport,
    params: dict[str, Any],
    model_path: Optional[Union[str, Path]] = None,
    experiment: Optional[str] = None,
) -> str:
    """Record one fit as an MLflow run and return the run id.

    The objective trace is logged as the ``objective`` metric, one step per MM update, in batches.
    """
    with _start(experiment, "gendwd-fit") as run:
        mlflow.log_params({**params, "q": model.q, "lambda": model.lam})
        mlflow.log_metrics(
            {
                "iterations": report.iterations,
                "converged": float(report.converged),
                "final_objective": report.final_objective,
                "kkt_residual": report.kkt_residual,
                "wall_time": report.wall_time,
            }
        )
        _log_trace(run.info.run_id, "objective", report.objective_trace.tolist())
        _log_artifact(model_path)
        logger.info("logged fit to MLflow run %s", run.info.run_id)
        return run.info.run_id


def log_cv(
    result: CvResult,
    params: dict[str, Any],
    model_path: Optional[Union[str, Path]] = None,
    experiment: Optional[str] = None,
) -> str:
    """Record a cross-validation run, with the grid table attached, and return the run id."""
    with _start(experiment, "gendwd-cv") as run:
        chosen = {"best_lambda": result.best_lambda}
        if result.best_sigma is not None:
            chosen["best_sigma"] = result.best_sigma
        mlflow.log_params({**params, "q": result.q, **chosen})
        mlflow.log_metrics(
            {
                "best_error": result.best_error,
                "nonconverged": result.nonconverged,
                "refit_objective": result.report.final_objective,
            }
        )
        mlflow.log_table(result.to_frame(), artifact_file="cv_grid.json")
        _log_artifact(model_path)
        logger.info("logged cross-validation to MLflow run %s", run.info.run_id)
        return run.info.run_id
