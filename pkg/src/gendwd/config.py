import logging
import os

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 10_000
NUM_THREADS_ENV_VAR = "GENDWD_NUM_THREADS"


class SolverConfig(BaseModel):
    """Stopping rule and conditioning knobs shared by the linear and kernel MM solvers."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(
        DEFAULT_TOL,
        gt=0,
        description="Stop when the largest absolute change of any coefficient falls below this value.",
    )
    max_iter: int = Field(
        DEFAULT_MAX_ITER, ge=1, description="Maximum number of MM updates per penalty value."
    )
    jitter: float = Field(
        0.0,
        ge=0,
        description="Constant added to the diagonal of every system matrix before factorization.",
    )


def get_num_threads() -> int:
    """Worker count for concurrent fits, taken from ``GENDWD_NUM_THREADS`` when set."""
    default = max(os.cpu_count() or 1, 1)
    raw = os.environ.get(NUM_THREADS_ENV_VAR)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {NUM_THREADS_ENV_VAR}={raw!r}; using {default}.")
        return default
    if value < 1:
        logger.warning(f"Ignoring non-positive {NUM_THREADS_ENV_VAR}={raw!r}; using {default}.")
        return default
    return value
