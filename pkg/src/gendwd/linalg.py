import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from gendwd.exceptions import SingularSystemError

logger = logging.getLogger(__name__)

# Relative diagonal jitter ladders, in units of the matrix scale passed by the caller.
LINEAR_JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
KERNEL_JITTER_LADDER = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


@dataclass(frozen=True, eq=False)
class SystemFactorization:
    """Cholesky factorization of an MM system matrix, reused across iterations at one penalty value.

    Attributes:
        matrix: The assembled matrix, without jitter.
        jitter: Absolute diagonal jitter that was added before the factorization succeeded.
    """

    matrix: np.ndarray
    jitter: float
    _factor: tuple

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, rhs)


def factorize_system(
    matrix: np.ndarray,
    *,
    scale: float,
    ladder: Sequence[float] = LINEAR_JITTER_LADDER,
    jitter_mask: Optional[np.ndarray] = None,
    base_jitter: float = 0.0,
) -> SystemFactorization:
    """Factorize a symmetric positive (semi)definite matrix, escalating diagonal jitter on failure.

    Args:
        matrix: Square symmetric matrix.
        scale: Reference magnitude multiplying each rung of ``ladder``.
        ladder: Increasing relative jitter levels tried in order.
        jitter_mask: Boolean vector selecting which diagonal entries receive ladder jitter; all when ``None``.
        base_jitter: Absolute jitter always added to the whole diagonal.

    Raises:
        SingularSystemError: If every rung fails.
    """
    size = matrix.shape[0]
    mask = np.ones(size, dtype=bool) if jitter_mask is None else jitter_mask
    diag = np.arange(size)
    last_error: Optional[Exception] = None
    for rung, level in enumerate(ladder):
        jitter = level * scale
        jittered = matrix.copy()
        jittered[diag, diag] += base_jitter
        jittered[diag[mask], diag[mask]] += jitter
        try:
            factor = cho_factor(jittered, lower=True, check_finite=True)
        except (LinAlgError, ValueError) as e:
            last_error = e
            continue
        if rung > 0:
            logger.warning(
                f"System matrix of size {size} needed diagonal jitter {jitter:.3g} to factorize."
            )
        else:
            logger.debug("factorized system of size %d with jitter %.3g", size, jitter)
        return SystemFactorization(matrix=matrix, jitter=jitter + base_jitter, _factor=factor)
    raise SingularSystemError(
        f"System matrix of size {size} is singular even with diagonal jitter "
        f"{ladder[-1] * scale:.3g}. Check for a zero penalty or degenerate inputs."
    ) from last_error
