"""Weight update between PatchMatch sweeps.

The sweep itself is the E-step: with weights fixed, every pixel moves to the
cheapest hypothesis it can reach. The M-step then chooses weights that
minimize the view's mean aggregated cost under the simplex constraints
sum(w) = 1 and w_k >= eta, which is a linear program with a closed-form
vertex solution.
"""

from __future__ import annotations

from collections.abc import Sequence
import logging

import numpy as np
from numpy.typing import NDArray

from edgemvs.core.model.camera import FloatArray
from edgemvs.core.model.errors import ConfigurationError
from edgemvs.core.model.hypothesis import CostWeights

logger = logging.getLogger(__name__)

#: Relative tolerance under which two term means count as tied.
TIE_TOLERANCE = 1e-9


def term_means(
    terms: FloatArray, supervised: NDArray[np.bool_]
) -> tuple[FloatArray, NDArray[np.bool_]]:
    """Per-term means over a view and which terms carry any signal.

    Args:
        terms: (4, N) normalized per-pixel terms in weight order
        supervised: (N,) pixels with a valid restored depth

    Returns:
        (means, has_data); the depth term only averages supervised pixels.
    """
    means = terms[:3].mean(axis=1) if terms.shape[1] else np.zeros(3)
    has_depth = bool(supervised.any())
    depth_mean = float(terms[3][supervised].mean()) if has_depth else 0.0
    has_data = np.array([terms.shape[1] > 0] * 3 + [has_depth])
    return np.append(means, depth_mean), has_data


def em_update_weights(
    means: Sequence[float] | FloatArray,
    min_weight: float,
    active: Sequence[bool] | None = None,
) -> CostWeights:
    """M-step: minimize sum(w_k * mean_k) over the constrained simplex.

    Every active term keeps ``min_weight``; the remaining mass goes to the
    active term(s) with the smallest mean, shared equally between ties.
    Inactive terms get weight 0.

    Raises:
        ConfigurationError: If the active terms cannot all reach ``min_weight``
    """
    values = np.asarray(means, dtype=np.float64)
    mask = np.ones(4, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise ConfigurationError("at least one cost term must stay active")
    if count * min_weight > 1.0 + 1e-12:
        raise ConfigurationError(
            f"min_weight {min_weight} is infeasible for {count} active terms"
        )

    lowest = values[mask].min()
    winners = mask & np.isclose(values, lowest, rtol=TIE_TOLERANCE, atol=0.0)
    updated = np.where(mask, min_weight, 0.0)
    updated[winners] += (1.0 - count * min_weight) / int(winners.sum())
    result = CostWeights.from_sequence(updated)
    logger.debug("weights -> %s (means %s)", result, np.round(values, 4))
    return result
