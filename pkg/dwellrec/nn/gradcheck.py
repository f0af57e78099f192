"""
Finite-difference gradient checking.

Compares reverse-mode gradients with central differences
``(f(x + eps) - f(x - eps)) / (2 eps)`` coordinate by coordinate; the
relative error of a coordinate is ``|g - g_fd| / max(1e-8, |g| + |g_fd|)``.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from dwellrec.core.exceptions import InvalidInputError, NumericError
from dwellrec.nn.params import ParamSet

RELATIVE_FLOOR = 1e-8

LossFn = Callable[[bool], float]
"""f(compute_grads) -> scalar loss; accumulates gradients when asked."""


@dataclass
class GradCheckResult:
    """Worst coordinate found by a gradient check."""

    max_rel_error: float
    worst_param: str = ""
    worst_index: tuple = ()
    n_coords: int = 0

    def __float__(self) -> float:
        return self.max_rel_error

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_rel_error < tolerance


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(RELATIVE_FLOOR, abs(analytic) + abs(numeric))


def _finite(value: float, where: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise NumericError(f"loss is not finite {where}")
    return value


def grad_check(
    f: LossFn,
    params: ParamSet,
    eps: float = 1e-5,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    names: Optional[Sequence[str]] = None,
) -> GradCheckResult:
    """
    Check reverse-mode gradients of f against central differences.

    Args:
        f: Loss function; f(True) must accumulate gradients into params
        params: Parameters to perturb
        eps: Finite-difference step
        max_coords: Coordinates sampled per parameter (None = all)
        rng: Generator used for coordinate sampling
        names: Restrict the check to these parameter names

    Returns:
        GradCheckResult with the worst relative error

    Raises:
        InvalidInputError: eps <= 0
        NumericError: f returns a non-finite value
    """
    if eps <= 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    rng = rng or np.random.default_rng(0)

    params.zero_grad()
    _finite(f(True), "at the base point")
    analytic = {p.name: p.grad.copy() for p in params}

    result = GradCheckResult(max_rel_error=0.0)
    selected = [p for p in params if p.trainable and (names is None or p.name in names)]
    for param in selected:
        flat = param.value.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        grad = analytic[param.name].reshape(-1)

        for i in coords:
            original = flat[i]
            flat[i] = original + eps
            up = _finite(f(False), f"at {param.name}[{i}] + eps")
            flat[i] = original - eps
            down = _finite(f(False), f"at {param.name}[{i}] - eps")
            flat[i] = original

            err = relative_error(float(grad[i]), (up - down) / (2.0 * eps))
            result.n_coords += 1
            if err > result.max_rel_error:
                result.max_rel_error = err
                result.worst_param = param.name
                result.worst_index = tuple(int(j) for j in np.unravel_index(i, param.shape))

    return result
