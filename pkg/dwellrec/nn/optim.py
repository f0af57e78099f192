"""
Adam optimizer.

Moments are kept per parameter name; bias-corrected update
``value -= lr * m_hat / (sqrt(v_hat) + eps)``. Frozen parameters are skipped.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from dwellrec.core.exceptions import NumericError
from dwellrec.nn.params import ParamSet


@dataclass
class AdamState:
    """
    Optimizer state.

    Attributes:
        lr: Learning rate
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator stabilizer
        step: Updates applied so far
        m: First moments by parameter name
        v: Second moments by parameter name
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParamSet, state: AdamState) -> AdamState:
    """
    Apply one Adam update to every trainable parameter in place.

    Raises:
        NumericError: A gradient holds NaN or infinity (names the parameter);
            no parameter is modified in that case
    """
    trainable = params.trainable()
    for param in trainable:
        if not np.all(np.isfinite(param.grad)):
            raise NumericError(f"non-finite gradient in parameter {param.name}")

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step

    for param in trainable:
        g = param.grad
        if param.name not in state.m:
            state.m[param.name] = np.zeros_like(param.value)
            state.v[param.name] = np.zeros_like(param.value)
        m = state.m[param.name]
        v = state.v[param.name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        param.value -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)

    return state
