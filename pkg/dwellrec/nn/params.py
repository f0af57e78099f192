"""
Named trainable parameters.

Every layer registers its tensors in a shared, ordered ParamSet under dotted
names (``user.mha.Wq``). The insertion order is the checkpoint order and the
optimizer order, so two models built from the same config and seed hold the
same parameter layout.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from dwellrec.core.exceptions import DataFormatError, ShapeError

DTYPE = np.float64


@dataclass
class Param:
    """
    A tensor with its accumulated gradient.

    Attributes:
        name: Dotted parameter name
        value: Parameter tensor
        grad: Gradient, same shape as value
        trainable: False for frozen tensors (skipped by the optimizer)
    """

    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None, repr=False)
    trainable: bool = True

    def __post_init__(self) -> None:
        self.value = np.array(self.value, dtype=DTYPE)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        elif self.grad.shape != self.value.shape:
            raise ShapeError(f"param {self.name}", self.value.shape, self.grad.shape)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


class ParamSet:
    """Ordered collection of named parameters."""

    def __init__(self) -> None:
        self._params: Dict[str, Param] = {}

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> Param:
        """Register a new parameter; names must be unique."""
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        param = Param(name=name, value=value, trainable=trainable)
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Param:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Param]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def trainable(self) -> List[Param]:
        return [p for p in self._params.values() if p.trainable]

    def n_values(self) -> int:
        """Total number of scalar values."""
        return sum(p.size for p in self._params.values())

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def state(self) -> Dict[str, np.ndarray]:
        """Copy of every value, in registration order."""
        return {name: p.value.copy() for name, p in self._params.items()}

    def load_state(self, state: Mapping[str, np.ndarray], source: Optional[str] = None) -> None:
        """
        Overwrite values from a name → array mapping.

        Raises:
            DataFormatError: Missing or unexpected names
            ShapeError: A stored shape differs from the registered one
        """
        missing = [n for n in self._params if n not in state]
        extra = [n for n in state if n not in self._params]
        if missing or extra:
            raise DataFormatError(
                f"parameter names do not match (missing={missing}, unexpected={extra})",
                path=source,
            )
        for name, param in self._params.items():
            value = np.asarray(state[name], dtype=DTYPE)
            if value.shape != param.shape:
                raise ShapeError(f"load {name}", param.shape, value.shape)
            param.value[...] = value


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: Tuple[int, ...]) -> np.ndarray:
    """Glorot/Xavier uniform initialization."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
