"""
Functional building blocks with exact reverse-mode gradients.

Row-vector convention throughout: inputs are (rows, features) and a linear
map is ``x @ W + b`` with ``W`` of shape (in, out). Each forward function has
a matching ``*_backward`` taking the upstream gradient and whatever the
forward returned for it.

Masks are boolean arrays where True marks a valid position.
"""

from typing import Optional, Tuple

import numpy as np

from dwellrec.core.exceptions import InvalidInputError, NumericError, ShapeError


def check_finite(name: str, x: np.ndarray) -> np.ndarray:
    """Reject NaN and infinities at a layer boundary."""
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values in {name}")
    return x


# =============================================================================
# Linear and activations
# =============================================================================


def linear(x: np.ndarray, W: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """y = x @ W + b for a vector or a stack of row vectors."""
    if x.shape[-1] != W.shape[0]:
        raise ShapeError("linear", x.shape, W.shape)
    if b is not None and b.shape != (W.shape[1],):
        raise ShapeError("linear bias", W.shape, b.shape)
    y = x @ W
    return y + b if b is not None else y


def linear_backward(
    dy: np.ndarray,
    x: np.ndarray,
    W: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dW, db)."""
    x2 = x.reshape(-1, W.shape[0])
    dy2 = dy.reshape(-1, W.shape[1])
    dW = x2.T @ dy2
    db = dy2.sum(axis=0)
    dx = (dy2 @ W.T).reshape(x.shape)
    return dx, dW, db


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def tanh_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient through tanh given its output y."""
    return dy * (1.0 - y * y)


# =============================================================================
# Masked softmax
# =============================================================================


def softmax_rows(x: np.ndarray, mask: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Softmax over the last axis restricted to valid positions.

    Args:
        x: Logits of any rank
        mask: Boolean validity mask broadcastable to x (None = all valid)

    Returns:
        Tuple of (weights, empty) where masked positions get exactly zero
        weight and ``empty`` flags rows with no valid position (returned as
        all-zero rows)
    """
    if mask is None:
        mask = np.ones(x.shape, dtype=bool)
    else:
        try:
            mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        except ValueError:
            raise ShapeError("softmax_rows", x.shape, np.shape(mask)) from None

    empty = ~mask.any(axis=-1)
    logits = np.where(mask, x, -np.inf)
    row_max = np.max(logits, axis=-1, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.where(mask, np.exp(logits - row_max), 0.0)
    total = e.sum(axis=-1, keepdims=True)
    y = np.divide(e, total, out=np.zeros_like(e), where=total > 0)
    return y, empty


def softmax_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the logits given the softmax output y."""
    return y * (dy - np.sum(dy * y, axis=-1, keepdims=True))


def logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + float(np.log(np.sum(np.exp(x - m))))


# =============================================================================
# Dropout, lookup, concatenation
# =============================================================================


def dropout(
    x: np.ndarray,
    p: float,
    rng: Optional[np.random.Generator],
    training: bool,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Inverted dropout.

    Returns:
        Tuple of (output, scaled keep mask); the mask is None when dropout
        is the identity (evaluation mode or p = 0)
    """
    if not 0.0 <= p < 1.0:
        raise InvalidInputError(f"dropout rate must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    if rng is None:
        raise InvalidInputError("dropout in training mode needs a random generator")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * keep, keep


def dropout_backward(dy: np.ndarray, keep: Optional[np.ndarray]) -> np.ndarray:
    return dy if keep is None else dy * keep


def embed_lookup(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Rows of table selected by integer ids."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise InvalidInputError(
            f"embedding ids must lie in [0, {table.shape[0] - 1}], got range "
            f"[{ids.min()}, {ids.max()}]"
        )
    return table[ids]


def embed_backward(dy: np.ndarray, ids: np.ndarray, vocab_size: int) -> np.ndarray:
    """Scatter-add row gradients back into a table-shaped gradient."""
    grad = np.zeros((vocab_size, dy.shape[-1]), dtype=dy.dtype)
    np.add.at(grad, np.asarray(ids, dtype=np.int64), dy)
    return grad


def concat_features(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Concatenate along the feature axis; leading shapes must match."""
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeError("concat_features", a.shape, b.shape)
    return np.concatenate([a, b], axis=-1)


def concat_backward(dc: np.ndarray, a_dim: int) -> Tuple[np.ndarray, np.ndarray]:
    return dc[..., :a_dim], dc[..., a_dim:]
