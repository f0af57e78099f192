"""
Layers used by the user encoders.

Each layer registers its parameters in a shared ParamSet under a name
prefix, and exposes:

- ``forward(...) -> (output, cache)``
- ``backward(grad_output, cache) -> input gradients``

backward accumulates (adds) parameter gradients, so a layer applied twice in
one forward pass (weight sharing) receives the sum of both contributions.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np

from dwellrec.core.exceptions import ConfigError, ShapeError
from dwellrec.nn import functional as F
from dwellrec.nn.params import ParamSet, glorot_uniform


class Layer(ABC):
    """Base class for layers with named parameters."""

    def __init__(self, params: ParamSet, name: str) -> None:
        self.params = params
        self.name = name

    def _p(self, suffix: str):
        return self.params[f"{self.name}.{suffix}"]

    @abstractmethod
    def forward(self, *inputs: Any) -> Tuple[Any, Any]:
        """Compute the output and the cache needed by backward."""
        pass

    @abstractmethod
    def backward(self, grad: Any, cache: Any) -> Any:
        """Accumulate parameter gradients and return input gradients."""
        pass


def _valid_mask(mask: Optional[np.ndarray], rows: int) -> np.ndarray:
    if mask is None:
        return np.ones(rows, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (rows,):
        raise ShapeError("row mask", (rows,), mask.shape)
    return mask


# =============================================================================
# Linear
# =============================================================================


class Linear(Layer):
    """Affine map x @ W + b."""

    def __init__(
        self,
        params: ParamSet,
        name: str,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        bias: bool = True,
    ) -> None:
        super().__init__(params, name)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.bias = bias
        params.add(f"{name}.W", glorot_uniform(rng, in_dim, out_dim, (in_dim, out_dim)))
        if bias:
            params.add(f"{name}.b", np.zeros(out_dim))

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        b = self._p("b").value if self.bias else None
        return F.linear(x, self._p("W").value, b), x

    def backward(self, dy: np.ndarray, x: np.ndarray) -> np.ndarray:
        W = self._p("W")
        dx, dW, db = F.linear_backward(dy, x, W.value)
        W.grad += dW
        if self.bias:
            self._p("b").grad += db
        return dx


# =============================================================================
# Multi-head attention
# =============================================================================


@dataclass
class AttentionCache:
    q_in: np.ndarray
    k_in: np.ndarray
    v_in: np.ndarray
    mask: np.ndarray
    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray
    A: np.ndarray
    C: np.ndarray


class MultiHeadAttention(Layer):
    """
    Scaled dot-product multi-head attention.

    Queries and keys may have a different feature dimension than values.
    Every head attends only to valid key rows; outputs at padded query rows
    are zero. Output dimension is heads * head_dim.
    """

    def __init__(
        self,
        params: ParamSet,
        name: str,
        qk_dim: int,
        v_dim: int,
        heads: int,
        head_dim: int,
        rng: np.random.Generator,
    ) -> None:
        super().__init__(params, name)
        if heads <= 0 or head_dim <= 0:
            raise ConfigError(f"heads * head_dim must be positive, got {heads} * {head_dim}", key="encoder.heads")
        self.heads = heads
        self.head_dim = head_dim
        self.out_dim = heads * head_dim
        self.qk_dim = qk_dim
        self.v_dim = v_dim
        out = self.out_dim
        params.add(f"{name}.Wq", glorot_uniform(rng, qk_dim, out, (qk_dim, out)))
        params.add(f"{name}.Wk", glorot_uniform(rng, qk_dim, out, (qk_dim, out)))
        params.add(f"{name}.Wv", glorot_uniform(rng, v_dim, out, (v_dim, out)))
        params.add(f"{name}.Wo", glorot_uniform(rng, out, out, (out, out)))
        params.add(f"{name}.bo", np.zeros(out))

    def _split(self, x: np.ndarray) -> np.ndarray:
        # (H, h*a) -> (h, H, a)
        return x.reshape(x.shape[0], self.heads, self.head_dim).transpose(1, 0, 2)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        # (h, H, a) -> (H, h*a)
        return x.transpose(1, 0, 2).reshape(x.shape[1], self.out_dim)

    def forward(
        self,
        q_in: np.ndarray,
        k_in: np.ndarray,
        v_in: np.ndarray,
        mask: Optional[np.ndarray] = None,
    ) -> Tuple[np.ndarray, AttentionCache]:
        rows = q_in.shape[0]
        if k_in.shape[0] != rows:
            raise ShapeError("attention query/key rows", q_in.shape, k_in.shape)
        if v_in.shape[0] != k_in.shape[0]:
            raise ShapeError("attention key/value rows", k_in.shape, v_in.shape)
        if q_in.shape[1] != self.qk_dim or k_in.shape[1] != self.qk_dim:
            raise ShapeError("attention query/key features", q_in.shape, self._p("Wq").shape)
        if v_in.shape[1] != self.v_dim:
            raise ShapeError("attention value features", v_in.shape, self._p("Wv").shape)
        mask = _valid_mask(mask, rows)

        Q = self._split(q_in @ self._p("Wq").value)
        K = self._split(k_in @ self._p("Wk").value)
        V = self._split(v_in @ self._p("Wv").value)

        scores = Q @ K.transpose(0, 2, 1) / np.sqrt(self.head_dim)
        A, _ = F.softmax_rows(scores, mask[None, None, :])
        C = self._merge(A @ V)
        out = (C @ self._p("Wo").value + self._p("bo").value) * mask[:, None]

        cache = AttentionCache(q_in, k_in, v_in, mask, Q, K, V, A, C)
        return out, cache

    def logits(self, q_in: np.ndarray, k_in: np.ndarray) -> np.ndarray:
        """Per-head attention logits, (heads, rows, rows)."""
        Q = self._split(q_in @ self._p("Wq").value)
        K = self._split(k_in @ self._p("Wk").value)
        return Q @ K.transpose(0, 2, 1) / np.sqrt(self.head_dim)

    def backward(
        self,
        dout: np.ndarray,
        cache: AttentionCache,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns gradients for (q_in, k_in, v_in)."""
        Wq, Wk, Wv, Wo = self._p("Wq"), self._p("Wk"), self._p("Wv"), self._p("Wo")
        dout = dout * cache.mask[:, None]

        Wo.grad += cache.C.T @ dout
        self._p("bo").grad += dout.sum(axis=0)
        dC = self._split(dout @ Wo.value.T)

        dA = dC @ cache.V.transpose(0, 2, 1)
        dV = cache.A.transpose(0, 2, 1) @ dC
        dS = F.softmax_backward(dA, cache.A) / np.sqrt(self.head_dim)
        dQ = dS @ cache.K
        dK = dS.transpose(0, 2, 1) @ cache.Q

        dQm, dKm, dVm = self._merge(dQ), self._merge(dK), self._merge(dV)
        Wq.grad += cache.q_in.T @ dQm
        Wk.grad += cache.k_in.T @ dKm
        Wv.grad += cache.v_in.T @ dVm
        return dQm @ Wq.value.T, dKm @ Wk.value.T, dVm @ Wv.value.T


# =============================================================================
# Attention pooling
# =============================================================================


@dataclass
class PoolCache:
    x: np.ndarray
    hidden: np.ndarray
    alpha: np.ndarray
    empty: bool


class AttentionPooling(Layer):
    """
    Additive attention pooling.

    s_i = v . tanh(x_i @ W + b); alpha = softmax over valid rows;
    u = sum_i alpha_i x_i. With no valid row the output is the zero vector
    and the cache carries ``empty=True``.
    """

    def __init__(
        self,
        params: ParamSet,
        name: str,
        in_dim: int,
        att_dim: int,
        rng: np.random.Generator,
    ) -> None:
        super().__init__(params, name)
        self.in_dim = in_dim
        self.att_dim = att_dim
        params.add(f"{name}.W", glorot_uniform(rng, in_dim, att_dim, (in_dim, att_dim)))
        params.add(f"{name}.b", np.zeros(att_dim))
        params.add(f"{name}.v", glorot_uniform(rng, att_dim, 1, (att_dim,)))

    def forward(self, x: np.ndarray, mask: Optional[np.ndarray] = None) -> Tuple[np.ndarray, PoolCache]:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError("attention pooling", x.shape, self._p("W").shape)
        mask = _valid_mask(mask, x.shape[0])

        hidden = np.tanh(x @ self._p("W").value + self._p("b").value)
        scores = hidden @ self._p("v").value
        alpha, empty = F.softmax_rows(scores, mask)
        u = alpha @ x
        return u, PoolCache(x=x, hidden=hidden, alpha=alpha, empty=bool(empty))

    def backward(self, du: np.ndarray, cache: PoolCache) -> np.ndarray:
        W, v = self._p("W"), self._p("v")
        dalpha = cache.x @ du
        dx = np.outer(cache.alpha, du)

        ds = F.softmax_backward(dalpha, cache.alpha)
        v.grad += cache.hidden.T @ ds
        dz = F.tanh_backward(np.outer(ds, v.value), cache.hidden)
        W.grad += cache.x.T @ dz
        self._p("b").grad += dz.sum(axis=0)
        return dx + dz @ W.value.T


# =============================================================================
# Dwell embedding and reading-preference gate
# =============================================================================


class DwellEmbedding(Layer):
    """Bucket-id embedding table whose padding row 0 stays zero."""

    def __init__(
        self,
        params: ParamSet,
        name: str,
        vocab_size: int,
        dim: int,
        rng: np.random.Generator,
    ) -> None:
        super().__init__(params, name)
        self.vocab_size = vocab_size
        self.dim = dim
        table = glorot_uniform(rng, vocab_size, dim, (vocab_size, dim))
        table[0] = 0.0
        params.add(f"{name}.table", table)

    def forward(self, ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ids = np.asarray(ids, dtype=np.int64)
        return F.embed_lookup(self._p("table").value, ids), ids

    def backward(self, dy: np.ndarray, ids: np.ndarray) -> None:
        table = self._p("table")
        grad = F.embed_backward(dy, ids, self.vocab_size)
        grad[0] = 0.0
        table.grad += grad


@dataclass
class GateCache:
    pool: PoolCache
    pooled: np.ndarray
    hidden_cache: np.ndarray
    hidden: np.ndarray
    logits_cache: np.ndarray
    gate: np.ndarray


class ReadingPreferenceGate(Layer):
    """
    Two-way gate conditioned on a dwell-embedding sequence.

    G = softmax(tanh(pool(D) @ W_d + b_d) @ W_g + b_g), G in R^2, with index
    0 weighting the effective-click view and index 1 the original view.
    """

    def __init__(
        self,
        params: ParamSet,
        name: str,
        dwell_dim: int,
        att_dim: int,
        rng: np.random.Generator,
    ) -> None:
        super().__init__(params, name)
        self.pool = AttentionPooling(params, f"{name}.pool", dwell_dim, att_dim, rng)
        self.dense = Linear(params, f"{name}.dense", dwell_dim, dwell_dim, rng)
        self.logits = Linear(params, f"{name}.logits", dwell_dim, 2, rng)

    def forward(self, dwell_rows: np.ndarray, mask: Optional[np.ndarray] = None) -> Tuple[np.ndarray, GateCache]:
        pooled, pool_cache = self.pool.forward(dwell_rows, mask)
        z, hidden_cache = self.dense.forward(pooled)
        hidden = np.tanh(z)
        logits, logits_cache = self.logits.forward(hidden)
        gate, _ = F.softmax_rows(logits)
        return gate, GateCache(pool_cache, pooled, hidden_cache, hidden, logits_cache, gate)

    def backward(self, dgate: np.ndarray, cache: GateCache) -> np.ndarray:
        dlogits = F.softmax_backward(dgate, cache.gate)
        dhidden = self.logits.backward(dlogits, cache.logits_cache)
        dz = F.tanh_backward(dhidden, cache.hidden)
        dpooled = self.dense.backward(dz, cache.hidden_cache)
        return self.pool.backward(dpooled, cache.pool)
