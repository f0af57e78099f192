"""
User Encoder Base Classes and Protocols.

A user encoder turns an encoded click history into a user vector of
dimension heads * head_dim. Every encoder is a plugin: it registers its own
parameters in the model's ParamSet and implements a forward pass returning
(vector, cache) and a backward pass accumulating parameter gradients.

Design Pattern: Strategy Pattern
- Each variant is a strategy for modeling user interest
- Variants are interchangeable behind RecommenderModel
- The model does not need to know how a variant uses dwell time
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.history import EncodedHistory
from dwellrec.nn import functional as F
from dwellrec.nn.layers import AttentionPooling, Linear, MultiHeadAttention, PoolCache
from dwellrec.nn.params import ParamSet


@runtime_checkable
class UserEncoder(Protocol):
    """
    Protocol defining the interface for all user encoders.

    Each encoder must implement:
    - variant: Registry key
    - uses_dwell: Whether dwell buckets influence the output
    - encode(): History to user vector
    - backward(): Gradient of the user vector into parameter gradients
    """

    @property
    def variant(self) -> EncoderVariant:
        ...

    @property
    def uses_dwell(self) -> bool:
        ...

    def encode(
        self,
        eh: EncodedHistory,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, Any]:
        ...

    def backward(self, du: np.ndarray, cache: Any) -> None:
        ...


class BaseUserEncoder(ABC):
    """
    Abstract base class for user encoders.

    Args:
        cfg: Encoder configuration
        params: Shared parameter set the encoder registers into
        rng: Initialization generator
        news_proj: The news-side projection shared with candidate scoring
    """

    prefix = "user"

    def __init__(
        self,
        cfg: EncoderConfig,
        params: ParamSet,
        rng: np.random.Generator,
        news_proj: Linear,
    ) -> None:
        self.cfg = cfg
        self.params = params
        self.news_proj = news_proj

    @property
    @abstractmethod
    def variant(self) -> EncoderVariant:
        pass

    @property
    def uses_dwell(self) -> bool:
        return self.variant.uses_dwell

    @abstractmethod
    def encode(
        self,
        eh: EncodedHistory,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, Any]:
        """
        Encode a history into a user vector.

        Args:
            eh: Encoded history
            training: Enables dropout
            rng: Dropout generator (required when training with dropout)

        Returns:
            Tuple of (user vector, cache for backward)
        """
        pass

    @abstractmethod
    def backward(self, du: np.ndarray, cache: Any) -> None:
        """Accumulate parameter gradients from the user-vector gradient."""
        pass

    def _dropout(self, x: np.ndarray, training: bool, rng: Optional[np.random.Generator]):
        return F.dropout(x, self.cfg.dropout, rng, training)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(variant='{self.variant.value}')"


@dataclass
class ContextCache:
    attention: Any
    keep_out: Optional[np.ndarray]
    pool: PoolCache


class AttentiveContext:
    """
    Multi-head self-attention followed by attention pooling.

    Shared by every attention-based variant; calling it twice in one forward
    pass reuses the same weights.
    """

    def __init__(
        self,
        cfg: EncoderConfig,
        params: ParamSet,
        name: str,
        qk_dim: int,
        rng: np.random.Generator,
    ) -> None:
        self.cfg = cfg
        self.mha = MultiHeadAttention(params, f"{name}.mha", qk_dim, cfg.news_dim, cfg.heads, cfg.head_dim, rng)
        self.pool = AttentionPooling(params, f"{name}.pool", cfg.out_dim, cfg.att_dim, rng)

    def forward(
        self,
        qk: np.ndarray,
        values: np.ndarray,
        mask: np.ndarray,
        training: bool,
        rng: Optional[np.random.Generator],
    ) -> Tuple[np.ndarray, ContextCache]:
        attended, att_cache = self.mha.forward(qk, qk, values, mask)
        attended, keep = F.dropout(attended, self.cfg.dropout, rng, training)
        u, pool_cache = self.pool.forward(attended, mask)
        return u, ContextCache(att_cache, keep, pool_cache)

    def backward(self, du: np.ndarray, cache: ContextCache) -> Tuple[np.ndarray, np.ndarray]:
        """Returns the gradients of (qk, values)."""
        d_att = F.dropout_backward(self.pool.backward(du, cache.pool), cache.keep_out)
        dq, dk, dv = self.mha.backward(d_att, cache.attention)
        return dq + dk, dv
