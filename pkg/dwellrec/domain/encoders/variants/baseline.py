"""
Dwell-blind baseline encoders.

- BaseAttPoolEncoder: project every clicked-news row with the shared news
  projection, then attention-pool (content attention only)
- BaseMHAEncoder: multi-head self-attention over the clicked rows, then
  attention pooling

Neither variant reads dwell buckets, so masking dwell leaves their output
unchanged.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from dwellrec.domain.encoders.base import AttentiveContext, BaseUserEncoder, ContextCache
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.history import EncodedHistory
from dwellrec.nn.layers import AttentionPooling, Linear, PoolCache
from dwellrec.nn.params import ParamSet


@dataclass
class AttPoolCache:
    proj_input: np.ndarray
    pool: PoolCache


class BaseAttPoolEncoder(BaseUserEncoder):
    """Projected rows pooled by additive attention."""

    def __init__(self, cfg: EncoderConfig, params: ParamSet, rng: np.random.Generator, news_proj: Linear) -> None:
        super().__init__(cfg, params, rng, news_proj)
        self.pool = AttentionPooling(params, f"{self.prefix}.pool", cfg.out_dim, cfg.att_dim, rng)

    @property
    def variant(self) -> EncoderVariant:
        return EncoderVariant.BASE_ATTPOOL

    def encode(
        self,
        eh: EncodedHistory,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, AttPoolCache]:
        rows, _ = self._dropout(eh.rows, training, rng)
        projected, proj_input = self.news_proj.forward(rows)
        u, pool_cache = self.pool.forward(projected, eh.mask)
        return u, AttPoolCache(proj_input, pool_cache)

    def backward(self, du: np.ndarray, cache: AttPoolCache) -> None:
        d_projected = self.pool.backward(du, cache.pool)
        self.news_proj.backward(d_projected, cache.proj_input)


class BaseMHAEncoder(BaseUserEncoder):
    """Self-attention over clicked rows, then attention pooling."""

    def __init__(self, cfg: EncoderConfig, params: ParamSet, rng: np.random.Generator, news_proj: Linear) -> None:
        super().__init__(cfg, params, rng, news_proj)
        self.context = AttentiveContext(cfg, params, self.prefix, cfg.news_dim, rng)

    @property
    def variant(self) -> EncoderVariant:
        return EncoderVariant.BASE_MHA

    def encode(
        self,
        eh: EncodedHistory,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, ContextCache]:
        rows, _ = self._dropout(eh.rows, training, rng)
        return self.context.forward(rows, rows, eh.mask, training, rng)

    def backward(self, du: np.ndarray, cache: ContextCache) -> None:
        # news embeddings are frozen: input gradients stop here
        self.context.backward(du, cache)
