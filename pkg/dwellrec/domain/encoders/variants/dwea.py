"""
Dwell-time Aware encoder (post-injection).

Scientific Background:
---------------------
Instead of filtering clicks, this encoder lets dwell time reshape the
attention itself. Each clicked-news row is concatenated with the embedding of
its dwell bucket and the result feeds the queries and keys of the user
self-attention; the values stay the plain news rows. Attention logits thus
depend on how long the user read each item, while the user vector remains a
mixture of news content.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from dwellrec.domain.encoders.base import AttentiveContext, BaseUserEncoder, ContextCache
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.history import EncodedHistory
from dwellrec.nn import functional as F
from dwellrec.nn.layers import DwellEmbedding, Linear
from dwellrec.nn.params import ParamSet


@dataclass
class DweACache:
    context: ContextCache
    buckets: np.ndarray


class DweAEncoder(BaseUserEncoder):
    """Self-attention with dwell-augmented queries and keys."""

    def __init__(self, cfg: EncoderConfig, params: ParamSet, rng: np.random.Generator, news_proj: Linear) -> None:
        super().__init__(cfg, params, rng, news_proj)
        self.dwell = DwellEmbedding(params, f"{self.prefix}.dwell", cfg.dwell_vocab, cfg.dwell_dim, rng)
        self.context = AttentiveContext(cfg, params, self.prefix, cfg.news_dim + cfg.dwell_dim, rng)

    @property
    def variant(self) -> EncoderVariant:
        return EncoderVariant.DWEA

    def attention_inputs(self, eh: EncodedHistory) -> np.ndarray:
        """Query/key input rows [E_u, D_u] in evaluation mode."""
        dwell_rows, _ = self.dwell.forward(eh.buckets)
        return F.concat_features(eh.rows, dwell_rows)

    def encode(
        self,
        eh: EncodedHistory,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, DweACache]:
        rows, _ = self._dropout(eh.rows, training, rng)
        dwell_rows, buckets = self.dwell.forward(eh.buckets)
        qk = F.concat_features(rows, dwell_rows)
        u, cache = self.context.forward(qk, rows, eh.mask, training, rng)
        return u, DweACache(cache, buckets)

    def backward(self, du: np.ndarray, cache: DweACache) -> None:
        d_qk, _ = self.context.backward(du, cache.context)
        _, d_dwell_rows = F.concat_backward(d_qk, self.cfg.news_dim)
        self.dwell.backward(d_dwell_rows, cache.buckets)
