"""
Dwell-time Weight encoder (pre-injection).

Scientific Background:
---------------------
Clicks followed by a few seconds of reading say little about interest. This
encoder builds two views of the history: the original sequence of every
click, and the effective sequence of clicks whose known dwell exceeds the
threshold. Both views go through the same attention and pooling weights.
A reading-preference gate, driven by the dwell embeddings of the original
sequence, decides how much each view contributes:

    u = G[0] * U_effective + G[1] * U_original

When no click is effective the gate is bypassed and u = U_original.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from dwellrec.domain.encoders.base import AttentiveContext, BaseUserEncoder, ContextCache
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.history import EncodedHistory, split_effective
from dwellrec.nn.layers import DwellEmbedding, GateCache, Linear, ReadingPreferenceGate
from dwellrec.nn.params import ParamSet


@dataclass
class DweWCache:
    original: ContextCache
    u_original: np.ndarray
    effective: Optional[ContextCache] = None
    u_effective: Optional[np.ndarray] = None
    buckets: Optional[np.ndarray] = None
    gate: Optional[GateCache] = None

    @property
    def bypassed(self) -> bool:
        return self.effective is None


class DweWEncoder(BaseUserEncoder):
    """Gated blend of the original and effective-click views."""

    def __init__(self, cfg: EncoderConfig, params: ParamSet, rng: np.random.Generator, news_proj: Linear) -> None:
        super().__init__(cfg, params, rng, news_proj)
        self.context = AttentiveContext(cfg, params, self.prefix, cfg.news_dim, rng)
        self.dwell = DwellEmbedding(params, f"{self.prefix}.dwell", cfg.dwell_vocab, cfg.dwell_dim, rng)
        self.gate = ReadingPreferenceGate(params, f"{self.prefix}.gate", cfg.dwell_dim, cfg.dwell_dim, rng)

    @property
    def variant(self) -> EncoderVariant:
        return EncoderVariant.DWEW

    def gate_weights(self, eh: EncodedHistory) -> np.ndarray:
        """Gate (effective, original) for a history, in evaluation mode."""
        dwell_rows, _ = self.dwell.forward(eh.buckets)
        gate, _ = self.gate.forward(dwell_rows, eh.mask)
        return gate

    def encode(
        self,
        eh: EncodedHistory,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, DweWCache]:
        eh_o, eh_e = split_effective(eh, self.cfg.theta)

        rows_o, _ = self._dropout(eh_o.rows, training, rng)
        u_o, cache_o = self.context.forward(rows_o, rows_o, eh_o.mask, training, rng)
        if eh_e.empty:
            return u_o, DweWCache(original=cache_o, u_original=u_o)

        rows_e, _ = self._dropout(eh_e.rows, training, rng)
        u_e, cache_e = self.context.forward(rows_e, rows_e, eh_e.mask, training, rng)

        dwell_rows, buckets = self.dwell.forward(eh_o.buckets)
        gate, gate_cache = self.gate.forward(dwell_rows, eh_o.mask)
        u = gate[0] * u_e + gate[1] * u_o
        return u, DweWCache(cache_o, u_o, cache_e, u_e, buckets, gate_cache)

    def backward(self, du: np.ndarray, cache: DweWCache) -> None:
        if cache.bypassed:
            self.context.backward(du, cache.original)
            return

        gate = cache.gate.gate
        d_gate = np.array([du @ cache.u_effective, du @ cache.u_original])
        d_dwell_rows = self.gate.backward(d_gate, cache.gate)
        self.dwell.backward(d_dwell_rows, cache.buckets)

        self.context.backward(gate[0] * du, cache.effective)
        self.context.backward(gate[1] * du, cache.original)
