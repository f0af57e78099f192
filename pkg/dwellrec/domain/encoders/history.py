"""
Encoded click histories.

A history becomes a fixed-size block of H rows: the embeddings of the most
recent clicks (oldest first) followed by zero padding, with the dwell bucket
and raw seconds of each row and a validity mask.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from dwellrec.core.exceptions import ShapeError
from dwellrec.domain.dwell import discretize
from dwellrec.domain.encoders.config import EncoderConfig
from dwellrec.domain.entities import PADDING_BUCKET, ClickRecord
from dwellrec.services.embeddings import EmbeddingStore


@dataclass
class EncodedHistory:
    """
    Padded history block.

    Attributes:
        rows: (H, d) clicked-news embeddings, zero at padding
        buckets: (H,) dwell bucket ids, 0 at padding
        dwell: (H,) raw seconds, NaN when unknown or padding
        mask: (H,) True for real clicks
    """

    rows: np.ndarray
    buckets: np.ndarray
    dwell: np.ndarray
    mask: np.ndarray

    @property
    def capacity(self) -> int:
        return int(self.mask.shape[0])

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())

    @property
    def empty(self) -> bool:
        return self.n_valid == 0

    @classmethod
    def padded(
        cls,
        rows: np.ndarray,
        buckets: Sequence[int],
        dwell: Sequence[float],
        capacity: int,
    ) -> "EncodedHistory":
        """Place ``len(rows)`` valid rows first and pad up to capacity."""
        n, d = rows.shape
        block = np.zeros((capacity, d))
        block[:n] = rows
        bucket_ids = np.full(capacity, int(PADDING_BUCKET), dtype=np.int64)
        bucket_ids[:n] = np.asarray(buckets, dtype=np.int64)
        seconds = np.full(capacity, np.nan)
        seconds[:n] = np.asarray(dwell, dtype=np.float64)
        mask = np.zeros(capacity, dtype=bool)
        mask[:n] = True
        return cls(rows=block, buckets=bucket_ids, dwell=seconds, mask=mask)


def encode_history(
    history: Sequence[ClickRecord],
    store: EmbeddingStore,
    cfg: EncoderConfig,
) -> EncodedHistory:
    """
    Encode the last ``cfg.max_history`` clicks of a history.

    Args:
        history: Clicks, oldest first
        store: Embedding store covering every clicked id
        cfg: Encoder configuration (history size, dwell scheme)

    Returns:
        EncodedHistory; an empty history gives an all-padding block

    Raises:
        MissingNewsError: A clicked id is not in the store
    """
    recent = list(history)[-cfg.max_history:]
    if recent:
        rows = store.matrix([r.news_id for r in recent])
    else:
        rows = np.zeros((0, cfg.news_dim))
    if rows.shape[1] != cfg.news_dim:
        raise ShapeError("history embeddings", rows.shape, (len(recent), cfg.news_dim))
    buckets = [int(discretize(r.dwell, cfg.dwell_scheme)) for r in recent]
    seconds = [np.nan if r.dwell is None else float(r.dwell) for r in recent]
    return EncodedHistory.padded(rows, buckets, seconds, cfg.max_history)


def split_effective(eh: EncodedHistory, theta: float) -> Tuple[EncodedHistory, EncodedHistory]:
    """
    Split a history into its original and effective-click views.

    The original view holds every valid row (zero and Unknown dwell
    included). The effective view keeps, in order, the rows whose known dwell
    exceeds theta, re-padded to the same capacity.
    """
    with np.errstate(invalid="ignore"):
        effective = eh.mask & np.isfinite(eh.dwell) & (eh.dwell > theta)
    idx = np.flatnonzero(effective)
    eh_e = EncodedHistory.padded(eh.rows[idx], eh.buckets[idx], eh.dwell[idx], eh.capacity)
    return eh, eh_e
