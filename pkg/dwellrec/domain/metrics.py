"""
Impression-level ranking metrics.

All functions take the binary labels and the scores of one impression's
candidates. Rankings sort by descending score; ties keep input order, so
every metric is deterministic. AUC counts tied (positive, negative) pairs as
one half.
"""

from typing import Sequence, Tuple

import numpy as np

from dwellrec.core.exceptions import ConfigError, InvalidInputError


def _prepare(labels: Sequence[int], scores: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if y.shape != s.shape:
        raise InvalidInputError(f"labels and scores differ in length: {y.size} vs {s.size}")
    if np.any((y != 0) & (y != 1)):
        raise InvalidInputError("labels must be 0 or 1")
    return y, s


def ranking(scores: Sequence[float]) -> np.ndarray:
    """Candidate indices by descending score, ties in input order."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """
    Fraction of (positive, negative) pairs ranked correctly.

    Raises:
        InvalidInputError: Length mismatch, or a class is missing
    """
    y, s = _prepare(labels, scores)
    pos = s[y == 1]
    neg = s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise InvalidInputError("AUC needs at least one positive and one negative")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (pos.size * neg.size))


def mrr(labels: Sequence[int], scores: Sequence[float]) -> float:
    """
    Mean reciprocal rank over the positives.

    Raises:
        InvalidInputError: Length mismatch or no positive
    """
    y, s = _prepare(labels, scores)
    if not y.any():
        raise InvalidInputError("MRR needs at least one positive")
    ranked = y[ranking(s)]
    ranks = np.flatnonzero(ranked) + 1
    return float(np.mean(1.0 / ranks))


def ndcg_at_k(labels: Sequence[int], scores: Sequence[float], k: int) -> float:
    """
    Normalized DCG of the top k with binary gains and log2(rank + 1) discount.

    Raises:
        ConfigError: k <= 0
        InvalidInputError: Length mismatch or no positive
    """
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}", key="k")
    y, s = _prepare(labels, scores)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise InvalidInputError("nDCG needs at least one positive")
    gains = y[ranking(s)][:k]
    discounts = 1.0 / np.log2(np.arange(2, gains.size + 2))
    dcg = float(np.sum(gains * discounts))
    ideal = float(np.sum(1.0 / np.log2(np.arange(2, min(n_pos, k) + 2))))
    return dcg / ideal


def impression_metrics(labels: Sequence[int], scores: Sequence[float]) -> Tuple[float, float, float, float]:
    """(auc, mrr, ndcg@5, ndcg@10) of one impression with both classes."""
    return auc(labels, scores), mrr(labels, scores), ndcg_at_k(labels, scores, 5), ndcg_at_k(labels, scores, 10)
