"""
Recommender Model - orchestrates news projection, user encoding and scoring.

The model:
1. Projects candidate news vectors with the shared news projection
2. Encodes the click history with the configured user-encoder plugin
3. Scores candidates by dot product with the user vector
4. Trains with the (K+1)-way negative-sampling cross-entropy

News embeddings are frozen; only the projection and encoder weights learn.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from dwellrec.core.exceptions import InvalidInputError, NumericError, ShapeError
from dwellrec.core.logging import get_logger
from dwellrec.domain.encoders.base import BaseUserEncoder
from dwellrec.domain.encoders.config import EncoderConfig
from dwellrec.domain.encoders.history import EncodedHistory, encode_history
from dwellrec.domain.encoders.variants import get_encoder_class
from dwellrec.domain.entities import ClickRecord, TrainSample
from dwellrec.nn import functional as F
from dwellrec.nn.layers import Linear
from dwellrec.nn.params import ParamSet
from dwellrec.services.embeddings import EmbeddingStore

logger = get_logger(__name__)


# =============================================================================
# Loss
# =============================================================================


def _check_scores(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size < 2:
        raise InvalidInputError("the loss needs a positive and at least one negative score")
    if not np.all(np.isfinite(scores)):
        raise NumericError("non-finite score in the sample loss")
    return scores


def sample_loss(pos_score: float, neg_scores: Sequence[float]) -> float:
    """
    Negative-sampling cross-entropy of one positive against K negatives.

    loss = -log(exp(s+) / (exp(s+) + sum_j exp(s-_j))), computed with
    max subtraction.

    Raises:
        InvalidInputError: No negative score
        NumericError: A non-finite score
    """
    scores = _check_scores(np.concatenate([[pos_score], np.asarray(neg_scores, dtype=np.float64)]))
    return F.logsumexp(scores) - float(scores[0])


def sample_loss_grad(scores: np.ndarray, positive_index: int = 0) -> Tuple[float, np.ndarray]:
    """
    Loss and its gradient for K+1 scores with the positive at positive_index.

    The gradient is softmax(scores) minus the one-hot of the positive.

    Raises:
        InvalidInputError: positive_index outside the scores
    """
    scores = _check_scores(scores)
    if not 0 <= positive_index < scores.size:
        raise InvalidInputError(f"positive_index {positive_index} outside 0..{scores.size - 1}")
    probs, _ = F.softmax_rows(scores)
    grad = probs.copy()
    grad[positive_index] -= 1.0
    return F.logsumexp(scores) - float(scores[positive_index]), grad


# =============================================================================
# Model
# =============================================================================


@dataclass
class ForwardCache:
    encoder: Any
    user: np.ndarray
    projected: np.ndarray
    proj_input: np.ndarray


class RecommenderModel:
    """
    News recommender with a pluggable user encoder.

    Example usage:
        model = RecommenderModel(EncoderConfig(variant="dwea"), seed=7)
        scores = model.score_impression(impression.history, candidate_ids, store)
    """

    def __init__(self, cfg: EncoderConfig, seed: int = 0) -> None:
        """
        Build parameters for a configuration.

        Args:
            cfg: Encoder configuration
            seed: Initialization seed
        """
        self.cfg = cfg
        self.seed = seed
        self.params = ParamSet()
        rng = np.random.default_rng(seed)
        self.news_proj = Linear(self.params, "news.proj", cfg.news_dim, cfg.out_dim, rng)
        encoder_cls = get_encoder_class(cfg.variant)
        self.encoder: BaseUserEncoder = encoder_cls(cfg, self.params, rng, self.news_proj)
        logger.debug(
            f"Built {self.encoder!r} with {len(self.params)} tensors ({self.params.n_values()} values)"
        )

    @property
    def variant(self) -> str:
        return self.encoder.variant.value

    def encode_history(self, history: Sequence[ClickRecord], store: EmbeddingStore) -> EncodedHistory:
        return encode_history(history, store, self.cfg)

    def user_vector(self, eh: EncodedHistory) -> np.ndarray:
        """User vector in evaluation mode."""
        u, _ = self.encoder.encode(eh, training=False)
        return u

    def project_news(self, news: np.ndarray) -> np.ndarray:
        projected, _ = self.news_proj.forward(news)
        return projected

    def predict(self, u: np.ndarray, n_c: np.ndarray) -> float:
        """
        Click score of one candidate: dot(u, project(n_c)).

        Raises:
            ShapeError: u or n_c has the wrong dimension
        """
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.cfg.out_dim,):
            raise ShapeError("predict user vector", u.shape, (self.cfg.out_dim,))
        return float(u @ self.project_news(np.asarray(n_c, dtype=np.float64)))

    def score(self, eh: EncodedHistory, candidates: np.ndarray) -> np.ndarray:
        """Scores of a (C, d) candidate matrix in evaluation mode."""
        return self.project_news(candidates) @ self.user_vector(eh)

    def score_impression(
        self,
        history: Sequence[ClickRecord],
        candidate_ids: Sequence[str],
        store: EmbeddingStore,
    ) -> np.ndarray:
        eh = self.encode_history(history, store)
        return self.score(eh, store.matrix(list(candidate_ids)))

    # -------------------------------------------------------------------------
    # Training
    # -------------------------------------------------------------------------

    def forward(
        self,
        eh: EncodedHistory,
        candidates: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, ForwardCache]:
        u, enc_cache = self.encoder.encode(eh, training=training, rng=rng)
        projected, proj_input = self.news_proj.forward(candidates)
        return projected @ u, ForwardCache(enc_cache, u, projected, proj_input)

    def backward(self, dscores: np.ndarray, cache: ForwardCache) -> None:
        du = dscores @ cache.projected
        self.news_proj.backward(np.outer(dscores, cache.user), cache.proj_input)
        self.encoder.backward(du, cache.encoder)

    def loss_and_grad(
        self,
        eh: EncodedHistory,
        candidates: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
        scale: float = 1.0,
        compute_grads: bool = True,
        positive_index: int = 0,
    ) -> float:
        """
        Loss of one sample whose positive is candidate row positive_index.

        Gradients (scaled by ``scale``) are accumulated into the parameters
        when compute_grads is True.
        """
        scores, cache = self.forward(eh, candidates, training=training, rng=rng)
        loss, dscores = sample_loss_grad(scores, positive_index)
        if compute_grads:
            self.backward(scale * dscores, cache)
        return loss

    def sample_inputs(self, sample: TrainSample, store: EmbeddingStore) -> Tuple[EncodedHistory, np.ndarray]:
        return self.encode_history(sample.history, store), store.matrix(sample.candidate_ids)

    def batch_loss(
        self,
        batch: List[TrainSample],
        store: EmbeddingStore,
        rng: Optional[np.random.Generator] = None,
        training: bool = True,
    ) -> float:
        """Mean loss of a batch; accumulates gradients of the mean."""
        if not batch:
            raise InvalidInputError("empty batch")
        scale = 1.0 / len(batch)
        total = 0.0
        for sample in batch:
            eh, candidates = self.sample_inputs(sample, store)
            total += self.loss_and_grad(
                eh, candidates, training=training, rng=rng, scale=scale, positive_index=sample.positive_index
            )
        return total * scale
