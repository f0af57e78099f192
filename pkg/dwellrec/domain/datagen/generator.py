"""
Synthetic Impression Log Generator.

Scientific Background:
---------------------
Production click logs mix two kinds of clicks. Interest clicks land on news
that matches what the user cares about and are followed by real reading;
noise clicks (curiosity, clickbait, mis-taps) are abandoned within seconds.
Dwell time is what tells them apart.

The generator reproduces that structure on a toy catalog:

- every news item mixes latent topics, dominated by one primary topic
- every user holds a sparse Dirichlet preference over the same topics
- a news item is *aligned* with a user when the cosine between its topic mix
  and the user's preference reaches the alignment threshold (falling back to
  the closest items when too few qualify)
- clicks on aligned news draw dwell from the long law, other clicks from the
  short law, and a fixed share of clicks loses its telemetry (Unknown)

Each user keeps one click history across all of their impressions. Candidate
labels follow a click model mixing interest and noise: aligned candidates are
clicked more often than the rest.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from dwellrec.core.logging import get_logger
from dwellrec.domain.datagen.config import GeneratorConfig
from dwellrec.domain.entities import Candidate, ClickRecord, Impression, NewsItem, RawDwell

logger = get_logger(__name__)


@dataclass
class _UserPools:
    """Catalog indices split by alignment with one user."""

    aligned: np.ndarray
    other: np.ndarray
    aligned_mask: np.ndarray

    def draw(self, rng: np.random.Generator, interest: bool) -> int:
        pool = self.aligned if interest else self.other
        if pool.size == 0:
            pool = self.other if interest else self.aligned
        return int(pool[rng.integers(pool.size)])


class DwellSampler:
    """Draws raw dwell values from the long and short laws."""

    def __init__(self, cfg: GeneratorConfig) -> None:
        self.cfg = cfg
        self._scale = 10.0 ** cfg.dwell_decimals

    def long(self, rng: np.random.Generator) -> float:
        t = rng.lognormal(mean=np.log(self.cfg.long_dwell_median), sigma=self.cfg.long_dwell_sigma)
        t = float(np.clip(t, self.cfg.long_dwell_min, self.cfg.long_dwell_max))
        return round(t, self.cfg.dwell_decimals)

    def short(self, rng: np.random.Generator) -> float:
        t = rng.uniform(0.0, self.cfg.short_dwell_max)
        # floor keeps the value strictly below the short-law ceiling
        return float(np.floor(t * self._scale) / self._scale)

    def sample(self, rng: np.random.Generator, aligned: bool) -> RawDwell:
        # Draw the value first so the stream does not depend on the outcome
        value = self.long(rng) if aligned else self.short(rng)
        if rng.random() < self.cfg.unknown_dwell_rate:
            return None
        return value


def news_id(index: int) -> str:
    return f"N{index:05d}"


def user_id(index: int) -> str:
    return f"U{index:05d}"


def generate_catalog(cfg: GeneratorConfig, rng: np.random.Generator) -> List[NewsItem]:
    """Build the news catalog: one primary topic plus a Dirichlet spread."""
    primary = rng.integers(cfg.n_topics, size=cfg.n_news)
    spread = rng.dirichlet(np.ones(cfg.n_topics), size=cfg.n_news)
    mixes = (1.0 - cfg.news_primary_weight) * spread
    mixes[np.arange(cfg.n_news), primary] += cfg.news_primary_weight
    mixes /= mixes.sum(axis=1, keepdims=True)
    return [NewsItem(news_id=news_id(i), topic_mix=mixes[i]) for i in range(cfg.n_news)]


def _cosine_matrix(prefs: np.ndarray, mixes: np.ndarray) -> np.ndarray:
    prefs_n = prefs / np.linalg.norm(prefs, axis=1, keepdims=True)
    mixes_n = mixes / np.linalg.norm(mixes, axis=1, keepdims=True)
    return prefs_n @ mixes_n.T


def _user_pools(cosine_row: np.ndarray, cfg: GeneratorConfig) -> _UserPools:
    aligned_mask = cosine_row >= cfg.alignment_threshold
    if int(aligned_mask.sum()) < cfg.min_aligned_pool:
        top = np.argsort(-cosine_row, kind="stable")[: cfg.min_aligned_pool]
        aligned_mask = np.zeros_like(aligned_mask)
        aligned_mask[top] = True
    return _UserPools(
        aligned=np.flatnonzero(aligned_mask),
        other=np.flatnonzero(~aligned_mask),
        aligned_mask=aligned_mask,
    )


def _history(
    pools: _UserPools,
    cfg: GeneratorConfig,
    sampler: DwellSampler,
    rng: np.random.Generator,
) -> List[ClickRecord]:
    length = int(rng.integers(cfg.history_min, cfg.history_max + 1))
    records = []
    for _ in range(length):
        interest = rng.random() < cfg.interest_click_prob
        idx = pools.draw(rng, interest)
        dwell = sampler.sample(rng, aligned=bool(pools.aligned_mask[idx]))
        records.append(ClickRecord(news_id=news_id(idx), dwell=dwell))
    return records


def _candidate_indices(pools: _UserPools, cfg: GeneratorConfig, rng: np.random.Generator) -> List[int]:
    chosen: List[int] = []
    seen = set()
    while len(chosen) < cfg.candidates_per_impression:
        idx = pools.draw(rng, rng.random() < cfg.candidate_aligned_prob)
        if idx in seen:
            idx = int(rng.integers(cfg.n_news))
            if idx in seen:
                continue
        seen.add(idx)
        chosen.append(idx)
    return chosen


def _forced_click(
    indices: List[int],
    pools: _UserPools,
    cfg: GeneratorConfig,
    rng: np.random.Generator,
) -> int:
    """Position of the click forced into an impression nobody clicked."""
    aligned_pos = [p for p, idx in enumerate(indices) if pools.aligned_mask[idx]]
    other_pos = [p for p, idx in enumerate(indices) if not pools.aligned_mask[idx]]
    interest = rng.random() < cfg.interest_click_prob
    group = aligned_pos if interest else other_pos
    if not group:
        group = other_pos if interest else aligned_pos
    return group[int(rng.integers(len(group)))]


def _candidates(
    pools: _UserPools,
    cfg: GeneratorConfig,
    sampler: DwellSampler,
    rng: np.random.Generator,
) -> List[Candidate]:
    indices = _candidate_indices(pools, cfg, rng)
    clicked = []
    for idx in indices:
        prob = cfg.click_prob_aligned if pools.aligned_mask[idx] else cfg.click_prob_noise
        clicked.append(rng.random() < prob)

    if not any(clicked):
        clicked[_forced_click(indices, pools, cfg, rng)] = True
    elif all(clicked):
        clicked[int(rng.integers(len(clicked)))] = False

    candidates = []
    for idx, hit in zip(indices, clicked):
        if hit:
            dwell = sampler.sample(rng, aligned=bool(pools.aligned_mask[idx]))
            candidates.append(Candidate(news_id=news_id(idx), label=1, dwell=dwell))
        else:
            candidates.append(Candidate(news_id=news_id(idx), label=0))
    return candidates


def generate_corpus(
    cfg: Optional[GeneratorConfig] = None,
    seed: int = 42,
) -> Tuple[List[NewsItem], List[Impression]]:
    """
    Generate a news catalog and an impression log.

    Impressions are ordered by user, and each user's impressions in time
    order; use split_by_user to separate the trailing test impressions.

    Args:
        cfg: Generator configuration (defaults when None)
        seed: Random seed; output is deterministic in (cfg, seed)

    Returns:
        Tuple of (news catalog, impressions)

    Raises:
        ConfigError: Invalid configuration
    """
    cfg = (cfg or GeneratorConfig()).validated()
    rng = np.random.default_rng(seed)
    sampler = DwellSampler(cfg)

    news = generate_catalog(cfg, rng)
    mixes = np.stack([item.topic_mix for item in news])
    prefs = rng.dirichlet(np.full(cfg.n_topics, cfg.user_topic_concentration), size=cfg.n_users)
    cosine = _cosine_matrix(prefs, mixes)

    impressions: List[Impression] = []
    aligned_sizes = []
    for u in range(cfg.n_users):
        pools = _user_pools(cosine[u], cfg)
        aligned_sizes.append(pools.aligned.size)
        history = _history(pools, cfg, sampler, rng)
        for j in range(cfg.impressions_per_user):
            impressions.append(
                Impression(
                    impression_id=f"{user_id(u)}-{j:02d}",
                    user_id=user_id(u),
                    history=history,
                    candidates=_candidates(pools, cfg, sampler, rng),
                )
            )

    logger.info(
        f"Generated {len(news)} news and {len(impressions)} impressions for "
        f"{cfg.n_users} users (seed={seed}, mean aligned pool {np.mean(aligned_sizes):.1f})"
    )
    return news, impressions


def split_by_user(
    impressions: List[Impression],
    test_per_user: int = 1,
) -> Tuple[List[Impression], List[Impression]]:
    """
    Split a log into train and test parts.

    The last ``test_per_user`` impressions of every user (in log order) go to
    the test part; everything else stays in the train part. Relative order is
    preserved in both parts.
    """
    if test_per_user < 0:
        raise ValueError("test_per_user must be non-negative")

    remaining = {}
    for imp in impressions:
        remaining[imp.user_id] = remaining.get(imp.user_id, 0) + 1

    train: List[Impression] = []
    test: List[Impression] = []
    for imp in impressions:
        left = remaining[imp.user_id]
        remaining[imp.user_id] = left - 1
        (test if left <= test_per_user else train).append(imp)
    return train, test


def history_dwell(impressions: List[Impression]) -> List[RawDwell]:
    """Raw dwell of every history click, one history per user."""
    seen = set()
    values: List[RawDwell] = []
    for imp in impressions:
        if imp.user_id in seen:
            continue
        seen.add(imp.user_id)
        values.extend(record.dwell for record in imp.history)
    return values
