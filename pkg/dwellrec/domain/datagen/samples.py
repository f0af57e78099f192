"""
Negative-sampling training instances.

Every clicked candidate becomes one (K+1)-way classification instance: the
click plus K unclicked candidates from the same impression.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from dwellrec.core.exceptions import InvalidInputError
from dwellrec.core.logging import get_logger
from dwellrec.domain.entities import Impression, TrainSample

logger = get_logger(__name__)


@dataclass
class SampleBuild:
    """Training samples together with the skip report."""

    samples: List[TrainSample]
    skipped: Dict[str, int] = field(
        default_factory=lambda: {"no_positive": 0, "no_negative": 0, "no_distinct_negative": 0}
    )

    @property
    def n_skipped(self) -> int:
        return sum(self.skipped.values())


def build_train_samples(
    impressions: Sequence[Impression],
    k: int,
    seed: int,
) -> SampleBuild:
    """
    Build negative-sampling training samples.

    Negatives are drawn uniformly without replacement from the unclicked
    candidates of the same impression, with replacement only when fewer than
    K exist. A candidate sharing the clicked news id is never a negative; a
    click left without any other unclicked id is skipped under
    "no_distinct_negative". The positive lands at a random position among
    its negatives, and the sample list is shuffled with the same seed.

    Args:
        impressions: Training impressions
        k: Negatives per sample (>= 1)
        seed: Sampling seed

    Returns:
        SampleBuild with samples and per-reason skip counts

    Raises:
        InvalidInputError: k < 1
    """
    if k < 1:
        raise InvalidInputError(f"k must be at least 1, got {k}")

    rng = np.random.default_rng(seed)
    build = SampleBuild(samples=[])

    for imp in impressions:
        positives = imp.positives
        negatives = [c.news_id for c in imp.negatives]
        if not positives:
            build.skipped["no_positive"] += 1
            continue
        if not negatives:
            build.skipped["no_negative"] += 1
            continue

        for pos in positives:
            pool = [nid for nid in negatives if nid != pos.news_id]
            if not pool:
                build.skipped["no_distinct_negative"] += 1
                continue
            picks = rng.choice(len(pool), size=k, replace=len(pool) < k)
            build.samples.append(
                TrainSample(
                    history=imp.history,
                    positive=pos.news_id,
                    negatives=[pool[i] for i in picks],
                    positive_index=int(rng.integers(k + 1)),
                    impression_id=imp.impression_id,
                )
            )

    order = rng.permutation(len(build.samples))
    build.samples = [build.samples[i] for i in order]

    if build.n_skipped:
        logger.warning(
            f"Skipped {build.n_skipped} impressions or clicks while building samples: {build.skipped}"
        )
    logger.info(f"Built {len(build.samples)} training samples (K={k})")
    return build
