"""
Impression Log Entities.

An impression is one presentation event: a user, the user's historical
clicks (each with a raw dwell), and a list of candidate news with click
labels. Training samples pair one clicked candidate with K unclicked ones from
the same impression; evaluation sets are impression lists filtered by how
much of the positive signal is confirmed by dwell time.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Set

import numpy as np

from dwellrec.domain.entities.dwell import RawDwell


@dataclass(frozen=True, eq=False)
class NewsItem:
    """
    A catalog entry.

    Attributes:
        news_id: Catalog identifier
        topic_mix: Probability vector over latent topics
    """

    news_id: str
    topic_mix: np.ndarray

    def __post_init__(self) -> None:
        mix = np.asarray(self.topic_mix, dtype=np.float64)
        if mix.ndim != 1 or mix.size == 0:
            raise ValueError(f"topic_mix of {self.news_id!r} must be a non-empty vector")
        if np.any(mix < 0) or abs(float(mix.sum()) - 1.0) > 1e-9:
            raise ValueError(f"topic_mix of {self.news_id!r} must be non-negative and sum to 1")
        object.__setattr__(self, "topic_mix", mix)

    @property
    def n_topics(self) -> int:
        return int(self.topic_mix.size)


@dataclass(frozen=True)
class ClickRecord:
    """One historical click and its raw dwell (None when unknown)."""

    news_id: str
    dwell: RawDwell = None


@dataclass(frozen=True)
class Candidate:
    """
    A candidate shown in an impression.

    Attributes:
        news_id: Candidate news id
        label: 1 if clicked, else 0
        dwell: Recorded dwell of the click; only meaningful for positives
    """

    news_id: str
    label: int
    dwell: RawDwell = None

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"candidate label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Impression:
    """
    One impression with its history and labeled candidates.

    History is ordered oldest first, most recent last.
    """

    impression_id: str
    user_id: str
    history: List[ClickRecord]
    candidates: List[Candidate]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError(f"impression {self.impression_id!r} has no candidates")

    @property
    def labels(self) -> List[int]:
        return [c.label for c in self.candidates]

    @property
    def positives(self) -> List[Candidate]:
        return [c for c in self.candidates if c.label == 1]

    @property
    def negatives(self) -> List[Candidate]:
        return [c for c in self.candidates if c.label == 0]

    @property
    def has_both_classes(self) -> bool:
        labels = set(self.labels)
        return labels == {0, 1}

    def with_history(self, history: List[ClickRecord]) -> "Impression":
        return replace(self, history=list(history))

    def with_candidates(self, candidates: List[Candidate]) -> "Impression":
        return replace(self, candidates=list(candidates))


@dataclass(frozen=True)
class TrainSample:
    """
    One negative-sampling training instance.

    Attributes:
        history: Click history of the impression the sample comes from
        positive: Clicked news id
        negatives: Exactly K unclicked news ids, in shuffled order
        positive_index: Position of the positive among the K+1 scored candidates
        impression_id: Source impression
    """

    history: List[ClickRecord]
    positive: str
    negatives: List[str]
    positive_index: int = 0
    impression_id: str = ""

    def __post_init__(self) -> None:
        if self.positive in self.negatives:
            raise ValueError(f"positive {self.positive!r} also listed as a negative")
        if not 0 <= self.positive_index <= len(self.negatives):
            raise ValueError(f"positive_index {self.positive_index} outside 0..{len(self.negatives)}")

    @property
    def k(self) -> int:
        return len(self.negatives)

    @property
    def candidate_ids(self) -> List[str]:
        """The K+1 scored candidates, positive at positive_index."""
        ids = list(self.negatives)
        ids.insert(self.positive_index, self.positive)
        return ids


class EvalMode(str, Enum):
    """Evaluation set constructions."""

    NORMAL = "normal"
    REAL = "real"
    ROBUST = "robust"


@dataclass
class EvalSet:
    """
    An evaluation set.

    Attributes:
        mode: How the set was built
        impressions: Impressions to rank
        theta: Effective-click threshold in seconds (Real and Robust)
        flagged: Ids of impressions holding an Unknown-dwell positive (Robust)
        dwell_masked: True once every history dwell was replaced by Unknown
    """

    mode: EvalMode
    impressions: List[Impression]
    theta: Optional[float] = None
    flagged: Set[str] = field(default_factory=set)
    dwell_masked: bool = False

    def __len__(self) -> int:
        return len(self.impressions)

    @property
    def label(self) -> str:
        """Short name used in logs and CSV rows."""
        base = self.mode.value
        if self.theta is not None and self.mode is not EvalMode.NORMAL:
            base = f"{base}({self.theta:g})"
        return f"{base}+masked" if self.dwell_masked else base
