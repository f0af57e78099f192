"""
Dwell Time Discretization and Analytics.

Scientific Background:
---------------------
Continuous dwell time is hard for an embedding-based model to use directly,
so dwell is cut into discrete classes with a dedicated class for clicks whose
telemetry never arrived. Short ranges are resolved in 5-second steps and
longer ones in minutes, matching how reading behavior concentrates between
5 s and a few minutes while the tail stretches to tens of minutes.

The literal map reuses ids across ranges (59 s and 540 s both land in 14,
600 s and [240, 300) both land in 9). The literal scheme keeps that behavior;
the monotonic scheme gives the minute ladder and the 600 s cap their own ids.

Distribution analytics reproduce the summary statistics used to motivate the
effective-click threshold: the Unknown share, the share of known clicks above
5 s, and a 30-second bar histogram.
"""

import math
from collections import Counter
from typing import Iterable, List, Sequence, Tuple, Union

from dwellrec.core.exceptions import EmptyInputError, InvalidInputError
from dwellrec.domain.entities.dwell import (
    BAR_WIDTH_SECONDS,
    DwellBucket,
    DwellDistribution,
    DwellScheme,
    PADDING_BUCKET,
    RawDwell,
    UNKNOWN_BUCKET,
)

EFFECTIVE_REFERENCE_SECONDS = 5.0

SchemeLike = Union[DwellScheme, str]


def _as_scheme(scheme: SchemeLike) -> DwellScheme:
    try:
        return DwellScheme(scheme)
    except ValueError:
        raise InvalidInputError(f"unknown dwell scheme: {scheme!r}") from None


def discretize(raw: RawDwell, scheme: SchemeLike = DwellScheme.LITERAL) -> DwellBucket:
    """
    Map a raw dwell to its bucket id.

    Args:
        raw: Seconds (>= 0, fractional allowed) or None for Unknown
        scheme: literal (default) or monotonic numbering

    Returns:
        Bucket id in [1, 14] (literal) or [1, 25] (monotonic)

    Raises:
        InvalidInputError: Negative or non-finite seconds
    """
    if raw is None:
        return UNKNOWN_BUCKET

    t = float(raw)
    if not math.isfinite(t) or t < 0:
        raise InvalidInputError(f"dwell must be a finite non-negative number of seconds, got {raw!r}")

    if t == 0:
        return DwellBucket(2)
    if t < 5:
        return DwellBucket(3)
    if t < 60:
        return DwellBucket(math.floor(t / 5) + 3)

    monotonic = _as_scheme(scheme) is DwellScheme.MONOTONIC
    if t < 600:
        return DwellBucket(math.floor(t / 60) + (15 if monotonic else 5))
    return DwellBucket(25 if monotonic else 9)


def mask_bucket(bucket: int, scheme: SchemeLike = DwellScheme.LITERAL) -> DwellBucket:
    """
    Hide the dwell behind a bucket id.

    Padding stays padding; every other id becomes Unknown.

    Raises:
        InvalidInputError: Bucket id outside the scheme's vocabulary
    """
    vocab = _as_scheme(scheme).vocab_size
    if not 0 <= bucket < vocab:
        raise InvalidInputError(f"bucket id must lie in [0, {vocab - 1}], got {bucket}")
    return PADDING_BUCKET if bucket == PADDING_BUCKET else UNKNOWN_BUCKET


def is_effective(raw: RawDwell, theta: float) -> bool:
    """A click is effective when its known dwell exceeds theta seconds."""
    return raw is not None and float(raw) > theta


def _bars(known: Sequence[float], n_records: int) -> List[Tuple[float, float]]:
    if not known:
        return []
    counts = Counter(int(t // BAR_WIDTH_SECONDS) for t in known)
    last = max(counts)
    return [
        (i * BAR_WIDTH_SECONDS, counts.get(i, 0) / n_records)
        for i in range(last + 1)
    ]


def dwell_stats(
    records: Iterable[RawDwell],
    scheme: SchemeLike = DwellScheme.LITERAL,
) -> DwellDistribution:
    """
    Compute distribution statistics over raw dwell values.

    Args:
        records: Raw dwell values (None for Unknown)
        scheme: Bucket scheme for the per-bucket counts

    Returns:
        DwellDistribution over the input

    Raises:
        EmptyInputError: No records
        InvalidInputError: A negative or non-finite value
    """
    scheme = _as_scheme(scheme)
    values = list(records)
    if not values:
        raise EmptyInputError("dwell_stats needs at least one record")

    bucket_counts: Counter = Counter()
    known: List[float] = []
    for raw in values:
        bucket_counts[int(discretize(raw, scheme))] += 1
        if raw is not None:
            known.append(float(raw))

    n_records = len(values)
    n_known = len(known)
    over_5s = sum(1 for t in known if t > EFFECTIVE_REFERENCE_SECONDS)

    return DwellDistribution(
        bucket_counts=dict(sorted(bucket_counts.items())),
        n_records=n_records,
        n_known=n_known,
        unknown_fraction=(n_records - n_known) / n_records,
        over_5s_fraction=over_5s / n_known if n_known else 0.0,
        over_5s_defined=n_known > 0,
        mean_known_seconds=sum(known) / n_known if n_known else 0.0,
        bar_30s=_bars(known, n_records),
        scheme=scheme,
    )
