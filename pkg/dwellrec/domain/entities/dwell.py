"""
Dwell Time Domain Types.

Dwell time is the cumulative number of seconds a user spends on a clicked
item. Telemetry arrives late or not at all for a share of clicks, so a raw
dwell is either a non-negative number of seconds or Unknown (None).

Raw values are discretized into bucket ids for the dwell embedding table:

- 0: sequence padding, never produced by discretization
- 1: Unknown dwell
- 2: exactly zero seconds
- 3: (0, 5) seconds
- 4..14: the 5-second and 60-second ladders (literal scheme)
- 9: 600 seconds and above (literal scheme)

The literal scheme follows the piecewise map as written, bucket collisions
included. The monotonic scheme renumbers the minute ladder so every range
gets its own id.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NewType, Optional, Tuple

RawDwell = Optional[float]
"""Dwell in seconds, or None when the telemetry is unknown."""

DwellBucket = NewType("DwellBucket", int)

PADDING_BUCKET = DwellBucket(0)
UNKNOWN_BUCKET = DwellBucket(1)

BAR_WIDTH_SECONDS = 30.0


class DwellScheme(str, Enum):
    """Bucket numbering schemes."""

    LITERAL = "literal"
    MONOTONIC = "monotonic"

    @property
    def vocab_size(self) -> int:
        """Rows needed in a dwell embedding table (padding row included)."""
        return 15 if self is DwellScheme.LITERAL else 26


@dataclass
class DwellDistribution:
    """
    Distribution statistics over a collection of raw dwell values.

    Attributes:
        bucket_counts: Count per bucket id (literal scheme unless stated)
        n_records: Number of records, Unknown included
        n_known: Number of records with a known dwell
        unknown_fraction: Unknown records over all records
        over_5s_fraction: Known records above 5 s over known records
        over_5s_defined: False when no record is known (fraction reported as 0)
        mean_known_seconds: Mean of known dwell, 0.0 when none is known
        bar_30s: (interval start seconds, fraction of all records) per 30 s bar
        scheme: Bucket scheme used for bucket_counts
    """

    bucket_counts: Dict[int, int]
    n_records: int
    n_known: int
    unknown_fraction: float
    over_5s_fraction: float
    over_5s_defined: bool = True
    mean_known_seconds: float = 0.0
    bar_30s: List[Tuple[float, float]] = field(default_factory=list)
    scheme: DwellScheme = DwellScheme.LITERAL

    @property
    def bucket_fractions(self) -> Dict[int, float]:
        """Per-bucket share of all records."""
        return {b: c / self.n_records for b, c in sorted(self.bucket_counts.items())}

    def summary(self) -> dict:
        """Summary block emitted next to the per-bucket CSV."""
        return {
            "unknown_fraction": self.unknown_fraction,
            "over_5s_fraction": self.over_5s_fraction,
            "over_5s_defined": self.over_5s_defined,
            "mean_known_seconds": self.mean_known_seconds,
            "n_records": self.n_records,
            "n_known": self.n_known,
            "bar_30s": [[start, frac] for start, frac in self.bar_30s],
        }

    def csv_rows(self) -> List[Tuple[int, int, float]]:
        """Rows of (bucket, count, fraction), ordered by bucket id."""
        fractions = self.bucket_fractions
        return [(b, self.bucket_counts[b], fractions[b]) for b in sorted(self.bucket_counts)]
