"""
Unit tests for dwell-time discretization and distribution statistics.

Tests cover:
- The literal bucket map, collisions included
- The monotonic renumbering
- Masking and effective clicks
- Distribution summaries
"""

import math

import pytest

from dwellrec.core.exceptions import EmptyInputError, InvalidInputError
from dwellrec.domain.dwell import discretize, dwell_stats, is_effective, mask_bucket
from dwellrec.domain.entities import DwellScheme, PADDING_BUCKET, UNKNOWN_BUCKET


# ============================================================
# Discretization
# ============================================================

class TestDiscretize:
    """Tests for discretize."""

    @pytest.mark.parametrize(
        "raw,bucket",
        [
            (None, 1),
            (0, 2),
            (3, 3),
            (5, 4),
            (7, 4),
            (59, 14),
            (60, 6),
            (120, 7),
            (599, 14),
            (600, 9),
            (10000, 9),
        ],
    )
    def test_literal_reference_values(self, raw, bucket):
        """Test the literal map on reference values."""
        assert discretize(raw) == bucket

    def test_fractional_seconds(self):
        """Test fractional values fall in the enclosing range."""
        assert discretize(0.001) == 3
        assert discretize(4.999) == 3
        assert discretize(9.999) == 4
        assert discretize(10.0) == 5

    def test_literal_collisions(self):
        """Test the minute ladder reuses ids of the 5-second ladder."""
        assert discretize(15) == discretize(60) == 6
        assert discretize(20) == discretize(120) == 7
        assert discretize(30) == discretize(600) == 9
        assert discretize(55) == discretize(599) == 14

    def test_monotonic_is_injective_over_ranges(self):
        """Test the monotonic scheme gives each range its own id."""
        points = [0, 3, 5, 10, 55, 60, 120, 599, 600]
        ids = [discretize(t, DwellScheme.MONOTONIC) for t in points]
        assert ids == sorted(ids)
        assert len(set(ids)) == len(ids)
        assert discretize(600, "monotonic") == 25
        assert discretize(60, "monotonic") == 16

    def test_monotonic_matches_literal_below_a_minute(self):
        """Test both schemes agree under 60 seconds."""
        for t in [None, 0, 1, 5, 17.5, 59.9]:
            assert discretize(t, "monotonic") == discretize(t, "literal")

    def test_vocab_covers_every_id(self):
        """Test every produced id fits in the embedding table."""
        for scheme in DwellScheme:
            for t in [None, 0, 1, 59, 60, 599, 600, 1e6]:
                assert 1 <= discretize(t, scheme) < scheme.vocab_size

    @pytest.mark.parametrize("raw", [-1, -0.001, math.inf, math.nan])
    def test_invalid_seconds(self, raw):
        """Test negative and non-finite values are rejected."""
        with pytest.raises(InvalidInputError):
            discretize(raw)

    def test_unknown_scheme(self):
        """Test an unknown scheme name is rejected."""
        with pytest.raises(InvalidInputError):
            discretize(90, "octal")


# ============================================================
# Masking and effective clicks
# ============================================================

class TestMaskAndEffective:
    """Tests for mask_bucket and is_effective."""

    def test_mask_keeps_padding(self):
        """Test padding survives masking."""
        assert mask_bucket(PADDING_BUCKET) == PADDING_BUCKET

    @pytest.mark.parametrize(
        "bucket, scheme",
        [(1, "literal"), (2, "literal"), (9, "literal"), (14, "literal"), (15, "monotonic"), (25, "monotonic")],
    )
    def test_mask_hides_everything_else(self, bucket, scheme):
        """Test every real bucket becomes Unknown."""
        assert mask_bucket(bucket, scheme) == UNKNOWN_BUCKET

    @pytest.mark.parametrize("bucket, scheme", [(-1, "literal"), (15, "literal"), (26, "monotonic")])
    def test_mask_rejects_out_of_vocabulary(self, bucket, scheme):
        """Test ids outside the scheme's vocabulary are invalid."""
        with pytest.raises(InvalidInputError):
            mask_bucket(bucket, scheme)

    def test_effective_is_strict(self):
        """Test the threshold itself is not effective."""
        assert not is_effective(5.0, 5.0)
        assert is_effective(5.001, 5.0)
        assert not is_effective(None, 5.0)


# ============================================================
# Distribution statistics
# ============================================================

class TestDwellStats:
    """Tests for dwell_stats."""

    def test_fractions(self):
        """Test unknown and over-5s fractions."""
        dist = dwell_stats([None, 0, 3, 10, 100])
        assert dist.n_records == 5
        assert dist.n_known == 4
        assert dist.unknown_fraction == pytest.approx(0.2)
        assert dist.over_5s_fraction == pytest.approx(0.5)
        assert dist.over_5s_defined
        assert dist.mean_known_seconds == pytest.approx(113 / 4)

    def test_bucket_counts_sum_to_records(self):
        """Test every record lands in exactly one bucket."""
        values = [None, None, 0, 4, 5, 61, 700, 59]
        dist = dwell_stats(values)
        assert sum(dist.bucket_counts.values()) == len(values)
        assert sum(f for _, _, f in dist.csv_rows()) == pytest.approx(1.0)
        assert dist.bucket_counts[1] == 2

    def test_all_unknown(self):
        """Test an all-Unknown input reports an undefined over-5s fraction."""
        dist = dwell_stats([None, None])
        assert dist.unknown_fraction == 1.0
        assert dist.over_5s_fraction == 0.0
        assert not dist.over_5s_defined
        assert dist.bar_30s == []

    def test_bars_relative_to_all_records(self):
        """Test 30-second bars sum to the known fraction."""
        dist = dwell_stats([None, 10, 20, 40, 95])
        assert [start for start, _ in dist.bar_30s] == [0.0, 30.0, 60.0, 90.0]
        assert sum(f for _, f in dist.bar_30s) == pytest.approx(0.8)
        assert dist.bar_30s[2][1] == 0.0

    def test_empty_input(self):
        """Test no records is an error."""
        with pytest.raises(EmptyInputError):
            dwell_stats([])

    def test_summary_keys(self):
        """Test the summary carries both headline fractions."""
        summary = dwell_stats([1, 10]).summary()
        assert summary["unknown_fraction"] == 0.0
        assert summary["over_5s_fraction"] == 0.5
