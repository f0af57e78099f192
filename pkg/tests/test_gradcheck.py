"""
Gradient check suite tests.

The quick tests run a few trials per case; the full randomized suite is
marked slow.
"""

import numpy as np
import pytest

from dwellrec.core.exceptions import InvalidInputError
from dwellrec.domain.encoders.config import EncoderVariant
from dwellrec.services.gradcheck_suite import (
    default_cases,
    random_history,
    run_gradcheck_suite,
    tiny_encoder_config,
)


class TestGradcheckSuite:
    """Tests for run_gradcheck_suite."""

    def test_every_layer_and_variant_covered(self):
        """Test the suite holds every layer and every encoder variant."""
        names = set(default_cases())
        assert {"linear", "multi_head_attention", "attention_pooling", "dwell_embedding", "reading_preference_gate"} <= names
        for variant in EncoderVariant:
            assert f"encoder.{variant.value}" in names

    def test_quick_run_passes(self):
        """Test a few trials of every case stay under 1e-4."""
        report = run_gradcheck_suite(trials=4, seed=1)
        failed = {c.name: c.max_rel_error for c in report.cases if not c.passed(report.tolerance)}
        assert report.passed, failed
        assert all(case.trials == 4 for case in report.cases)
        assert all(case.n_coords > 0 for case in report.cases)

    def test_report_dict(self):
        """Test the JSON form carries one entry per case."""
        report = run_gradcheck_suite(trials=1, seed=2)
        data = report.to_dict()
        assert data["passed"] is report.passed
        assert len(data["cases"]) == len(default_cases())
        assert data["tolerance"] == 1e-4

    def test_trials_validated(self):
        """Test at least one trial is required."""
        with pytest.raises(InvalidInputError):
            run_gradcheck_suite(trials=0)

    def test_random_history_has_effective_click(self):
        """Test generated histories always exercise the effective view."""
        cfg = tiny_encoder_config(EncoderVariant.DWEW)
        rng = np.random.default_rng(0)
        for _ in range(20):
            eh = random_history(rng, cfg)
            assert 1 <= eh.n_valid <= cfg.max_history
            assert np.nanmax(eh.dwell) > cfg.theta

    @pytest.mark.slow
    def test_full_suite(self):
        """Test 100 randomized trials per case."""
        report = run_gradcheck_suite(trials=100, seed=0)
        assert report.passed, report.to_dict()
        assert report.max_rel_error < 1e-4
