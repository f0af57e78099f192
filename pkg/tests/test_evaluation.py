"""
Unit tests for the evaluation runners.

Tests cover:
- evaluate with oracle, random and model scorers
- Determinism over impression order and worker count
- Skipped impressions
- Masked-dwell gap, report comparison, overall runner
- Threshold sweep rows and CSV
"""

import numpy as np
import pytest

from dwellrec.core.exceptions import DataFormatError, EmptyInputError, InvalidInputError
from dwellrec.domain.datagen.evalsets import build_eval_set
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.model import RecommenderModel
from dwellrec.domain.entities import Candidate, EvalMode, EvalSet, Impression, MetricReport
from dwellrec.services.evaluation import (
    RandomScorer,
    as_scorer,
    compare_reports,
    evaluate,
    load_sweep_models,
    run_masked_eval,
    run_overall,
    run_sweep,
)

SWEEP_THRESHOLDS = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]


class OracleScorer:
    """Scores every positive above every negative."""

    name = "oracle"

    def score(self, impression: Impression) -> np.ndarray:
        return np.array(impression.labels, dtype=np.float64)


def make_impression(impression_id: str, labels) -> Impression:
    return Impression(
        impression_id=impression_id,
        user_id="U",
        history=[],
        candidates=[Candidate(f"{impression_id}-{i}", y, 30.0 if y else None) for i, y in enumerate(labels)],
    )


def normal_set(impressions) -> EvalSet:
    return EvalSet(mode=EvalMode.NORMAL, impressions=list(impressions))


@pytest.fixture
def encoder_config() -> EncoderConfig:
    return EncoderConfig(
        variant=EncoderVariant.DWEA,
        news_dim=8,
        dwell_dim=4,
        heads=2,
        head_dim=4,
        max_history=12,
        k_negatives=2,
    )


@pytest.fixture
def models(encoder_config):
    """One untrained model per attention variant."""
    return {
        variant.value: RecommenderModel(encoder_config.model_copy(update={"variant": variant}), seed=3)
        for variant in (EncoderVariant.BASE_MHA, EncoderVariant.DWEW, EncoderVariant.DWEA)
    }


@pytest.fixture
def test_impressions(small_corpus):
    _, _, test = small_corpus
    return test


# ============================================================
# evaluate
# ============================================================

class TestEvaluate:
    """Tests for evaluate."""

    def test_perfect_ordering(self):
        """Test an oracle scorer reaches 1.0 on every metric."""
        report = evaluate(OracleScorer(), None, normal_set([make_impression("I1", [0, 1, 0, 0])]))
        assert report.to_dict() == {"auc": 1.0, "mrr": 1.0, "ndcg5": 1.0, "ndcg10": 1.0, "n": 1, "skipped": 0}

    def test_random_scores_near_half(self):
        """Test seeded random scores give AUC close to 0.5 over 10k impressions."""
        impressions = [make_impression(f"I{i}", [1, 0, 0, 0, 0]) for i in range(10_000)]
        report = evaluate(RandomScorer(seed=1), None, normal_set(impressions), threads=1)
        assert report.auc == pytest.approx(0.5, abs=0.02)

    def test_order_invariance(self, models, small_store, test_impressions):
        """Test reversing the impressions leaves the report unchanged."""
        model = models["dwea"]
        forward = evaluate(model, small_store, normal_set(test_impressions), threads=1)
        backward = evaluate(model, small_store, normal_set(reversed(test_impressions)), threads=1)
        assert forward.to_dict() == backward.to_dict()

    def test_thread_count_invariance(self, models, small_store, test_impressions):
        """Test one and four workers give identical reports."""
        eval_set = normal_set(test_impressions)
        single = evaluate(models["dwew"], small_store, eval_set, threads=1)
        pooled = evaluate(models["dwew"], small_store, eval_set, threads=4)
        assert single.to_dict() == pooled.to_dict()

    def test_metric_means_in_unit_interval(self, models, small_store, test_impressions):
        """Test every mean lies in [0, 1]."""
        report = evaluate(models["base_mha"], small_store, normal_set(test_impressions))
        for name in ("auc", "mrr", "ndcg5", "ndcg10"):
            assert 0.0 <= report.metric(name) <= 1.0
        assert report.n_impressions == len(test_impressions)

    def test_skipped_impressions_counted(self):
        """Test single-class impressions are skipped and counted."""
        impressions = [
            make_impression("I1", [1, 0]),
            make_impression("I2", [1, 0]),
            make_impression("I3", [1, 1]),
        ]
        report = evaluate(OracleScorer(), None, normal_set(impressions))
        assert report.skipped == 1
        assert report.n_impressions == 2

    def test_too_many_skipped(self):
        """Test more than half skipped is an error."""
        impressions = [
            make_impression("I1", [1, 0]),
            make_impression("I2", [1, 1]),
            make_impression("I3", [0, 0]),
        ]
        with pytest.raises(InvalidInputError):
            evaluate(OracleScorer(), None, normal_set(impressions))

    def test_empty_set(self):
        """Test an empty set is refused."""
        with pytest.raises(EmptyInputError):
            evaluate(OracleScorer(), None, normal_set([]))

    def test_model_needs_store(self, models):
        """Test a model cannot score without embeddings."""
        with pytest.raises(InvalidInputError):
            as_scorer(models["dwea"], None)

    def test_report_carries_set_label(self, small_store, models, test_impressions):
        """Test the report is labeled with its evaluation set."""
        eval_set = build_eval_set(test_impressions, EvalMode.REAL, 10.0)
        report = evaluate(models["dwea"], small_store, eval_set)
        assert report.label == "real(10)"


# ============================================================
# Masked dwell and comparisons
# ============================================================

class TestMaskedAndComparisons:
    """Tests for run_masked_eval, compare_reports and run_overall."""

    def test_dwell_blind_gap_is_zero(self, models, small_store, test_impressions):
        """Test masking dwell cannot move a dwell-blind model."""
        eval_set = build_eval_set(test_impressions, EvalMode.REAL, 5.0)
        gtb = run_masked_eval(models["base_mha"], small_store, eval_set)
        assert all(delta == 0.0 for delta in gtb.deltas.values())
        assert gtb.masked.label == "real(5)+masked"

    def test_gap_is_masked_minus_unmasked(self, models, small_store, test_impressions):
        """Test deltas are masked minus unmasked."""
        eval_set = build_eval_set(test_impressions, EvalMode.REAL, 5.0)
        gtb = run_masked_eval(models["dwea"], small_store, eval_set)
        assert gtb.deltas["auc"] == pytest.approx(gtb.masked.auc - gtb.unmasked.auc)
        assert set(gtb.to_dict()) == {"deltas", "unmasked", "masked"}

    def test_compare_reports(self):
        """Test absolute and relative deltas are reported separately."""
        base = MetricReport(auc=0.5, mrr=0.25, ndcg5=0.0, ndcg10=0.4, n_impressions=10)
        better = MetricReport(auc=0.6, mrr=0.25, ndcg5=0.1, ndcg10=0.3, n_impressions=10)
        comparison = compare_reports(better, base)
        assert comparison["auc"]["delta"] == pytest.approx(0.1)
        assert comparison["auc"]["relative_pct"] == pytest.approx(20.0)
        assert comparison["mrr"]["delta"] == 0.0
        assert comparison["ndcg5"]["relative_pct"] is None
        assert comparison["ndcg10"]["relative_pct"] == pytest.approx(-25.0)

    def test_run_overall(self, models, small_store, test_impressions):
        """Test every model gets the three evaluation modes."""
        results = run_overall({"dwea": models["dwea"]}, small_store, test_impressions, theta=5.0)
        assert set(results["dwea"]) == {"normal", "real", "robust"}
        assert results["dwea"]["normal"].n_impressions == len(test_impressions)


# ============================================================
# Sweep
# ============================================================

class TestSweep:
    """Tests for run_sweep."""

    def test_row_cardinality(self, models, small_store, test_impressions):
        """Test 8 thresholds and 3 variants give 24 rows and a header."""
        result = run_sweep(models, small_store, test_impressions, SWEEP_THRESHOLDS)
        assert len(result.rows) == 24
        lines = result.to_csv().splitlines()
        assert lines[0] == "variant,theta,auc,mrr,ndcg5,ndcg10"
        assert len(lines) == 25
        assert [row.variant for row in result.rows[:8]] == ["base_mha"] * 8

    def test_first_threshold_matches_direct_evaluation(self, models, small_store, test_impressions):
        """Test the theta=5 row equals evaluate on Real(5)."""
        result = run_sweep({"dwea": models["dwea"]}, small_store, test_impressions, [5.0, 10.0])
        direct = evaluate(models["dwea"], small_store, build_eval_set(test_impressions, EvalMode.REAL, 5.0))
        assert result.rows[0].theta == 5.0
        assert result.rows[0].report.to_dict() == direct.to_dict()

    def test_empty_threshold_gives_null_row(self, models, small_store, test_impressions):
        """Test a threshold above every dwell yields null metrics."""
        result = run_sweep({"dwea": models["dwea"]}, small_store, test_impressions, [5.0, 1e9])
        assert result.empty_thresholds == [1e9]
        assert result.to_csv().splitlines()[-1] == "dwea,1e+09,null,null,null,null"

    def test_needs_thresholds(self, models, small_store, test_impressions):
        """Test an empty threshold list is refused."""
        with pytest.raises(InvalidInputError):
            run_sweep(models, small_store, test_impressions, [])

    def test_missing_run_directory(self, tmp_path):
        """Test loading a variant without a trained model fails."""
        with pytest.raises(DataFormatError):
            load_sweep_models(tmp_path, ["dwea"])
