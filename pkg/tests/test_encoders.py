"""
Unit tests for the user encoders and the recommender model.

Tests cover:
- Negative-sampling loss values and gradient
- History encoding and the effective-click split
- Variant registry
- Dwell sensitivity of each variant, the DweW bypass and gate
- DweW weight sharing, DweA logits and single-click behavior
- Scoring shapes and permutation invariance
"""

import math

import numpy as np
import pytest

from dwellrec.core.exceptions import ConfigError, InvalidInputError, NumericError, ShapeError
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.history import encode_history, split_effective
from dwellrec.domain.encoders.model import RecommenderModel, sample_loss, sample_loss_grad
from dwellrec.domain.encoders.variants import available_variants, get_encoder_class
from dwellrec.domain.encoders.variants.dwew import DweWEncoder
from dwellrec.domain.entities import ClickRecord


def with_variant(cfg: EncoderConfig, variant: EncoderVariant) -> EncoderConfig:
    return cfg.model_copy(update={"variant": variant})


def history(*dwells):
    """Clicks on N1, N2, ... with the given dwell values."""
    return [ClickRecord(f"N{i + 1}", d) for i, d in enumerate(dwells)]


# ============================================================
# Loss
# ============================================================

class TestSampleLoss:
    """Tests for the (K+1)-way cross-entropy."""

    @pytest.mark.parametrize("k", [1, 2, 4, 8])
    def test_equal_scores(self, k):
        """Test equal scores give ln(K + 1)."""
        assert sample_loss(0.3, [0.3] * k) == pytest.approx(math.log(k + 1))

    def test_reference_value(self):
        """Test a positive of 1 against two zeros."""
        assert sample_loss(1.0, [0.0, 0.0]) == pytest.approx(0.55144, abs=1e-5)

    def test_large_scores_stable(self):
        """Test huge scores do not overflow."""
        assert sample_loss(1000.0, [1000.0]) == pytest.approx(math.log(2))
        assert sample_loss(1000.0, [-1000.0]) == pytest.approx(0.0, abs=1e-12)

    def test_needs_a_negative(self):
        """Test a positive alone is refused."""
        with pytest.raises(InvalidInputError):
            sample_loss(1.0, [])

    def test_non_finite(self):
        """Test NaN scores raise NumericError."""
        with pytest.raises(NumericError):
            sample_loss(float("nan"), [0.0])

    def test_gradient_sums_to_zero(self):
        """Test softmax minus one-hot sums to zero and is negative at the positive."""
        loss, grad = sample_loss_grad(np.array([1.0, 0.0, 0.0]))
        assert loss == pytest.approx(0.55144, abs=1e-5)
        assert grad.sum() == pytest.approx(0.0, abs=1e-12)
        assert grad[0] < 0 < grad[1]

    def test_gradient_at_positive_index(self):
        """Test the positive may sit anywhere among the scores."""
        loss, grad = sample_loss_grad(np.array([0.0, 1.0, 0.0]), positive_index=1)
        assert loss == pytest.approx(0.55144, abs=1e-5)
        assert grad[1] < 0 < grad[0]
        with pytest.raises(InvalidInputError):
            sample_loss_grad(np.array([0.0, 1.0]), positive_index=2)


# ============================================================
# History encoding
# ============================================================

class TestHistory:
    """Tests for encode_history and split_effective."""

    def test_padding_and_mask(self, toy_store, tiny_encoder_config):
        """Test valid rows come first and padding is zero."""
        eh = encode_history(history(None, 2.5, 45.0), toy_store, tiny_encoder_config)
        assert eh.capacity == 4
        assert eh.mask.tolist() == [True, True, True, False]
        assert np.all(eh.rows[3] == 0.0)
        assert eh.buckets[3] == 0
        assert eh.buckets[0] == 1
        assert math.isnan(eh.dwell[0])

    def test_keeps_most_recent(self, toy_store, tiny_encoder_config):
        """Test long histories keep the last H clicks."""
        eh = encode_history(history(1, 2, 3, 4, 5, 6), toy_store, tiny_encoder_config)
        assert eh.n_valid == 4
        np.testing.assert_array_equal(eh.rows[0], toy_store.get("N3"))
        np.testing.assert_array_equal(eh.dwell, [3, 4, 5, 6])

    def test_empty_history(self, toy_store, tiny_encoder_config):
        """Test no clicks give an all-padding block."""
        eh = encode_history([], toy_store, tiny_encoder_config)
        assert eh.empty
        assert eh.rows.shape == (4, 6)

    def test_effective_split(self, toy_store, tiny_encoder_config):
        """Test only known dwell above theta is effective."""
        eh = encode_history(history(None, 2.5, 45.0, 5.0), toy_store, tiny_encoder_config)
        original, effective = split_effective(eh, 5.0)
        assert original is eh
        assert effective.n_valid == 1
        np.testing.assert_array_equal(effective.rows[0], toy_store.get("N3"))
        assert effective.capacity == eh.capacity


# ============================================================
# Registry
# ============================================================

class TestRegistry:
    """Tests for the variant registry."""

    def test_all_variants_registered(self):
        """Test the four variants are available."""
        assert available_variants() == ["base_attpool", "base_mha", "dwew", "dwea"]

    def test_lookup_by_name(self):
        """Test a string key resolves to its class."""
        assert get_encoder_class("dwew") is DweWEncoder

    def test_unknown_variant(self):
        """Test an unknown key names the config key."""
        with pytest.raises(ConfigError, match="encoder.variant"):
            get_encoder_class("lstm")

    def test_uses_dwell(self):
        """Test only the dwell variants declare dwell use."""
        assert [v.value for v in EncoderVariant if v.uses_dwell] == ["dwew", "dwea"]


# ============================================================
# Variants
# ============================================================

class TestVariants:
    """Tests for the behavior of each encoder variant."""

    def user_vector(self, cfg, store, clicks, seed=5):
        model = RecommenderModel(cfg, seed=seed)
        return model.user_vector(model.encode_history(clicks, store))

    @pytest.mark.parametrize("variant", [EncoderVariant.BASE_ATTPOOL, EncoderVariant.BASE_MHA])
    def test_baselines_ignore_dwell(self, variant, toy_store, tiny_encoder_config):
        """Test changing dwell leaves dwell-blind encoders unchanged."""
        cfg = with_variant(tiny_encoder_config, variant)
        a = self.user_vector(cfg, toy_store, history(None, 2.5, 45.0))
        b = self.user_vector(cfg, toy_store, history(300.0, None, 0.0))
        np.testing.assert_array_equal(a, b)

    def test_dwea_reads_dwell(self, toy_store, tiny_encoder_config):
        """Test DweA output depends on the dwell buckets."""
        a = self.user_vector(tiny_encoder_config, toy_store, history(None, 2.5, 45.0))
        b = self.user_vector(tiny_encoder_config, toy_store, history(45.0, 2.5, None))
        assert not np.allclose(a, b)

    def test_dwew_bypass_without_effective_clicks(self, toy_store, tiny_encoder_config):
        """Test DweW falls back to the original view when nothing is effective."""
        cfg = with_variant(tiny_encoder_config, EncoderVariant.DWEW)
        model = RecommenderModel(cfg, seed=5)
        eh = model.encode_history(history(None, 2.5, 1.0), toy_store)
        u, cache = model.encoder.encode(eh)
        assert cache.bypassed

        eh2 = model.encode_history(history(0.0, None, 4.0), toy_store)
        np.testing.assert_array_equal(u, model.user_vector(eh2))

    def test_dwew_gate_used_with_effective_clicks(self, toy_store, tiny_encoder_config):
        """Test DweW blends both views when a click is effective."""
        cfg = with_variant(tiny_encoder_config, EncoderVariant.DWEW)
        model = RecommenderModel(cfg, seed=5)
        eh = model.encode_history(history(None, 2.5, 45.0), toy_store)
        u, cache = model.encoder.encode(eh)
        assert not cache.bypassed
        gate = model.encoder.gate_weights(eh)
        assert gate.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(u, gate[0] * cache.u_effective + gate[1] * cache.u_original)

    @pytest.mark.parametrize("variant", list(EncoderVariant))
    def test_history_order_invariance(self, variant, toy_store, tiny_encoder_config):
        """Test reordering the clicks does not change the user vector."""
        cfg = with_variant(tiny_encoder_config, variant)
        clicks = history(None, 2.5, 45.0)
        a = self.user_vector(cfg, toy_store, clicks)
        b = self.user_vector(cfg, toy_store, [clicks[2], clicks[0], clicks[1]])
        np.testing.assert_allclose(a, b, atol=1e-12)

    @pytest.mark.parametrize("variant", list(EncoderVariant))
    def test_empty_history_scores_zero(self, variant, toy_store, tiny_encoder_config):
        """Test an empty history gives a zero user vector and zero scores."""
        cfg = with_variant(tiny_encoder_config, variant)
        model = RecommenderModel(cfg, seed=5)
        scores = model.score_impression([], ["N4", "N5"], toy_store)
        assert np.all(scores == 0.0)


class TestDwellSensitivity:
    """Tests for how the dwell-aware variants react to dwell values."""

    def test_dwew_shares_weights_when_all_clicks_effective(self, toy_store, tiny_encoder_config):
        """Test both DweW views coincide when every click passes the threshold."""
        cfg = with_variant(tiny_encoder_config, EncoderVariant.DWEW)
        model = RecommenderModel(cfg, seed=5)
        eh = model.encode_history(history(30.0, 45.0, 12.0), toy_store)
        u, cache = model.encoder.encode(eh)
        assert not cache.bypassed
        np.testing.assert_array_equal(cache.u_effective, cache.u_original)
        np.testing.assert_allclose(u, cache.u_original, atol=1e-12)

    def test_dwea_logits_follow_buckets(self, toy_store, tiny_encoder_config):
        """Test DweA attention logits change when only the buckets change."""
        model = RecommenderModel(tiny_encoder_config, seed=5)
        encoder = model.encoder
        eh_a = model.encode_history(history(None, 2.5, 45.0), toy_store)
        eh_b = model.encode_history(history(45.0, 2.5, None), toy_store)
        qk_a = encoder.attention_inputs(eh_a)
        qk_b = encoder.attention_inputs(eh_b)
        news_dim = tiny_encoder_config.news_dim
        np.testing.assert_array_equal(qk_a[:, :news_dim], qk_b[:, :news_dim])

        logits_a = encoder.context.mha.logits(qk_a, qk_a)
        logits_b = encoder.context.mha.logits(qk_b, qk_b)
        assert logits_a.shape == (tiny_encoder_config.heads, eh_a.capacity, eh_a.capacity)
        assert not np.allclose(logits_a, logits_b)

    def test_dwea_single_click_ignores_bucket(self, toy_store, tiny_encoder_config):
        """Test a one-click history gives the same user vector for any dwell."""
        model = RecommenderModel(tiny_encoder_config, seed=5)
        vectors = [
            model.user_vector(model.encode_history([ClickRecord("N1", dwell)], toy_store))
            for dwell in (None, 2.5, 45.0, 300.0)
        ]
        for other in vectors[1:]:
            np.testing.assert_allclose(other, vectors[0], atol=1e-12)


# ============================================================
# Model
# ============================================================

class TestRecommenderModel:
    """Tests for RecommenderModel."""

    def test_same_seed_same_parameters(self, tiny_encoder_config):
        """Test initialization is reproducible."""
        a = RecommenderModel(tiny_encoder_config, seed=9).params.state()
        b = RecommenderModel(tiny_encoder_config, seed=9).params.state()
        assert list(a) == list(b)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_score_impression_shape(self, toy_store, toy_impression, tiny_encoder_config):
        """Test one score per candidate."""
        model = RecommenderModel(tiny_encoder_config, seed=1)
        scores = model.score_impression(
            toy_impression.history,
            [c.news_id for c in toy_impression.candidates],
            toy_store,
        )
        assert scores.shape == (4,)
        assert np.all(np.isfinite(scores))

    def test_predict_matches_score(self, toy_store, tiny_encoder_config):
        """Test predict agrees with batch scoring."""
        model = RecommenderModel(tiny_encoder_config, seed=1)
        eh = model.encode_history(history(None, 30.0), toy_store)
        u = model.user_vector(eh)
        scores = model.score(eh, toy_store.matrix(["N5", "N6"]))
        assert model.predict(u, toy_store.get("N6")) == pytest.approx(scores[1])

    def test_predict_shape_error(self, toy_store, tiny_encoder_config):
        """Test a user vector of the wrong size is refused."""
        model = RecommenderModel(tiny_encoder_config, seed=1)
        with pytest.raises(ShapeError):
            model.predict(np.zeros(5), toy_store.get("N1"))

    def test_untrained_loss_near_uniform(self, toy_store, tiny_encoder_config):
        """Test the initial loss is finite and accumulates gradients."""
        model = RecommenderModel(tiny_encoder_config, seed=1)
        eh = model.encode_history(history(None, 30.0, 12.0), toy_store)
        loss = model.loss_and_grad(eh, toy_store.matrix(["N4", "N5", "N6"]))
        assert math.isfinite(loss)
        assert any(np.any(p.grad != 0.0) for p in model.params)

    def test_loss_follows_positive_position(self, toy_store, tiny_encoder_config):
        """Test moving the positive and its row together leaves the loss unchanged."""
        model = RecommenderModel(tiny_encoder_config, seed=1)
        eh = model.encode_history(history(None, 30.0, 12.0), toy_store)
        first = model.loss_and_grad(eh, toy_store.matrix(["N4", "N5", "N6"]), compute_grads=False)
        moved = model.loss_and_grad(
            eh, toy_store.matrix(["N5", "N6", "N4"]), compute_grads=False, positive_index=2
        )
        assert moved == pytest.approx(first, abs=1e-12)
