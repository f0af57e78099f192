"""
Unit tests for the news embedding store.

Tests cover:
- Insert and lookup, padding and missing ids
- Text and binary store files
- The synthetic embedder
"""

import numpy as np
import pytest

from dwellrec.core.exceptions import ConfigError, DataFormatError, MissingNewsError
from dwellrec.domain.entities import NewsItem
from dwellrec.services.embeddings import (
    PADDING_ID,
    EmbeddingStore,
    build_synthetic_store,
    load_store,
    save_store,
    synth_embed,
)


# ============================================================
# Store
# ============================================================

class TestEmbeddingStore:
    """Tests for EmbeddingStore."""

    def test_dimension_fixed_by_first_vector(self):
        """Test the first insert fixes the dimension."""
        store = EmbeddingStore()
        store.add("A", [1.0, 2.0, 3.0])
        assert store.dim == 3
        with pytest.raises(DataFormatError):
            store.add("B", [1.0, 2.0])

    def test_get_and_matrix(self, toy_store):
        """Test lookups stack in request order."""
        m = toy_store.matrix(["N2", "N1", "N2"])
        assert m.shape == (3, 6)
        np.testing.assert_array_equal(m[0], toy_store.get("N2"))
        np.testing.assert_array_equal(m[1], toy_store.get("N1"))

    def test_padding_is_zero(self, toy_store):
        """Test the padding id resolves to zeros."""
        assert PADDING_ID in toy_store
        np.testing.assert_array_equal(toy_store.get(PADDING_ID), np.zeros(6))

    def test_padding_is_reserved(self):
        """Test the padding id cannot be inserted."""
        with pytest.raises(DataFormatError):
            EmbeddingStore().add(PADDING_ID, [0.0])

    def test_missing_id(self, toy_store):
        """Test an unknown id raises MissingNewsError."""
        with pytest.raises(MissingNewsError):
            toy_store.get("N99")

    def test_duplicates_replace_and_count(self):
        """Test a duplicate keeps the last vector."""
        store = EmbeddingStore(dim=2)
        assert not store.add("A", [1.0, 1.0])
        assert store.add("A", [2.0, 2.0])
        assert store.duplicates == 1
        np.testing.assert_array_equal(store.get("A"), [2.0, 2.0])

    def test_non_finite_rejected(self):
        """Test NaN entries are refused."""
        with pytest.raises(DataFormatError):
            EmbeddingStore().add("A", [1.0, float("nan")])

    def test_non_positive_dimension(self):
        """Test a zero dimension is a configuration error."""
        with pytest.raises(ConfigError):
            EmbeddingStore(dim=0)

    def test_empty_matrix(self, toy_store):
        """Test no ids give an empty (0, d) matrix."""
        assert toy_store.matrix([]).shape == (0, 6)


# ============================================================
# Files
# ============================================================

class TestStoreFiles:
    """Tests for load_store and save_store."""

    def test_text_file_is_exact(self, toy_store, tmp_path):
        """Test the text format keeps full float64 precision."""
        path = save_store(toy_store, tmp_path / "store.tsv")
        loaded = load_store(path)
        assert loaded.ids() == toy_store.ids()
        for news_id in toy_store.ids():
            np.testing.assert_array_equal(loaded.get(news_id), toy_store.get(news_id))

    def test_binary_file_is_detected(self, toy_store, tmp_path):
        """Test the binary format loads back at float32 precision."""
        path = save_store(toy_store, tmp_path / "store.bin", binary=True)
        assert path.read_bytes()[:4] == b"NREC"
        loaded = load_store(path)
        assert loaded.dim == 6
        np.testing.assert_allclose(loaded.get("N3"), toy_store.get("N3"), rtol=1e-6)

    def test_duplicate_lines_keep_last(self, tmp_path):
        """Test a duplicated id in a file keeps the last line."""
        path = tmp_path / "store.tsv"
        path.write_text("A\t1,2\nA\t3,4\n", encoding="utf-8")
        store = load_store(path)
        assert len(store) == 1
        assert store.duplicates == 1
        np.testing.assert_array_equal(store.get("A"), [3.0, 4.0])

    def test_dimension_mismatch_names_line(self, tmp_path):
        """Test a short vector reports its line number."""
        path = tmp_path / "store.tsv"
        path.write_text("A\t1,2\nB\t1\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match=":2:"):
            load_store(path)

    def test_bad_float(self, tmp_path):
        """Test an unparseable value is a format error."""
        path = tmp_path / "store.tsv"
        path.write_text("A\t1,x\n", encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_store(path)

    def test_missing_file(self, tmp_path):
        """Test a missing store file is a format error."""
        with pytest.raises(DataFormatError):
            load_store(tmp_path / "nope.tsv")

    def test_truncated_binary(self, toy_store, tmp_path):
        """Test a cut binary file is reported."""
        path = save_store(toy_store, tmp_path / "store.bin", binary=True)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(DataFormatError, match="truncated"):
            load_store(path)


# ============================================================
# Synthetic embedder
# ============================================================

class TestSynthEmbed:
    """Tests for synth_embed and build_synthetic_store."""

    def test_unit_norm_and_deterministic(self, toy_news):
        """Test vectors are unit-norm and reproducible."""
        a = synth_embed(toy_news[0], dim=8, seed=1)
        b = synth_embed(toy_news[0], dim=8, seed=1)
        np.testing.assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0)

    def test_seed_changes_vectors(self, toy_news):
        """Test a different seed gives a different embedding."""
        a = synth_embed(toy_news[1], dim=8, seed=1)
        b = synth_embed(toy_news[1], dim=8, seed=2)
        assert not np.allclose(a, b)

    def test_same_topic_mix_stays_close(self):
        """Test items sharing a topic mixture differ only by the id noise."""
        mix = np.array([0.5, 0.5, 0.0])
        a = synth_embed(NewsItem("X1", mix), dim=16, seed=0)
        b = synth_embed(NewsItem("X2", mix), dim=16, seed=0)
        assert float(a @ b) > 0.9

    def test_invalid_arguments(self, toy_news):
        """Test dimension and noise scale are validated."""
        with pytest.raises(ConfigError):
            synth_embed(toy_news[0], dim=0, seed=0)
        with pytest.raises(ConfigError):
            synth_embed(toy_news[0], dim=4, seed=0, noise_scale=-1.0)

    def test_build_store(self, toy_news):
        """Test a whole catalog is embedded."""
        store = build_synthetic_store(toy_news, dim=5, seed=0)
        assert len(store) == 3
        assert store.dim == 5
