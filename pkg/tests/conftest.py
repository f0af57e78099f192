"""Shared fixtures for the DwellRec test suite."""

import numpy as np
import pytest

from dwellrec.core.config import get_settings
from dwellrec.domain.datagen import GeneratorConfig, generate_corpus, split_by_user
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.entities import Candidate, ClickRecord, Impression, NewsItem
from dwellrec.services.embeddings import EmbeddingStore, build_synthetic_store


# ============================================================
# Settings
# ============================================================

@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Keep process settings independent of the developer's environment."""
    for name in ("DWELLREC_THREADS", "DWELLREC_CONFIG", "DWELLREC_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("DWELLREC_RUNS_DIR", str(tmp_path / "runs"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# ============================================================
# Data
# ============================================================

@pytest.fixture
def small_generator_config() -> GeneratorConfig:
    """A generator small enough for fast tests."""
    return GeneratorConfig(n_news=120, n_users=60, history_min=3, history_max=12)


@pytest.fixture
def small_corpus(small_generator_config):
    """(news, train, test) from the small generator, seed 42."""
    news, impressions = generate_corpus(small_generator_config, seed=42)
    train, test = split_by_user(impressions, small_generator_config.test_impressions_per_user)
    return news, train, test


@pytest.fixture
def tiny_encoder_config() -> EncoderConfig:
    """Tiny DweA encoder: history 4, news 6, dwell 3, 2 heads of 3."""
    return EncoderConfig(
        variant=EncoderVariant.DWEA,
        news_dim=6,
        dwell_dim=3,
        heads=2,
        head_dim=3,
        max_history=4,
        k_negatives=2,
    )


@pytest.fixture
def small_store(small_corpus) -> EmbeddingStore:
    """Synthetic 8-dimensional embeddings of the small catalog."""
    news, _, _ = small_corpus
    return build_synthetic_store(news, dim=8, seed=7)


@pytest.fixture
def toy_store() -> EmbeddingStore:
    """Six hand-made 6-dimensional news vectors N1..N6."""
    rng = np.random.default_rng(3)
    store = EmbeddingStore(dim=6)
    for i in range(1, 7):
        store.add(f"N{i}", rng.normal(size=6))
    return store


@pytest.fixture
def toy_impression() -> Impression:
    """Three-click history (Unknown, short, long) and four candidates."""
    return Impression(
        impression_id="U1-00",
        user_id="U1",
        history=[
            ClickRecord("N1", None),
            ClickRecord("N2", 2.5),
            ClickRecord("N3", 45.0),
        ],
        candidates=[
            Candidate("N4", 1, 30.0),
            Candidate("N5", 0),
            Candidate("N6", 0),
            Candidate("N1", 0),
        ],
    )


@pytest.fixture
def toy_news() -> list:
    """Catalog entries over 3 topics."""
    return [
        NewsItem("N1", np.array([1.0, 0.0, 0.0])),
        NewsItem("N2", np.array([0.2, 0.8, 0.0])),
        NewsItem("N3", np.array([0.1, 0.1, 0.8])),
    ]
