"""
News Embedding Store.

Stands in for an external text-embedding service: news vectors are produced
upstream (or synthesized here) and consumed frozen. Only the downstream
projections of the recommender learn.

Two file formats are supported and detected on load:

- text: one ``news_id<TAB>f1,f2,...,fd`` line per item
- binary: magic ``NREC``, u32 version (1), u32 d, then per record a u16 id
  length, the UTF-8 id and d little-endian 32-bit floats

The reserved id ``<pad>`` always resolves to the zero vector.
"""

import hashlib
import math
import struct
from functools import lru_cache
from pathlib import Path
from threading import Lock
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from dwellrec.core.exceptions import ConfigError, DataFormatError, MissingNewsError
from dwellrec.core.logging import get_logger
from dwellrec.domain.entities import NewsItem

logger = get_logger(__name__)

PADDING_ID = "<pad>"
BINARY_MAGIC = b"NREC"
BINARY_VERSION = 1

PathLike = Union[str, Path]


class EmbeddingStore:
    """
    Read-mostly map from news id to a d-dimensional vector.

    The dimension is fixed by the first inserted vector (or the constructor).
    Reads are safe from several threads; inserts take a lock.
    """

    def __init__(self, dim: Optional[int] = None) -> None:
        if dim is not None and dim <= 0:
            raise ConfigError(f"dimension must be positive, got {dim}", key="embeddings.dim")
        self._dim = dim
        self._vectors: Dict[str, np.ndarray] = {}
        self._lock = Lock()
        self.duplicates = 0

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, news_id: str) -> bool:
        return news_id == PADDING_ID or news_id in self._vectors

    def ids(self) -> List[str]:
        return list(self._vectors)

    def add(self, news_id: str, vector: Sequence[float]) -> bool:
        """
        Insert or replace a vector.

        Returns:
            True when an existing vector was replaced

        Raises:
            DataFormatError: Wrong dimension, non-finite entries or reserved id
        """
        if news_id == PADDING_ID:
            raise DataFormatError(f"{PADDING_ID!r} is reserved for padding")
        vec = np.array(vector, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(vec)):
            raise DataFormatError(f"non-finite entries in vector of {news_id!r}")
        with self._lock:
            if self._dim is None:
                self._dim = int(vec.size)
            elif vec.size != self._dim:
                raise DataFormatError(
                    f"dimension mismatch for {news_id!r}: expected {self._dim}, got {vec.size}"
                )
            replaced = news_id in self._vectors
            if replaced:
                self.duplicates += 1
            vec.setflags(write=False)
            self._vectors[news_id] = vec
        return replaced

    def get(self, news_id: str) -> np.ndarray:
        """
        Vector of one news id (zero vector for the padding id).

        Raises:
            MissingNewsError: Unknown id, or the store has no dimension yet
        """
        if news_id == PADDING_ID and self._dim is not None:
            return np.zeros(self._dim)
        try:
            return self._vectors[news_id]
        except KeyError:
            raise MissingNewsError(news_id) from None

    def matrix(self, news_ids: Sequence[str]) -> np.ndarray:
        """Stack the vectors of several ids into a (len, d) matrix."""
        if not news_ids:
            return np.zeros((0, self._dim or 0))
        return np.stack([self.get(nid) for nid in news_ids])

    def items(self) -> Iterable:
        return self._vectors.items()


# =============================================================================
# Files
# =============================================================================


def _parse_text(path: Path, data: bytes) -> EmbeddingStore:
    store = EmbeddingStore()
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        news_id, sep, values = raw.partition("\t")
        if not sep or not news_id:
            raise DataFormatError("expected 'news_id<TAB>f1,f2,...'", path=str(path), line=lineno)
        try:
            vector = [float(v) for v in values.split(",")]
        except ValueError:
            raise DataFormatError("unparseable float", path=str(path), line=lineno) from None
        try:
            store.add(news_id, vector)
        except DataFormatError as exc:
            raise DataFormatError(exc.message, path=str(path), line=lineno) from None
    return store


def _parse_binary(path: Path, data: bytes) -> EmbeddingStore:
    header = struct.calcsize("<4sII")
    if len(data) < header:
        raise DataFormatError("truncated header", path=str(path))
    _, version, dim = struct.unpack_from("<4sII", data, 0)
    if version != BINARY_VERSION:
        raise DataFormatError(f"unsupported store version {version}", path=str(path))

    store = EmbeddingStore(dim=dim or None)
    offset = header
    record = 0
    while offset < len(data):
        record += 1
        if offset + 2 > len(data):
            raise DataFormatError(f"truncated record {record}", path=str(path))
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        end = offset + id_len + 4 * dim
        if end > len(data):
            raise DataFormatError(f"truncated record {record}", path=str(path))
        news_id = data[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vector = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset = end
        store.add(news_id, vector.astype(np.float64))
    return store


def load_store(path: PathLike) -> EmbeddingStore:
    """
    Load a text or binary store, detected by its magic bytes.

    Duplicate ids keep the last vector; their count is logged as a warning.

    Raises:
        DataFormatError: Missing file, dimension mismatch or bad float
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError("embedding store not found", path=str(path))
    data = path.read_bytes()
    if data.startswith(BINARY_MAGIC):
        store = _parse_binary(path, data)
    else:
        store = _parse_text(path, data)

    if store.duplicates:
        logger.warning(f"{store.duplicates} duplicate news ids in {path}; kept the last occurrence")
    logger.info(f"Loaded {len(store)} embeddings (d={store.dim}) from {path}")
    return store


def save_store(store: EmbeddingStore, path: PathLike, binary: bool = False) -> Path:
    """Write a store in the text (default) or binary format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if binary:
        chunks = [BINARY_MAGIC, struct.pack("<II", BINARY_VERSION, store.dim or 0)]
        for news_id, vec in store.items():
            encoded = news_id.encode("utf-8")
            chunks.append(struct.pack("<H", len(encoded)))
            chunks.append(encoded)
            chunks.append(np.asarray(vec, dtype="<f4").tobytes())
        path.write_bytes(b"".join(chunks))
    else:
        lines = [
            f"{news_id}\t{','.join(repr(float(x)) for x in vec)}\n"
            for news_id, vec in store.items()
        ]
        path.write_text("".join(lines), encoding="utf-8")
    return path


# =============================================================================
# Synthetic embedder
# =============================================================================


@lru_cache(maxsize=32)
def _projection(n_topics: int, dim: int, seed: int) -> np.ndarray:
    proj = np.random.default_rng(seed).standard_normal((n_topics, dim))
    proj.setflags(write=False)
    return proj


def _id_noise(news_id: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}:{news_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little")).standard_normal(dim)


def synth_embed(item: NewsItem, dim: int, seed: int, noise_scale: float = 0.1) -> np.ndarray:
    """
    Deterministic unit-norm embedding of a news item.

    The topic mixture is lifted into ``dim`` dimensions by a seed-fixed
    Gaussian projection, normalized, perturbed by id-hashed Gaussian noise of
    norm about ``noise_scale`` and normalized again.

    Raises:
        ConfigError: dim <= 0 or negative noise scale
    """
    if dim <= 0:
        raise ConfigError(f"embedding dimension must be positive, got {dim}", key="encoder.news_dim")
    if noise_scale < 0:
        raise ConfigError(f"noise scale must be non-negative, got {noise_scale}", key="embeddings.noise_scale")

    signal = item.topic_mix @ _projection(item.n_topics, dim, seed)
    norm = np.linalg.norm(signal)
    if norm > 0:
        signal = signal / norm
    vec = signal + noise_scale * _id_noise(item.news_id, dim, seed) / math.sqrt(dim)
    return vec / np.linalg.norm(vec)


def build_synthetic_store(
    news: Iterable[NewsItem],
    dim: int,
    seed: int,
    noise_scale: float = 0.1,
) -> EmbeddingStore:
    """Embed a whole catalog with synth_embed."""
    store = EmbeddingStore(dim=dim)
    for item in news:
        store.add(item.news_id, synth_embed(item, dim, seed, noise_scale))
    logger.info(f"Synthesized {len(store)} embeddings (d={dim}, seed={seed})")
    return store
