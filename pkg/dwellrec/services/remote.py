"""
Remote news embedding service client.

Talks to an embedding-as-a-service endpoint with a JSON protocol:

    POST <endpoint>  {"ids": ["N00001", ...]}
    200              {"vectors": {"N00001": [0.1, ...], ...}}

Ids absent from the response map are reported as not found; the others are
still returned. Vectors go through a cache backend, so ids already fetched
never hit the network again. The whole system runs without this module.
"""

import asyncio
from dataclasses import dataclass, field
from typing import Awaitable, Callable, Dict, List, Optional, Sequence

import httpx
import numpy as np
from pydantic import ValidationError

from dwellrec.core.exceptions import DataFormatError, RemoteFetchError
from dwellrec.core.logging import get_logger
from dwellrec.infrastructure.caching import CacheBackend, InMemoryCache
from dwellrec.schemas.remote import EmbeddingRequest, EmbeddingResponse

logger = get_logger(__name__)

RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


@dataclass
class RemoteResult:
    """
    Outcome of a remote lookup, in input order.

    Attributes:
        ids: Requested ids
        vectors: One vector per id, None where the id was not found
        not_found: Ids the service did not know
        dim: Dimension of the returned vectors
        from_cache: Number of ids answered by the cache
    """

    ids: List[str]
    vectors: List[Optional[np.ndarray]]
    not_found: List[str] = field(default_factory=list)
    dim: Optional[int] = None
    from_cache: int = 0

    def found(self) -> Dict[str, np.ndarray]:
        return {i: v for i, v in zip(self.ids, self.vectors) if v is not None}


class RemoteEmbeddingClient:
    """
    Async client for the remote embedding service.

    Example usage:
        client = RemoteEmbeddingClient("http://localhost:8080/embed")
        result = await client.fetch(["N00001", "N00002"])
    """

    def __init__(
        self,
        endpoint: str,
        cache: Optional[CacheBackend] = None,
        batch_size: int = 64,
        max_concurrency: int = 4,
        attempts: int = 3,
        backoff_seconds: float = 0.5,
        timeout_seconds: float = 10.0,
        expected_dim: Optional[int] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ) -> None:
        """
        Initialize the client.

        Args:
            endpoint: Service URL
            cache: Cache backend (in-memory when None)
            batch_size: Ids per request
            max_concurrency: Requests in flight at most
            attempts: Tries per batch before giving up
            backoff_seconds: First retry delay, doubled on each retry
            timeout_seconds: Per-request timeout
            expected_dim: Dimension of the store the vectors will join
            transport: Custom httpx transport (tests use httpx.MockTransport)
            sleep: Awaitable used for backoff delays
        """
        if batch_size <= 0 or max_concurrency <= 0 or attempts <= 0:
            raise ValueError("batch_size, max_concurrency and attempts must be positive")
        self.endpoint = endpoint
        self.cache = cache if cache is not None else InMemoryCache()
        self.batch_size = batch_size
        self.max_concurrency = max_concurrency
        self.attempts = attempts
        self.backoff_seconds = backoff_seconds
        self.timeout = httpx.Timeout(timeout_seconds)
        self.expected_dim = expected_dim
        self._transport = transport
        self._sleep = sleep

    async def _post(self, client: httpx.AsyncClient, batch: List[str]) -> Dict[str, List[float]]:
        body = EmbeddingRequest(ids=batch).model_dump()
        last_error = "no attempt made"
        for attempt in range(1, self.attempts + 1):
            try:
                response = await client.post(self.endpoint, json=body)
                if response.status_code in RETRYABLE_STATUS:
                    last_error = f"HTTP {response.status_code}"
                else:
                    response.raise_for_status()
                    try:
                        return EmbeddingResponse.model_validate_json(response.content).vectors
                    except ValidationError as exc:
                        raise DataFormatError(f"malformed response from {self.endpoint}: {exc.errors()[0]['msg']}") from None
            except httpx.HTTPStatusError as e:
                raise RemoteFetchError(
                    f"embedding service rejected the request: HTTP {e.response.status_code}",
                    retryable=False,
                    attempts=attempt,
                ) from None
            except httpx.RequestError as e:
                last_error = f"{type(e).__name__}: {e}"

            if attempt < self.attempts:
                delay = self.backoff_seconds * (2 ** (attempt - 1))
                logger.warning(
                    f"Embedding request failed ({last_error}); retry {attempt}/{self.attempts - 1} in {delay:.2f}s"
                )
                await self._sleep(delay)

        raise RemoteFetchError(
            f"embedding service unreachable after {self.attempts} attempts: {last_error}",
            retryable=True,
            attempts=self.attempts,
        )

    def _check_dim(self, news_id: str, vector: np.ndarray, dim: Optional[int]) -> int:
        if dim is not None and vector.size != dim:
            raise DataFormatError(
                f"dimension drift for {news_id!r}: expected {dim}, service returned {vector.size}"
            )
        return int(vector.size)

    async def fetch(self, ids: Sequence[str]) -> RemoteResult:
        """
        Look up vectors for ids, using the cache first.

        Raises:
            RemoteFetchError: Network failure after all retries, or a
                non-retryable HTTP error
            DataFormatError: Malformed response or dimension drift
        """
        ids = list(ids)
        resolved: Dict[str, np.ndarray] = {}
        pending: List[str] = []
        for news_id in dict.fromkeys(ids):
            cached = await self.cache.get(news_id)
            if cached is None:
                pending.append(news_id)
            else:
                resolved[news_id] = cached
        from_cache = len(resolved)

        dim = self.expected_dim or self.cache.dim
        if pending:
            batches = [pending[i:i + self.batch_size] for i in range(0, len(pending), self.batch_size)]
            semaphore = asyncio.Semaphore(self.max_concurrency)

            async with httpx.AsyncClient(timeout=self.timeout, transport=self._transport) as client:

                async def run(batch: List[str]) -> Dict[str, List[float]]:
                    async with semaphore:
                        return await self._post(client, batch)

                responses = await asyncio.gather(*(run(b) for b in batches))

            fetched: Dict[str, np.ndarray] = {}
            for batch, vectors in zip(batches, responses):
                for news_id in batch:
                    if news_id not in vectors:
                        continue
                    vector = np.asarray(vectors[news_id], dtype=np.float64)
                    dim = self._check_dim(news_id, vector, dim)
                    fetched[news_id] = vector

            # nothing reaches the cache until every vector has passed the check
            for news_id, vector in fetched.items():
                resolved[news_id] = vector
                await self.cache.set(news_id, vector)
            await self.cache.flush()

        not_found = [i for i in dict.fromkeys(ids) if i not in resolved]
        if not_found:
            logger.warning(f"{len(not_found)} ids not found by the embedding service")
        stats = await self.cache.get_stats()
        logger.info(
            f"Fetched {len(resolved) - from_cache} vectors remotely, {from_cache} from cache "
            f"(hit rate {stats['hit_rate']:.2f})"
        )
        return RemoteResult(
            ids=ids,
            vectors=[resolved.get(i) for i in ids],
            not_found=not_found,
            dim=dim,
            from_cache=from_cache,
        )


def fetch_remote(endpoint: str, ids: Sequence[str], **kwargs) -> RemoteResult:
    """Synchronous wrapper around RemoteEmbeddingClient.fetch."""
    return asyncio.run(RemoteEmbeddingClient(endpoint, **kwargs).fetch(ids))
