"""
Remote embedding service schemas.

Request: {"ids": [str, ...]}; response: {"vectors": {id: [float, ...]}}.
Ids missing from the response map are reported as not found.
"""

from typing import Dict, List

from pydantic import BaseModel, Field


class EmbeddingRequest(BaseModel):
    """Batch lookup request."""

    ids: List[str] = Field(..., description="News ids to embed")


class EmbeddingResponse(BaseModel):
    """Batch lookup response."""

    vectors: Dict[str, List[float]] = Field(default_factory=dict)
