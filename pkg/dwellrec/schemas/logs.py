"""
Log record schemas.

One JSON object per line:

- news catalog: {"nid": str, "topics": [float, ...]}
- impression log: {"iid": str, "uid": str,
  "history": [{"nid": str, "dwell": float|null}],
  "cands": [{"nid": str, "y": 0|1, "dwell": float|null}]}

A candidate's "dwell" key is written for positives only; readers treat a
missing key as Unknown.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class NewsRecord(BaseModel):
    """News catalog line."""

    model_config = ConfigDict(extra="forbid")

    nid: str = Field(..., min_length=1, description="News id")
    topics: List[float] = Field(..., min_length=1, description="Topic mixture")


class HistoryRecord(BaseModel):
    """One historical click."""

    model_config = ConfigDict(extra="forbid")

    nid: str = Field(..., min_length=1)
    dwell: Optional[float] = Field(None, ge=0.0, allow_inf_nan=False, description="Seconds, null if unknown")


class CandidateRecord(BaseModel):
    """One labeled candidate."""

    model_config = ConfigDict(extra="forbid")

    nid: str = Field(..., min_length=1)
    y: Literal[0, 1]
    dwell: Optional[float] = Field(None, ge=0.0, allow_inf_nan=False)


class ImpressionRecord(BaseModel):
    """Impression log line."""

    model_config = ConfigDict(extra="forbid")

    iid: str = Field(..., min_length=1, description="Impression id")
    uid: str = Field(..., min_length=1, description="User id")
    history: List[HistoryRecord] = Field(default_factory=list)
    cands: List[CandidateRecord] = Field(..., min_length=1)
