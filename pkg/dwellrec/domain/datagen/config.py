"""
Synthetic Log Generator Configuration.

Defaults are calibrated so that, with seed 42, about 5% of history clicks
carry an Unknown dwell and about 89% of the known ones exceed 5 seconds:

- interest-aligned clicks draw dwell from a log-normal law with median 60 s
  and sigma 1, clipped to [5, 600]; this puts roughly a quarter of the known
  mass in the first 30-second bar
- noise clicks draw dwell uniformly from [0, 5)
- 90% of history clicks are interest-aligned, and the clip at 5 s keeps
  about 0.6% of those at exactly 5 s (not above it)
"""

from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from dwellrec.core.exceptions import config_error_from


class GeneratorConfig(BaseModel):
    """Knobs of the synthetic impression-log generator."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # Catalog and population
    n_topics: int = Field(default=16, gt=0)
    n_news: int = Field(default=1000, gt=0)
    n_users: int = Field(default=2000, gt=0)
    news_primary_weight: float = Field(default=0.8, ge=0.0, le=1.0)
    user_topic_concentration: float = Field(default=0.3, gt=0.0)

    # History
    history_min: int = Field(default=5, ge=0)
    history_max: int = Field(default=60, ge=0)
    interest_click_prob: float = Field(default=0.9, ge=0.0, le=1.0)
    alignment_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    min_aligned_pool: int = Field(default=10, gt=0)

    # Impressions
    impressions_per_user: int = Field(default=3, gt=0)
    test_impressions_per_user: int = Field(default=1, ge=0)
    candidates_per_impression: int = Field(default=5, ge=2)
    candidate_aligned_prob: float = Field(default=0.4, ge=0.0, le=1.0)
    click_prob_aligned: float = Field(default=0.6, ge=0.0, le=1.0)
    click_prob_noise: float = Field(default=0.1, ge=0.0, le=1.0)

    # Dwell laws
    unknown_dwell_rate: float = Field(default=0.05, ge=0.0, le=1.0)
    long_dwell_median: float = Field(default=60.0, gt=0.0)
    long_dwell_sigma: float = Field(default=1.0, gt=0.0)
    long_dwell_min: float = Field(default=5.0, ge=0.0)
    long_dwell_max: float = Field(default=600.0, gt=0.0)
    short_dwell_max: float = Field(default=5.0, gt=0.0)
    dwell_decimals: int = Field(default=3, ge=0, le=9)

    @model_validator(mode="after")
    def _check_ranges(self) -> "GeneratorConfig":
        if self.history_min > self.history_max:
            raise ValueError("history_min must not exceed history_max")
        if self.long_dwell_min > self.long_dwell_max:
            raise ValueError("long_dwell_min must not exceed long_dwell_max")
        if self.test_impressions_per_user > self.impressions_per_user:
            raise ValueError("test_impressions_per_user must not exceed impressions_per_user")
        if self.candidates_per_impression > self.n_news:
            raise ValueError("candidates_per_impression must not exceed n_news")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneratorConfig":
        """Build a validated config, raising ConfigError on any violation."""
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise config_error_from(exc, section="generator") from None

    def validated(self) -> "GeneratorConfig":
        """Re-run validation (catches instances built with model_construct)."""
        return type(self).from_dict(self.model_dump())

