"""
User Encoder Configuration.

Defaults are the full-scale setup: 10 attention heads of dimension 20, the
last 50 clicks, 4 negatives per positive, dropout 0.2 and an effective-click
threshold of 5 seconds. The dwell-embedding dimension defaults to 20 to match
the per-head dimension.
"""

from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from dwellrec.core.exceptions import config_error_from
from dwellrec.domain.entities.dwell import DwellScheme


class EncoderVariant(str, Enum):
    """Available user encoders."""

    BASE_ATTPOOL = "base_attpool"
    BASE_MHA = "base_mha"
    DWEW = "dwew"
    DWEA = "dwea"

    @property
    def uses_dwell(self) -> bool:
        return self in (EncoderVariant.DWEW, EncoderVariant.DWEA)


class EncoderConfig(BaseModel):
    """
    Encoder hyperparameters.

    Attributes:
        variant: Which user encoder to build
        news_dim: Dimension d of the news embeddings
        dwell_dim: Dimension of the dwell-bucket embeddings
        heads: Attention heads h
        head_dim: Per-head dimension a
        pool_dim: Attention-pool query dimension (None = heads * head_dim)
        max_history: Clicks kept per user (most recent)
        theta: Effective-click threshold in seconds
        k_negatives: Negatives per training sample
        dwell_scheme: Bucket numbering (literal or monotonic)
        dropout: Dropout rate on history rows and attention outputs
    """

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    variant: EncoderVariant = EncoderVariant.DWEA
    news_dim: int = Field(default=64, gt=0)
    dwell_dim: int = Field(default=20, gt=0)
    heads: int = Field(default=10, gt=0)
    head_dim: int = Field(default=20, gt=0)
    pool_dim: Optional[int] = Field(default=None, gt=0)
    max_history: int = Field(default=50, gt=0)
    theta: float = Field(default=5.0, gt=0.0)
    k_negatives: int = Field(default=4, ge=1)
    dwell_scheme: DwellScheme = DwellScheme.LITERAL
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_dims(self) -> "EncoderConfig":
        if self.heads * self.head_dim <= 0:
            raise ValueError("heads * head_dim must be positive")
        return self

    @property
    def out_dim(self) -> int:
        """Dimension of user vectors and projected news vectors."""
        return self.heads * self.head_dim

    @property
    def att_dim(self) -> int:
        return self.pool_dim or self.out_dim

    @property
    def dwell_vocab(self) -> int:
        return self.dwell_scheme.vocab_size

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EncoderConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise config_error_from(exc, section="encoder") from None

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
