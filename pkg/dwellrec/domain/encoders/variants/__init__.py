"""
User Encoder Variants Package.

Each variant is a plugin registered under its EncoderVariant key:

- base_attpool: content attention pooling, dwell-blind
- base_mha: multi-head self-attention + pooling, dwell-blind
- dwew: gated original/effective views (pre-injection)
- dwea: dwell-augmented attention queries and keys (post-injection)
"""

from typing import Dict, List, Type, Union

from dwellrec.core.exceptions import ConfigError
from dwellrec.domain.encoders.base import BaseUserEncoder
from dwellrec.domain.encoders.config import EncoderVariant
from dwellrec.domain.encoders.variants.baseline import BaseAttPoolEncoder, BaseMHAEncoder
from dwellrec.domain.encoders.variants.dwea import DweAEncoder
from dwellrec.domain.encoders.variants.dwew import DweWEncoder

_REGISTRY: Dict[EncoderVariant, Type[BaseUserEncoder]] = {
    EncoderVariant.BASE_ATTPOOL: BaseAttPoolEncoder,
    EncoderVariant.BASE_MHA: BaseMHAEncoder,
    EncoderVariant.DWEW: DweWEncoder,
    EncoderVariant.DWEA: DweAEncoder,
}


def available_variants() -> List[str]:
    """Registry keys of every encoder variant."""
    return [variant.value for variant in _REGISTRY]


def get_encoder_class(variant: Union[EncoderVariant, str]) -> Type[BaseUserEncoder]:
    """
    Get the encoder class registered for a variant.

    Raises:
        ConfigError: Unknown variant
    """
    try:
        return _REGISTRY[EncoderVariant(variant)]
    except ValueError:
        raise ConfigError(
            f"unknown encoder variant {variant!r}",
            key="encoder.variant",
            hint=f"choose one of {', '.join(available_variants())}",
        ) from None


__all__ = [
    "available_variants",
    "get_encoder_class",
    "BaseAttPoolEncoder",
    "BaseMHAEncoder",
    "DweAEncoder",
    "DweWEncoder",
]
