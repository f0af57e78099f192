"""
Experiment Configuration Management.

An experiment file (JSON or YAML) describes everything a run needs: the
synthetic generator, the encoder, training, evaluation, the embedding source
and data paths. Unknown keys are rejected at every level and every
validation failure names the dotted key that caused it.

Profiles fill in groups of defaults for keys the file leaves unset:

- paper: the full-scale encoder (10 heads of dimension 20)
- desk: a laptop-sized model (2 heads of dimension 8, 3 epochs)
"""

import copy
import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from dwellrec.core.exceptions import ConfigError, config_error_from
from dwellrec.domain.datagen.config import GeneratorConfig
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant

PathLike = Union[str, Path]

PROFILES: Dict[str, Dict[str, Dict[str, Any]]] = {
    "paper": {
        "encoder": {"heads": 10, "head_dim": 20},
    },
    "desk": {
        "encoder": {"heads": 2, "head_dim": 8},
        "training": {"epochs": 3},
    },
}

DEFAULT_PROFILE = "paper"


class TrainingConfig(BaseModel):
    """Optimizer and schedule."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=1e-3, ge=0.0)
    batch_size: int = Field(default=32, gt=0)
    epochs: int = Field(default=3, gt=0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    seed: int = 42


class EvaluationConfig(BaseModel):
    """Evaluation sets, the threshold sweep and the skip policy."""

    model_config = ConfigDict(extra="forbid")

    theta: float = Field(default=5.0, gt=0.0)
    sweep_min: float = Field(default=5.0, gt=0.0)
    sweep_max: float = Field(default=40.0, gt=0.0)
    sweep_step: float = Field(default=5.0, gt=0.0)
    variants: List[EncoderVariant] = Field(
        default_factory=lambda: [EncoderVariant.BASE_MHA, EncoderVariant.DWEW, EncoderVariant.DWEA]
    )
    max_skip_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    # seed of the random-score baseline written next to masked evaluations
    random_seed: int = 0

    @model_validator(mode="after")
    def _check_sweep(self) -> "EvaluationConfig":
        if self.sweep_min > self.sweep_max:
            raise ValueError("sweep_min must not exceed sweep_max")
        if not self.variants:
            raise ValueError("at least one variant is required")
        return self

    def thresholds(self) -> List[float]:
        """Sweep thresholds from sweep_min to sweep_max inclusive."""
        count = int(round((self.sweep_max - self.sweep_min) / self.sweep_step)) + 1
        values = [self.sweep_min + i * self.sweep_step for i in range(count)]
        return [round(v, 9) for v in values if v <= self.sweep_max + 1e-9]


class EmbeddingConfig(BaseModel):
    """
    News embedding source.

    Without a store_path, vectors are synthesized from the news catalog.
    With a remote_endpoint, store_path becomes the persisted cache of the
    fetched vectors, written in the NREC binary format when binary is set
    and as text otherwise.
    """

    model_config = ConfigDict(extra="forbid")

    store_path: Optional[str] = None
    binary: bool = False
    seed: int = 7
    noise_scale: float = Field(default=0.1, ge=0.0)
    remote_endpoint: Optional[str] = None
    remote_attempts: int = Field(default=3, gt=0)
    remote_backoff_seconds: float = Field(default=0.5, ge=0.0)
    remote_concurrency: int = Field(default=4, gt=0)
    remote_batch_size: int = Field(default=64, gt=0)
    remote_timeout_seconds: float = Field(default=10.0, gt=0.0)


class PathsConfig(BaseModel):
    """Data locations."""

    model_config = ConfigDict(extra="forbid")

    data_dir: str = "data"


class AppConfig(BaseModel):
    """
    Complete experiment configuration.

    Attributes:
        generator: Synthetic log generator
        encoder: User encoder and model
        training: Optimizer and schedule
        evaluation: Evaluation sets and sweep
        embeddings: Embedding source
        paths: Data locations
    """

    model_config = ConfigDict(extra="forbid")

    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    embeddings: EmbeddingConfig = Field(default_factory=EmbeddingConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], profile: str = DEFAULT_PROFILE) -> "AppConfig":
        """Validate a raw mapping after filling profile defaults."""
        try:
            return cls.model_validate(apply_profile(data, profile))
        except ValidationError as exc:
            raise config_error_from(exc) from None

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def with_encoder(self, **changes: Any) -> "AppConfig":
        """Copy with encoder fields replaced (validated)."""
        data = self.to_dict()
        data["encoder"].update(changes)
        return AppConfig.from_dict(data)


def apply_profile(data: Dict[str, Any], profile: str) -> Dict[str, Any]:
    """
    Fill profile defaults for keys absent from data.

    Raises:
        ConfigError: Unknown profile
    """
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}", key="profile", hint=f"choose one of {', '.join(PROFILES)}")
    merged = {key: (dict(value) if isinstance(value, dict) else value) for key, value in data.items()}
    for section, defaults in PROFILES[profile].items():
        current = merged.get(section)
        if current is None:
            merged[section] = dict(defaults)
        elif isinstance(current, dict):
            for key, value in defaults.items():
                current.setdefault(key, value)
    return merged


def apply_overrides(data: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Set dotted keys (e.g. ``training.epochs``) on a raw mapping.

    Raises:
        ConfigError: A key path runs through a non-mapping value
    """
    merged = copy.deepcopy(data)
    for dotted, value in overrides.items():
        *parents, leaf = dotted.split(".")
        node = merged
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError("cannot set a field below a scalar value", key=dotted)
            node = child
        node[leaf] = value
    return merged


def _read_mapping(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text) if text.strip() else {}
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    return data


def load_config(
    path: Optional[PathLike] = None,
    profile: str = DEFAULT_PROFILE,
    overrides: Optional[Mapping[str, Any]] = None,
) -> AppConfig:
    """
    Load and validate an experiment configuration.

    Args:
        path: JSON or YAML file (None = defaults only)
        profile: paper or desk default group
        overrides: Dotted keys applied on top of the file

    Returns:
        Validated AppConfig

    Raises:
        ConfigError: Missing or unparseable file, unknown key, type mismatch
            or violated constraint (the message names the key)
    """
    data = _read_mapping(Path(path)) if path is not None else {}
    if overrides:
        data = apply_overrides(data, overrides)
    return AppConfig.from_dict(data, profile=profile)


def dumps_config(config: AppConfig) -> str:
    """Canonical JSON form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"


def save_config(config: AppConfig, path: PathLike) -> Path:
    """Write the canonical JSON form of a configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_config(config), encoding="utf-8")
    return path
