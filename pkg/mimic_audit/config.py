from __future__ import annotations
from typing import Any, Dict, Literal, Optional, Tuple, Type, TypeVar
import json, os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .schema import ANALYSIS_RATE, MAX_SECONDS

SEED_ENV = "MIMIC_AUDIT_SEED"

M = TypeVar("M", bound=BaseModel)


class StftParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame_length: int = 2048
    hop_length: int = 512
    window: Literal["hann"] = "hann"
    centered: bool = True

    @field_validator("frame_length")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v < 2 or v & (v - 1):
            raise ValueError(f"frame_length must be a power of two, got {v}")
        return v

    @model_validator(mode="after")
    def _hop_within_frame(self) -> "StftParams":
        if not 0 < self.hop_length <= self.frame_length:
            raise ValueError("hop_length must satisfy 0 < hop_length <= frame_length")
        return self


class SplitConfig(BaseModel):
    """Held-out test partition; 0.2004 maps 933 -> 187 and 1127 -> 226 test samples."""

    model_config = ConfigDict(frozen=True)

    test_fraction: float = Field(0.2004, gt=0.0, lt=1.0)
    validation_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = 0


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(140, gt=0)
    batch_size: int = Field(128, gt=0)
    learning_rate: float = Field(0.0003, gt=0.0)
    validation_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = 0
    shuffle_each_epoch: bool = True
    dropout_rate: float = Field(0.5, ge=0.0, lt=1.0)
    hidden_dims: Tuple[int, ...] = (256, 128, 64)

    @field_validator("hidden_dims")
    @classmethod
    def _positive_widths(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v or any(w <= 0 for w in v):
            raise ValueError("hidden_dims must be non-empty positive widths")
        return tuple(v)


class ToolkitConfig(BaseModel):
    """Everything the command line can tune; defaults are the published settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(140, gt=0)
    batch_size: int = Field(128, gt=0)
    learning_rate: float = Field(0.0003, gt=0.0)
    val_split: float = Field(0.2, gt=0.0, lt=1.0)
    test_split: float = Field(0.2004, gt=0.0, lt=1.0)
    seed: int = 0
    max_seconds: float = Field(MAX_SECONDS, gt=0.0)
    sample_rate: int = Field(ANALYSIS_RATE, gt=0)
    workers: int = Field(1, ge=1)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            validation_fraction=self.val_split,
            seed=self.seed,
        )

    def split_config(self) -> SplitConfig:
        return SplitConfig(test_fraction=self.test_split, validation_fraction=self.val_split, seed=self.seed)


def validated(model: Type[M], **values: Any) -> M:
    """Build a config model, turning pydantic validation failures into ConfigError."""
    try:
        return model(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__}: {e.errors()[0]['msg']}") from e


def _env_seed() -> Optional[int]:
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw.strip())
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from e


def load_toolkit_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ToolkitConfig:
    """Resolve settings: CLI flags > config file > MIMIC_AUDIT_SEED > defaults."""
    load_dotenv()
    values: Dict[str, Any] = {}

    env_seed = _env_seed()
    if env_seed is not None:
        values["seed"] = env_seed

    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                from_file = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(from_file, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        values.update(from_file)

    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = v

    return validated(ToolkitConfig, **values)
