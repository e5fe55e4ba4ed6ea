"""Model and training configuration, plus the plain-text config file format.

Config files are ``key = value`` lines with ``#`` comments. Keys use the
hyperparameter-table names (``combine-vr``, ``alpha_v``, ``non-linear``,
``learning-rate``, ``U``, ...); hyphens and underscores are interchangeable
and matching is case-insensitive. One file may carry both model and training
keys; unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

__all__ = ["ModelConfig", "TrainConfig", "parse_config_file", "configs_from_mapping"]

MODEL_KINDS = ("dual", "gcn", "mlp", "link", "linkx")
COMBINE_TYPES = (1, 2, 3)


def _parse_combine(raw: str) -> int:
    text = str(raw).strip().lower()
    if text.startswith("type"):
        text = text[4:]
    value = int(text)
    if value not in COMBINE_TYPES:
        raise ValueError(f"combine type must be one of {COMBINE_TYPES}, got {raw!r}")
    return value


def _parse_bool(raw: str) -> bool:
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean flag, got {raw!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture switches for the dual-path model and baselines."""

    model: str = "dual"
    layers: int = 2
    hidden_dim: int = 64
    key_dim: int | None = None
    alpha_v: float = 1.0
    alpha_i: float = 1.0
    alpha_f: float = 1.0
    alpha_t: float = 1.0
    combine_vr: int = 2
    combine_ft: int = 2
    dropout: float = 0.0
    non_linear: bool = False
    bias: bool = False
    self_loops: bool = False
    no_feature_path: bool = False
    no_topology_path: bool = False
    no_feature_scaling: bool = False
    no_topology_scaling: bool = False
    symmetric_attention: bool = False

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model!r}; expected one of {MODEL_KINDS}")
        if self.layers < 1:
            raise ValueError("at least one layer is required")
        if self.combine_vr not in COMBINE_TYPES or self.combine_ft not in COMBINE_TYPES:
            raise ValueError("combine types must be 1, 2 or 3")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.no_feature_path and self.no_topology_path:
            raise ValueError("at least one embedding path must stay enabled")
        if self.alpha_v == 0.0 and self.alpha_i == 0.0:
            raise ValueError("alpha_v and alpha_i cannot both be zero")

    @property
    def effective_key_dim(self) -> int:
        return self.hidden_dim if self.key_dim is None else self.key_dim

    def with_overrides(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs)

    def to_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class TrainConfig:
    """Optimization loop settings."""

    epochs: int = 200
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    update_interval: int = 10
    seed: int = 0
    precision: int = 64
    adam_betas: tuple[float, float] = field(default=(0.9, 0.999))
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.update_interval < 1:
            raise ValueError("update interval U must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.precision not in (32, 64):
            raise ValueError("precision must be 32 or 64")

    @property
    def dtype(self):
        return np.float64 if self.precision == 64 else np.float32

    def with_overrides(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)

    def to_mapping(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "update_interval": self.update_interval,
            "seed": self.seed,
            "precision": self.precision,
        }


_MODEL_FIELDS = {
    "model": str,
    "layers": int,
    "hidden_dim": int,
    "key_dim": int,
    "alpha_v": float,
    "alpha_i": float,
    "alpha_f": float,
    "alpha_t": float,
    "combine_vr": _parse_combine,
    "combine_ft": _parse_combine,
    "dropout": float,
    "non_linear": _parse_bool,
    "bias": _parse_bool,
    "self_loops": _parse_bool,
    "no_feature_path": _parse_bool,
    "no_topology_path": _parse_bool,
    "no_feature_scaling": _parse_bool,
    "no_topology_scaling": _parse_bool,
    "symmetric_attention": _parse_bool,
}

_TRAIN_FIELDS = {
    "epochs": int,
    "learning_rate": float,
    "weight_decay": float,
    "u": int,
    "update_interval": int,
    "seed": int,
    "precision": int,
}


def _normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config_file(path) -> dict[str, str]:
    """Read ``key = value`` lines into a normalized-key mapping."""
    mapping: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        mapping[_normalize_key(key)] = value.strip()
    return mapping


def configs_from_mapping(mapping: dict[str, str]) -> tuple[ModelConfig, TrainConfig]:
    """Split a merged mapping into model and training configs."""
    model_kwargs = {}
    train_kwargs = {}
    for key, raw in mapping.items():
        if key in _MODEL_FIELDS:
            model_kwargs[key] = _MODEL_FIELDS[key](raw)
        elif key in _TRAIN_FIELDS:
            target = "update_interval" if key == "u" else key
            train_kwargs[target] = _TRAIN_FIELDS[key](raw)
        else:
            raise ValueError(f"unknown config key: {key}")
    return ModelConfig(**model_kwargs), TrainConfig(**train_kwargs)
