"""JSON config file with sections for dataset, model, train and serve.

Every field of the underlying config dataclasses is addressable; unknown
keys are rejected by name before any work starts, so a typo fails the run
immediately instead of silently training with a default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .losses import LossWeights
from .models import DiscriminatorConfig, GeneratorConfig
from .phantom import DegradationSpec, PhantomSpec
from .training import TrainConfig


class ConfigError(Exception):
    """A config file problem: bad JSON, unknown key or invalid value."""


@dataclass(frozen=True)
class DatasetSection:
    """What to synthesize: phantom recipe plus corpus sizes."""

    seed: int = 0
    extent: tuple[int, int, int] = (64, 64, 64)
    n_structures: int = 3
    speckle_strength: float = 0.12
    degradation: DegradationSpec = field(default_factory=DegradationSpec)
    n_train: int = 20
    n_eval: int = 10
    slices_per_volume: int = 10

    def spec_template(self) -> PhantomSpec:
        return PhantomSpec(seed=self.seed, extent=tuple(self.extent),
                           n_structures=self.n_structures,
                           speckle_strength=self.speckle_strength,
                           degradation=self.degradation)


@dataclass(frozen=True)
class ModelSection:
    """Network widths; the generator and discriminators size independently."""

    base_channels: int = 64
    in_channels: int = 1
    out_channels: int = 1
    eps: float = 1e-5
    disc_base_channels: int = 64

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(base_channels=self.base_channels,
                               in_channels=self.in_channels,
                               out_channels=self.out_channels, eps=self.eps)

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig(base_channels=self.disc_base_channels,
                                   in_channels=self.in_channels)


@dataclass(frozen=True)
class ServeSection:
    host: str = "127.0.0.1"
    port: int = 8000
    checkpoint: str | None = None


@dataclass(frozen=True)
class AppConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    serve: ServeSection = field(default_factory=ServeSection)


def _build(section: str, cls, mapping: dict):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section {section!r} must be an object, "
                          f"got {type(mapping).__name__}")
    allowed = {f.name for f in fields(cls)}
    for key in sorted(set(mapping) - allowed):
        raise ConfigError(f"unknown config key {section}.{key}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid value in section {section!r}: {err}")


def _build_dataset(mapping: dict) -> DatasetSection:
    mapping = dict(mapping)
    degradation = mapping.pop("degradation", None)
    if degradation is not None:
        mapping["degradation"] = _build("dataset.degradation",
                                        DegradationSpec, degradation)
    if "extent" in mapping:
        mapping["extent"] = tuple(mapping["extent"])
    return _build("dataset", DatasetSection, mapping)


# LossWeights fields live flattened in the train section, so a config file
# says train.lambda_cyc rather than nesting a one-purpose weights object.
_WEIGHT_KEYS = tuple(f.name for f in fields(LossWeights))


def _build_train(mapping: dict) -> TrainConfig:
    if not isinstance(mapping, dict):
        raise ConfigError(f"section 'train' must be an object, "
                          f"got {type(mapping).__name__}")
    mapping = dict(mapping)
    weight_args = {k: mapping.pop(k) for k in _WEIGHT_KEYS if k in mapping}
    allowed = {f.name for f in fields(TrainConfig)} - {"weights"}
    for key in sorted(set(mapping) - allowed):
        raise ConfigError(f"unknown config key train.{key}")
    if weight_args:
        try:
            mapping["weights"] = LossWeights(**weight_args)
        except ValueError as err:
            raise ConfigError(f"invalid value in section 'train': {err}")
    try:
        return TrainConfig(**mapping)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid value in section 'train': {err}")


_SECTIONS = {
    "dataset": _build_dataset,
    "model": lambda m: _build("model", ModelSection, m),
    "train": _build_train,
    "serve": lambda m: _build("serve", ServeSection, m),
}


def config_from_dict(data: dict) -> AppConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, "
                          f"got {type(data).__name__}")
    for key in sorted(set(data) - set(_SECTIONS)):
        raise ConfigError(f"unknown config section {key!r}")
    parts = {name: builder(data[name])
             for name, builder in _SECTIONS.items() if name in data}
    return AppConfig(**parts)


def load_config(path: str | Path | None) -> AppConfig:
    """Parse and validate a config file; None yields all defaults."""
    if path is None:
        return AppConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}")
    return config_from_dict(data)


def override(config, **changes):
    """Replace fields on a frozen config object, dropping None values."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(config, **changes) if changes else config
