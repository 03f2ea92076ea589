"""Experiment configuration: JSON files, dotted-path overrides, bundled presets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

__all__ = [
    "ConfigError",
    "DatasetConfig",
    "BaselineConfig",
    "DownstreamConfig",
    "TestConfig",
    "ExperimentConfig",
    "load_config",
    "apply_overrides",
    "preset_path",
    "list_presets",
]

DATASET_KINDS = ("two_moons", "concentric_circles", "gaussian_mixture", "mnist")


class ConfigError(ValueError):
    """A configuration file or override is invalid; the message names the field."""


@dataclass
class DatasetConfig:
    kind: str = "two_moons"
    n_per_class: int = 5000
    noise_std: float = 0.1414
    n_labeled: int = 500
    n_labeled_negatives: int = 0
    seed: int = 0
    # concentric_circles
    radii: tuple[float, float] = (0.5, 1.0)
    # gaussian_mixture
    centers_p: tuple = ((-2.0, 0.0), (2.0, 0.0))
    centers_n: tuple = ((0.0, -2.0), (0.0, 2.0))
    # mnist (user-supplied IDX paths)
    images: str = ""
    labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    pos_digit: int = 3
    neg_digit: int = 5

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigError(f"dataset.kind must be one of {DATASET_KINDS}, got {self.kind!r}")
        if self.n_labeled < 1:
            raise ConfigError("dataset.n_labeled must be >= 1")


@dataclass
class BaselineConfig:
    upu: bool = True
    nnpu: bool = True
    oracle_pn: bool = True
    hidden: tuple[int, ...] = (128,)
    activation: str = "relu"
    epochs: int = 20
    batch_p: int = 50
    batch_u: int = 100
    lr: float = 3e-4
    seed: int = 0


@dataclass
class DownstreamConfig:
    enabled: bool = True
    n_per_class: int = 2000
    hidden: tuple[int, ...] = (128,)
    activation: str = "relu"
    epochs: int = 20
    batch: int = 100
    lr: float = 3e-4
    seed: int = 0


@dataclass
class TestConfig:
    n_per_class: int = 1000
    seed: int = 1


@dataclass
class ExperimentConfig:
    """Everything one `run` needs; serializable and replayable."""

    name: str = "experiment"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    genpu: dict = field(default_factory=dict)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    downstream: DownstreamConfig = field(default_factory=DownstreamConfig)
    test: TestConfig = field(default_factory=TestConfig)
    output_dir: str = ""
    log_interval: int = 100
    snapshot_interval: int = 1000
    snapshot_samples: int = 500
    figures: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "dataset": DatasetConfig,
    "baselines": BaselineConfig,
    "downstream": DownstreamConfig,
    "test": TestConfig,
}


def _build_section(cls, blob: dict, section: str):
    known = cls.__dataclass_fields__
    for key in blob:
        if key not in known:
            raise ConfigError(f"unknown field {section}.{key}")
    coerced = {}
    for key, value in blob.items():
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        coerced[key] = value
    try:
        return cls(**coerced)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} section: {exc}") from None


def config_from_dict(blob: dict) -> ExperimentConfig:
    known = ExperimentConfig.__dataclass_fields__
    for key in blob:
        if key not in known:
            raise ConfigError(f"unknown field {key}")
    kwargs = {}
    for key, value in blob.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key} must be an object")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif key == "genpu":
            if not isinstance(value, dict):
                raise ConfigError("section genpu must be an object")
            kwargs[key] = value
        else:
            kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(blob: dict, overrides: list[str]) -> dict:
    """Apply `--set section.key=value` pairs onto a raw config dict.

    Values parse as JSON when possible (numbers, booleans, lists), otherwise
    they are kept as strings.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = dotted.split(".")
        target = blob
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override {dotted!r} descends into a non-object")
        target[parts[-1]] = value
    return blob


def list_presets() -> list[str]:
    files = resources.files("genpu") / "presets"
    return sorted(p.name[: -len(".json")] for p in files.iterdir() if p.name.endswith(".json"))


def preset_path(name: str) -> Path:
    path = resources.files("genpu") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"no preset named {name!r}; available: {', '.join(list_presets())}")
    return Path(str(path))


def load_config(source: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load a config from a JSON file path or a bundled preset name."""
    path = Path(source)
    if not path.is_file():
        if path.suffix == "" and "/" not in source:
            path = preset_path(source)
        else:
            raise ConfigError(f"config file {source!r} not found")
    try:
        blob = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(blob, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if overrides:
        blob = apply_overrides(blob, overrides)
    return config_from_dict(blob)
