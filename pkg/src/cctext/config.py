"""Pipeline configuration: every tunable constant in one validated place.

Config files are a single JSON object; every key is optional and unknown keys
are rejected.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .errors import DataError
from .regions import PruneConfig


@dataclass(frozen=True)
class PreprocessConfig:
    sharpen: bool = True
    sharpen_alpha: float = 0.8
    clahe: bool = True
    clahe_tiles: int = 8
    clahe_clip: float = 0.01

    def __post_init__(self):
        if self.sharpen_alpha < 0:
            raise ValueError("sharpen_alpha must be >= 0")
        if self.clahe_tiles < 1:
            raise ValueError("clahe_tiles must be >= 1")
        if not 0 < self.clahe_clip <= 1:
            raise ValueError("clahe_clip must lie in (0, 1]")


@dataclass(frozen=True)
class EdgeConfig:
    noise_sigma: float = 0.02
    directions: int = 12
    confidence_window: int = 3

    def __post_init__(self):
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")
        if self.directions < 2 or self.directions % 2:
            raise ValueError("directions must be an even count >= 2")
        if self.confidence_window < 3 or self.confidence_window % 2 == 0:
            raise ValueError("confidence_window must be odd and >= 3")


@dataclass(frozen=True)
class FeatureConfig:
    frequency: float = 0.25
    sigma: float = 1.0
    orientations: int = 4
    kernel_size: int = 3
    components: int = 20

    def __post_init__(self):
        if not 0 < self.frequency <= 0.5:
            raise ValueError("frequency must lie in (0, 0.5] cycles/pixel")
        if self.sigma <= 0 or self.orientations < 1 or self.components < 1:
            raise ValueError("feature parameters must be positive")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")


@dataclass(frozen=True)
class MergeConfig:
    enabled: bool = False
    link_distance_factor: float = 1.5

    def __post_init__(self):
        if self.link_distance_factor <= 0:
            raise ValueError("link_distance_factor must be positive")


@dataclass(frozen=True)
class SvmConfig:
    folds: int = 5
    c_grid: tuple = (1.0, 10.0)
    class_weight: bool = True
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        if self.folds < 2 or not self.c_grid or min(self.c_grid) <= 0:
            raise ValueError("folds must be >= 2 and c_grid values positive")


@dataclass(frozen=True)
class EvalConfig:
    # 1.0 reproduces the unscaled best-match ratio, which peaks at 0.5.
    match_scale: float = 2.0

    def __post_init__(self):
        if self.match_scale <= 0:
            raise ValueError("match_scale must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    edges: EdgeConfig = field(default_factory=EdgeConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    merge: MergeConfig = field(default_factory=MergeConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    model_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["svm"]["c_grid"] = list(d["svm"]["c_grid"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        return _build(cls, doc, "")

    def replace(self, **sections) -> "PipelineConfig":
        """Return a copy with top-level fields or whole sections swapped."""
        d = self.to_dict()
        for key, value in sections.items():
            d[key] = asdict(value) if is_dataclass(value) else value
        return PipelineConfig.from_dict(d)


_TYPES = {bool: bool, int: int, float: (int, float), str: str}


def _build(cls, doc, where: str):
    if not isinstance(doc, dict):
        raise DataError(f"config{where or ''}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise DataError(f"config{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for name, value in doc.items():
        f = known[name]
        default = f.default_factory() if callable(f.default_factory) else f.default
        path = f"{where}.{name}"
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, path)
        elif isinstance(default, tuple):
            if not isinstance(value, (list, tuple)):
                raise DataError(f"config{path}: expected a list")
            kwargs[name] = tuple(value)
        elif value is None or default is None:
            kwargs[name] = value
        else:
            expected = _TYPES.get(type(default), type(default))
            if isinstance(value, bool) and type(default) is not bool or not isinstance(value, expected):
                raise DataError(f"config{path}: expected {type(default).__name__}, got {value!r}")
            kwargs[name] = type(default)(value)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise DataError(f"config{where}: {exc}") from exc


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    return PipelineConfig.from_dict(doc)
