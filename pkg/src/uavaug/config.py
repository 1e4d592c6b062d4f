"""
Augmentation config and strategy presets.

Config files are flat ``key = value`` text with ``#`` comments. Keys are
dotted (``mosaic.prob``, ``hsv.v``, ``cp.jitter.lo``...); unknown keys are
errors. Values not set in the file come from the chosen strategy preset.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

from .copy_paste import CopyPasteParams, PasteConstraints
from .global_ops import MosaicParams
from .photometric import HsvGains

PRESETS = (
    "baseline",
    "context_aware",
    "heavy_instance",
    "pixel_level",
    "instance_aware",
    "global_mixing",
)

# full-strength HSV jitter used by the distortion-heavy presets
_FULL_HSV = {"hsv_h": 0.015, "hsv_s": 0.7, "hsv_v": 0.4}

PRESET_OVERRIDES: Dict[str, Dict[str, float]] = {
    "baseline": {},
    "context_aware": {"hsv_v": 0.4},
    "heavy_instance": dict(_FULL_HSV),
    "pixel_level": dict(_FULL_HSV),
    "instance_aware": {"cp_jitter_lo": 0.5, "cp_jitter_hi": 1.5},
    "global_mixing": {},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentConfig:
    strategy: str = "context_aware"
    size: int = 640
    epochs: int = 100
    close_mosaic: int = 10

    mosaic_prob: float = 0.75
    mosaic_center_jitter: float = 0.5
    mosaic_min_box_side: float = 2.0
    mosaic_min_area_ratio: float = 0.1

    mixup_prob: float = 0.1
    mixup_alpha: float = 32.0

    jitter_lo: float = 0.5
    jitter_hi: float = 1.5
    flip_prob: float = 0.5
    translate_max_frac: float = 0.1

    hsv_h: float = 0.0
    hsv_s: float = 0.0
    hsv_v: float = 0.0

    cp_gamma_min: float = 0.7
    cp_gamma_max: float = 1.3
    cp_brightness_min: int = -32
    cp_brightness_max: int = 32
    cp_dropout_max: float = 0.1
    cp_max_instances: int = 3
    cp_max_attempts: int = 30
    cp_iou_max: float = 0.05
    cp_margin: int = 1
    cp_jitter_lo: float = 1.0
    cp_jitter_hi: float = 1.0

    def __post_init__(self):
        if self.strategy not in PRESETS:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {', '.join(PRESETS)}")
        for name in ("mosaic_prob", "mixup_prob", "flip_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name.replace('_', '.', 1)} must lie in [0, 1]")
        if self.size < 1 or self.epochs < 1:
            raise ConfigError("size and epochs must be positive")
        if not 0 <= self.close_mosaic <= self.epochs:
            raise ConfigError("close_mosaic must lie in [0, epochs]")
        if self.mixup_alpha <= 0:
            raise ConfigError("mixup.alpha must be positive")
        if not 0.0 <= self.translate_max_frac <= 1.0:
            raise ConfigError("translate.max_frac must lie in [0, 1]")
        if not 0 < self.jitter_lo <= self.jitter_hi:
            raise ConfigError("jitter range must satisfy 0 < lo <= hi")
        try:
            self.mosaic_params()
            self.hsv_gains()
            self.copy_paste_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_preset(cls, strategy: str, **overrides) -> "AugmentConfig":
        if strategy not in PRESETS:
            raise ConfigError(f"unknown strategy {strategy!r}; expected one of {', '.join(PRESETS)}")
        values = dict(PRESET_OVERRIDES[strategy])
        values.update(overrides)
        values["strategy"] = strategy
        return cls(**values)

    def mosaic_params(self) -> MosaicParams:
        return MosaicParams(
            size=self.size,
            center_jitter=self.mosaic_center_jitter,
            min_box_side=self.mosaic_min_box_side,
            min_area_ratio=self.mosaic_min_area_ratio,
        )

    def hsv_gains(self) -> HsvGains:
        return HsvGains(self.hsv_h, self.hsv_s, self.hsv_v)

    def copy_paste_params(self) -> CopyPasteParams:
        return CopyPasteParams(
            constraints=PasteConstraints(
                max_attempts=self.cp_max_attempts,
                iou_max=self.cp_iou_max,
                margin=self.cp_margin,
                max_instances=self.cp_max_instances,
            ),
            gamma_range=(self.cp_gamma_min, self.cp_gamma_max),
            brightness_range=(self.cp_brightness_min, self.cp_brightness_max),
            dropout_max=self.cp_dropout_max,
            jitter_range=(self.cp_jitter_lo, self.cp_jitter_hi),
        )

    def to_text(self) -> str:
        lines = [f"{key} = {getattr(self, attr)}" for key, attr in CONFIG_KEYS.items()]
        return "\n".join(lines) + "\n"


def _key_for(attr: str) -> str:
    if attr.startswith("cp_jitter_"):
        return "cp.jitter." + attr[len("cp_jitter_") :]
    if "_" in attr and attr.split("_", 1)[0] in ("mosaic", "mixup", "jitter", "flip", "translate", "hsv", "cp"):
        return attr.replace("_", ".", 1)
    return attr


CONFIG_KEYS: Dict[str, str] = {_key_for(f.name): f.name for f in dataclasses.fields(AugmentConfig)}
# the mosaic output size is the pipeline output size
KEY_ALIASES = {"mosaic.size": "size"}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(AugmentConfig)}


def _coerce(key: str, attr: str, raw: str):
    kind = _FIELD_TYPES[attr]
    try:
        if kind in ("int", int):
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind in ("float", float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> Dict[str, object]:
    """Parse ``key = value`` lines into dataclass field values."""
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        attr = CONFIG_KEYS.get(key) or KEY_ALIASES.get(key)
        if attr is None:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[attr] = _coerce(key, attr, raw)
    return values


def load_config(
    path: Optional[Union[str, Path]] = None, strategy: Optional[str] = None, **overrides
) -> AugmentConfig:
    """Build a config by layering file values and keyword overrides on a preset.

    Precedence, lowest first: field defaults, strategy preset, file values,
    keyword overrides. ``strategy`` wins over a ``strategy`` key in the file.
    """
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    name = strategy or values.pop("strategy", None) or "context_aware"
    values.pop("strategy", None)
    values.update(overrides)
    return AugmentConfig.from_preset(name, **values)
