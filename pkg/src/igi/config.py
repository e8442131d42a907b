"""Experiment configuration: flat ``section.key = value`` text files.

Blank lines and ``#`` comments are ignored. Every key must be known;
anything else is a :class:`~igi.errors.ConfigError`. Example::

    seed = 7
    field.width = 400
    field.height = 280
    field.grain_radius = 1
    detector.quant_bits = 8
    mask.spec = glyph:TH
    experiment.measurements = 30000
    engine.algorithm = igi
    engine.mode = fixed
    engine.g_bits = 32
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

from .engine import FLOAT64, FixedPointConfig
from .errors import ConfigError
from .speckle import DetectorConfig, FieldConfig
from .stream import Algorithm


def _parse_xt0(text: str) -> tuple[int, int]:
    """``"X,Y"`` (column, row) to ``(row, col)``."""
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"pixel must be given as X,Y, got {text!r}") from None
    return (y, x)


def _parse_points(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"sample points must be comma-separated integers, got {text!r}") from None


@dataclass
class ExperimentConfig:
    width: int = 400
    height: int = 280
    grain_radius: float = 1.0
    mean_intensity: float = 1.0
    quant_bits: int = 8
    noise_sigma: float = 0.0
    mask_spec: str = "glyph:TH"
    measurements: int = 30000
    algorithm: str = "igi"
    mode: str = "float"
    cadence: int = 125
    s_bits: int = 40
    i_bits: int = 8
    g_bits: int = 32
    p_bits: int | None = None
    overflow_policy: str = "error"
    xt0: tuple[int, int] | None = None
    sample_points: tuple[int, ...] = ()
    out: str = "out"
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        self.field()
        self.detector()
        self.engine_mode()
        # widths are checked even in float mode so a later switch cannot fail late
        FixedPointConfig(self.s_bits, self.i_bits, self.g_bits, self.overflow_policy, self.p_bits)
        if self.measurements < 2:
            raise ConfigError(f"measurements must be >= 2, got {self.measurements}")
        if self.cadence < 1:
            raise ConfigError(f"cadence must be >= 1, got {self.cadence}")
        try:
            Algorithm.parse(self.algorithm)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def field(self) -> FieldConfig:
        return FieldConfig(self.width, self.height, self.grain_radius, self.mean_intensity, self.seed)

    def detector(self) -> DetectorConfig:
        return DetectorConfig(self.quant_bits, self.noise_sigma)

    def engine_mode(self):
        if self.mode == "float":
            return FLOAT64
        if self.mode == "fixed":
            return FixedPointConfig(self.s_bits, self.i_bits, self.g_bits, self.overflow_policy,
                                    self.p_bits)
        raise ConfigError(f"engine.mode must be 'float' or 'fixed', got {self.mode!r}")

    def test_pixel(self) -> tuple[int, int]:
        """``(row, col)`` of the fixed HBT test pixel; frame centre by default."""
        if self.xt0 is not None:
            return self.xt0
        return (self.height // 2, self.width // 2)


# config key -> (attribute, parser)
_KEYS = {
    "seed": ("seed", int),
    "field.width": ("width", int),
    "field.height": ("height", int),
    "field.grain_radius": ("grain_radius", float),
    "field.mean_intensity": ("mean_intensity", float),
    "detector.quant_bits": ("quant_bits", int),
    "detector.noise_sigma": ("noise_sigma", float),
    "mask.spec": ("mask_spec", str),
    "experiment.measurements": ("measurements", int),
    "engine.algorithm": ("algorithm", str),
    "engine.mode": ("mode", str),
    "engine.cadence": ("cadence", int),
    "engine.s_bits": ("s_bits", int),
    "engine.i_bits": ("i_bits", int),
    "engine.g_bits": ("g_bits", int),
    "engine.p_bits": ("p_bits", int),
    "engine.overflow_policy": ("overflow_policy", str),
    "hbt.xt0": ("xt0", _parse_xt0),
    "analysis.sample_points": ("sample_points", _parse_points),
    "output.dir": ("out", str),
}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = dataclasses.replace(base) if base is not None else ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, parse = _KEYS[key]
        try:
            setattr(cfg, attr, parse(value))
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (unset optional keys are omitted)."""
    lines = []
    for key, (attr, _) in _KEYS.items():
        value = getattr(cfg, attr)
        if value is None:
            continue
        if attr == "xt0":
            value = f"{value[1]},{value[0]}"
        elif attr == "sample_points":
            if not value:
                continue
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
