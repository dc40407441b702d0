"""Experiment configuration: one flat, typed key-value schema.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Every key must belong to the schema below (unknown keys are rejected so a
typo cannot silently fall back to a default) and every value must parse as
the field's type. Frame-window fields use "lo-hi" ranges, comma separated,
e.g. ``20-40`` or ``10-15,30-35``; an empty value means no windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .backbone import BackboneConfig, LRNParams
from .model import NetConfig, VARIANTS
from .synth import SynthConfig


class ConfigError(Exception):
    pass


Windows = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ExperimentConfig:
    # network
    input_size: int = 107
    c1: int = 96
    c2: int = 256
    c3: int = 512
    agg_channels: int = 512
    d4: int = 512
    d5: int = 512
    dropout: float = 0.0
    input_mean: float = 128.0
    input_scale: float = 64.0
    init: str = "gaussian"
    init_std: float = 0.01
    lrn_n: int = 5
    lrn_alpha: float = 1e-4
    lrn_beta: float = 0.75
    lrn_k: float = 2.0

    # pruning
    wrs_ratio: float = 0.7
    prune_rescale: bool = False

    # offline training
    epochs: int = 100
    max_iterations: int = 0  # 0 = no cap on epochs * domains
    lr_conv: float = 1e-4
    lr_fc: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    clip_gradient: float = 100.0
    frames_per_batch: int = 8
    pos_per_frame: int = 32
    neg_per_frame: int = 96
    pos_iou_min: float = 0.7
    neg_iou_max: float = 0.5

    # tracking
    n_candidates: int = 256
    force_first_candidate: bool = True
    init_pos: int = 500
    init_neg: int = 5000
    init_iterations: int = 10
    track_lr_fc45: float = 1e-4
    track_lr_fc6: float = 1e-3
    track_weight_decay: float = 5e-4
    update_interval: int = 10
    long_window: int = 100
    short_window: int = 20
    update_iterations: int = 10
    score_threshold: float = 0.5
    ridge_lambda: float = 1000.0
    harvest_pos: int = 50
    harvest_neg: int = 200
    harvest_neg_iou_max: float = 0.3
    track_batch_pos: int = 32
    track_batch_neg: int = 96

    # evaluation
    pr_threshold: float = 20.0

    # synthetic dataset generation
    synth_width: int = 160
    synth_height: int = 120
    synth_frames: int = 60
    synth_n_train: int = 5
    synth_n_test: int = 2
    synth_target_w: int = 24
    synth_target_h: int = 24
    synth_velocity_x: float = 2.5
    synth_velocity_y: float = 1.5
    synth_motion_noise: float = 0.3
    synth_rgb_contrast: float = 90.0
    synth_t_contrast: float = 100.0
    synth_background: float = 90.0
    synth_clutter: float = 25.0
    synth_pixel_noise: float = 2.0
    synth_test_rgb_fail: Windows = ((20, 40),)
    synth_test_t_fail: Windows = ()
    synth_layout: str = "rgbt234"

    def net_config(self, n_domains: int, variant: str = "full") -> NetConfig:
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
        backbone = BackboneConfig(
            c1=self.c1, c2=self.c2, c3=self.c3, input_size=self.input_size,
            lrn=LRNParams(self.lrn_n, self.lrn_alpha, self.lrn_beta, self.lrn_k),
        )
        return NetConfig(
            backbone=backbone, agg_channels=self.agg_channels,
            d4=self.d4, d5=self.d5, n_domains=n_domains, variant=variant,
            dropout=self.dropout, input_mean=self.input_mean,
            input_scale=self.input_scale, init=self.init, init_std=self.init_std,
        )

    def synth_base(self) -> SynthConfig:
        return SynthConfig(
            width=self.synth_width, height=self.synth_height,
            n_frames=self.synth_frames,
            target_w=self.synth_target_w, target_h=self.synth_target_h,
            velocity=(self.synth_velocity_x, self.synth_velocity_y),
            motion_noise_std=self.synth_motion_noise,
            rgb_contrast=self.synth_rgb_contrast, t_contrast=self.synth_t_contrast,
            background_level=self.synth_background, clutter=self.synth_clutter,
            pixel_noise_std=self.synth_pixel_noise,
        )


def parse_windows(text: str) -> Windows:
    text = text.strip()
    if not text:
        return ()
    windows = []
    for part in text.split(","):
        lo, sep, hi = part.strip().partition("-")
        if not sep:
            raise ConfigError(f"bad window {part!r}, expected lo-hi")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError as exc:
            raise ConfigError(f"bad window {part!r}: {exc}") from exc
        if lo_i > hi_i or lo_i < 0:
            raise ConfigError(f"bad window {part!r}: need 0 <= lo <= hi")
        windows.append((lo_i, hi_i))
    return tuple(windows)


def format_windows(windows: Windows) -> str:
    return ",".join(f"{lo}-{hi}" for lo, hi in windows)


_BOOL_VALUES = {"true": True, "yes": True, "1": True, "on": True,
                "false": False, "no": False, "0": False, "off": False}


def _convert(name: str, text: str, target_type) -> object:
    try:
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        if target_type is bool:
            if text.lower() not in _BOOL_VALUES:
                raise ValueError(f"expected a boolean, got {text!r}")
            return _BOOL_VALUES[text.lower()]
        if target_type is str:
            return text
        return target_type(text)  # Windows fields use parse_windows
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config key {name}: {exc}") from exc


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    schema = {f.name: f.type for f in fields(ExperimentConfig)}
    # dataclass field types arrive as strings under `from __future__ import
    # annotations`; map them back to constructors
    type_names = {"int": int, "float": float, "bool": bool, "str": str,
                  "Windows": parse_windows}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key not in schema:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate config key {key!r}")
        values[key] = _convert(key, value, type_names.get(schema[key], str))
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path=None) -> ExperimentConfig:
    """Read a config file; None means all defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"missing config file {path}")
    return parse_config_text(path.read_text(), source=str(path))


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = format_windows(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
