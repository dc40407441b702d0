"""Synthetic RGBT sequences: a textured blob on cluttered background.

The target follows a constant-velocity motion model with optional noise,
reflecting at the image borders so the ground-truth box always lies fully
inside the frame. Per modality, the target is rendered as an additive
textured patch whose amplitude is the modality's contrast; inside a failure
window that contrast is zero, i.e. the frame is pixel-identical to the pure
background rendering. Everything is deterministic under the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import cv2
import numpy as np

from .core import Box
from .data import RGBTSequence

Window = tuple[int, int]  # inclusive frame interval


@dataclass(frozen=True)
class SynthConfig:
    width: int = 160
    height: int = 120
    n_frames: int = 60
    target_w: int = 24
    target_h: int = 24
    start: tuple[float, float] | None = None  # top-left; default: centered
    velocity: tuple[float, float] = (2.5, 1.5)
    motion_noise_std: float = 0.3
    rgb_contrast: float = 90.0
    t_contrast: float = 100.0
    background_level: float = 90.0
    clutter: float = 25.0
    pixel_noise_std: float = 2.0
    rgb_failure_windows: tuple[Window, ...] = ()
    t_failure_windows: tuple[Window, ...] = ()
    occlusion_windows: tuple[Window, ...] = ()
    attributes: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError("image dimensions must be at least 32 px")
        if self.n_frames < 1:
            raise ValueError("need at least one frame")
        if not (0 < self.target_w < self.width and 0 < self.target_h < self.height):
            raise ValueError("target must fit inside the image")
        for name in ("rgb_failure_windows", "t_failure_windows", "occlusion_windows"):
            for lo, hi in getattr(self, name):
                if not (0 <= lo <= hi < self.n_frames):
                    raise ValueError(
                        f"{name} interval [{lo}, {hi}] outside 0..{self.n_frames - 1}"
                    )


def _in_windows(frame: int, windows: tuple[Window, ...]) -> bool:
    return any(lo <= frame <= hi for lo, hi in windows)


def _smooth_field(rng: np.random.Generator, h: int, w: int, blur: int = 7) -> np.ndarray:
    """Blurred uniform noise in [0, 1], mean-centered to 0."""
    field = rng.random((h, w)).astype(np.float32)
    field = cv2.blur(field, (blur, blur))
    return field - field.mean()


def _reflect(value: float, lo: float, hi: float, direction: float) -> tuple[float, float]:
    while value < lo or value > hi:
        if value < lo:
            value = 2 * lo - value
            direction = -direction
        else:
            value = 2 * hi - value
            direction = -direction
    return value, direction


def synth_sequence(config: SynthConfig) -> RGBTSequence:
    """Generate an in-memory sequence with exact per-frame ground truth."""
    rng = np.random.default_rng(config.seed)
    w, h = config.width, config.height
    tw, th = config.target_w, config.target_h

    # static per-modality backgrounds: base level + clutter texture
    bg_rgb = (config.background_level
              + config.clutter * _smooth_field(rng, h, w)[:, :, None]
              + rng.normal(0.0, 1.0, size=(h, w, 3)).astype(np.float32))
    bg_t = (config.background_level
            + config.clutter * _smooth_field(rng, h, w)
            + rng.normal(0.0, 1.0, size=(h, w)).astype(np.float32))

    # target textures in [0, 1]: a bright core plus per-modality detail
    yy, xx = np.mgrid[0:th, 0:tw].astype(np.float32)
    radial = 1.0 - np.hypot((yy - th / 2) / th, (xx - tw / 2) / tw)
    pattern_rgb = np.clip(0.55 * radial + 0.45 * (rng.random((th, tw)) > 0.5), 0.0, 1.0)
    pattern_t = np.clip(0.7 * radial + 0.3 * rng.random((th, tw)), 0.0, 1.0)

    if config.start is None:
        x, y = (w - tw) / 2.0, (h - th) / 2.0
    else:
        x, y = config.start
    vx, vy = config.velocity

    rgb_frames, t_frames, gt = [], [], []
    for idx in range(config.n_frames):
        ix, iy = int(round(x)), int(round(y))
        frame_rgb = bg_rgb.copy()
        frame_t = bg_t.copy()

        if not _in_windows(idx, config.rgb_failure_windows):
            frame_rgb[iy:iy + th, ix:ix + tw] += (
                config.rgb_contrast * pattern_rgb[:, :, None]
            )
        if not _in_windows(idx, config.t_failure_windows):
            frame_t[iy:iy + th, ix:ix + tw] += config.t_contrast * pattern_t

        if _in_windows(idx, config.occlusion_windows):
            # background-statistics bar over the middle of the target
            ox = ix + tw // 4
            frame_rgb[iy:iy + th, ox:ox + tw // 2] = bg_rgb[iy:iy + th, ox:ox + tw // 2]
            frame_t[iy:iy + th, ox:ox + tw // 2] = bg_t[iy:iy + th, ox:ox + tw // 2]

        if config.pixel_noise_std > 0:
            frame_rgb += rng.normal(0.0, config.pixel_noise_std,
                                    size=frame_rgb.shape).astype(np.float32)
            frame_t += rng.normal(0.0, config.pixel_noise_std,
                                  size=frame_t.shape).astype(np.float32)

        rgb_frames.append(np.clip(frame_rgb, 0, 255).astype(np.uint8))
        t_frames.append(np.clip(frame_t, 0, 255).astype(np.uint8))
        gt.append(Box(float(ix), float(iy), float(tw), float(th)))

        x += vx + rng.normal(0.0, config.motion_noise_std)
        y += vy + rng.normal(0.0, config.motion_noise_std)
        x, vx = _reflect(x, 0.0, float(w - tw), vx)
        y, vy = _reflect(y, 0.0, float(h - th), vy)

    return RGBTSequence(
        name=f"synth{config.seed:04d}",
        rgb=rgb_frames,
        thermal=t_frames,
        gt=gt,
        attributes=frozenset(config.attributes),
    )


def background_only(config: SynthConfig) -> SynthConfig:
    """Config variant whose target never renders (both modalities fail)."""
    full = ((0, config.n_frames - 1),)
    return replace(config, rgb_failure_windows=full, t_failure_windows=full)


def dataset_configs(base: SynthConfig, n_train: int, n_test: int, seed: int,
                    test_rgb_fail: tuple[Window, ...] = (),
                    test_t_fail: tuple[Window, ...] = ()) -> tuple[list[SynthConfig], list[SynthConfig]]:
    """Derive varied train-domain configs and fixed test configs from a base.

    Training domains rotate the motion direction, vary the target size and
    contrast, and cycle through failure-window patterns (none, RGB out,
    thermal out) so both modalities matter during offline training.
    """
    rng = np.random.default_rng(seed)
    mid = base.n_frames // 3, 2 * base.n_frames // 3
    train = []
    for k in range(n_train):
        angle = 2 * np.pi * k / max(n_train, 1) + rng.uniform(-0.3, 0.3)
        speed = float(np.hypot(*base.velocity)) * rng.uniform(0.8, 1.2)
        size_scale = rng.uniform(0.85, 1.25)
        fail_kind = k % 3
        train.append(replace(
            base,
            seed=int(rng.integers(0, 2**31)),
            velocity=(speed * float(np.cos(angle)), speed * float(np.sin(angle))),
            target_w=max(12, int(base.target_w * size_scale)),
            target_h=max(12, int(base.target_h * size_scale)),
            rgb_contrast=base.rgb_contrast * rng.uniform(0.8, 1.2),
            t_contrast=base.t_contrast * rng.uniform(0.8, 1.2),
            rgb_failure_windows=(mid,) if fail_kind == 1 else (),
            t_failure_windows=(mid,) if fail_kind == 2 else (),
        ))
    test = []
    for k in range(n_test):
        test.append(replace(
            base,
            seed=int(rng.integers(0, 2**31)),
            rgb_failure_windows=test_rgb_fail if k == 0 else (),
            t_failure_windows=test_t_fail if k == 1 else (),
        ))
    return train, test
