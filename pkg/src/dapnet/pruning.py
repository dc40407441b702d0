"""Train-time channel pruning: GAP channel scoring + weighted random selection.

Channels of a feature map are scored by their spatial mean activation and a
random subset of M = floor(N * wrs_ratio) channels is kept, where the chance
of keeping a channel grows with its score: each channel draws r in (0, 1)
and competes with the key r ** (1 / score); the M largest keys win. Channels
outside the selection are zeroed. Pruning runs only during offline training;
with ``enabled=False`` the operation is a bit-exact identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DegenerateScoresError(ValueError):
    """Raised when no channel has a positive score, making selection arbitrary."""


@dataclass(frozen=True)
class PruningConfig:
    wrs_ratio: float = 0.7
    enabled: bool = True
    # Optional inverted-dropout style compensation (factor N / M). Off by
    # default: surviving channels pass through unscaled.
    rescale: bool = False

    def __post_init__(self):
        if not 0.0 < self.wrs_ratio <= 1.0:
            raise ValueError(f"wrs_ratio must be in (0, 1], got {self.wrs_ratio}")

    def n_selected(self, n_channels: int) -> int:
        # Tiny epsilon so exact decimal products (e.g. 10 * 0.7) floor to
        # their mathematical value despite binary rounding.
        m = math.floor(n_channels * self.wrs_ratio + 1e-9)
        if m < 1:
            raise ValueError(
                f"wrs_ratio {self.wrs_ratio} keeps no channel out of {n_channels}"
            )
        return m


@dataclass
class ChannelSelection:
    """Outcome of one weighted random selection over N channels."""

    scores: np.ndarray
    randoms: np.ndarray
    keys: np.ndarray
    selected: np.ndarray  # sorted indices of the M surviving channels

    @property
    def n_channels(self) -> int:
        return len(self.scores)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n_channels, dtype=np.float64)
        m[self.selected] = 1.0
        return m


def channel_scores(x) -> np.ndarray:
    """Spatial mean of each channel of a (N, H, W) feature map."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected a (channels, H, W) array, got shape {x.shape}")
    return x.mean(axis=(1, 2))


def wrs_keys(scores: np.ndarray, randoms: np.ndarray) -> np.ndarray:
    """Selection keys r ** (1 / score); nonpositive scores get key 0.

    Key 0 is the limit of r ** (1 / s) for s -> 0+ with r in (0, 1), which
    keeps the operation total when post-ReLU maps contain exact zeros.
    """
    scores = np.asarray(scores, dtype=np.float64)
    randoms = np.asarray(randoms, dtype=np.float64)
    keys = np.zeros_like(scores)
    pos = scores > 0
    with np.errstate(over="ignore", under="ignore"):
        keys[pos] = randoms[pos] ** (1.0 / scores[pos])
    return keys


def _open_unit_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    r = rng.uniform(0.0, 1.0, size=n)
    while np.any(r == 0.0):  # uniform() may return 0.0; the interval is open
        zero = r == 0.0
        r[zero] = rng.uniform(0.0, 1.0, size=int(zero.sum()))
    return r


def wrs_select(scores, config: PruningConfig, rng: np.random.Generator) -> ChannelSelection:
    """Draw one weighted random selection of M channels from per-channel scores.

    Ties between equal keys are broken toward the lower channel index so the
    result is a pure function of (scores, rng state).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("channel scores must be finite")
    if not np.any(scores > 0):
        raise DegenerateScoresError("all channel scores are nonpositive")
    m = config.n_selected(len(scores))
    randoms = _open_unit_uniform(rng, len(scores))
    keys = wrs_keys(scores, randoms)
    # stable sort on -keys keeps equal keys in ascending index order
    order = np.argsort(-keys, kind="stable")
    selected = np.sort(order[:m])
    return ChannelSelection(scores=scores, randoms=randoms, keys=keys, selected=selected)


def prune(x, selection: ChannelSelection, config: PruningConfig):
    """Zero every channel outside the selection; identity when disabled.

    Accepts a (N, H, W) numpy array and returns the same type and shape.
    """
    if not config.enabled:
        return x
    x = np.asarray(x)
    if x.ndim != 3:
        raise ValueError(f"expected a (channels, H, W) array, got shape {x.shape}")
    if x.shape[0] != selection.n_channels:
        raise ValueError(
            f"selection was drawn for {selection.n_channels} channels, "
            f"map has {x.shape[0]}"
        )
    mask = selection.mask().astype(x.dtype)
    out = x * mask[:, None, None]
    if config.rescale:
        out *= selection.n_channels / len(selection.selected)
    return out
