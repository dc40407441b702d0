"""Shared two-modality convolutional backbone.

Three stages in the VGG-M conv1-3 lineage, with the pooling after stage 2
removed and stage 3 dilated (rate 3) so the final map keeps a higher spatial
resolution. One parameter set serves both the RGB and the thermal stream:
callers run the same module on both patches.

Local response normalization follows the torch convention

    out_c = x_c / (k + (alpha / n) * sum_{c' in window(c)} x_{c'}^2) ** beta

where window(c) spans the n channels centered at c, clipped at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn


@dataclass(frozen=True)
class LRNParams:
    n: int = 5
    alpha: float = 1e-4
    beta: float = 0.75
    k: float = 2.0


@dataclass(frozen=True)
class BackboneConfig:
    c1: int = 96
    c2: int = 256
    c3: int = 512
    input_size: int = 107
    lrn: LRNParams = LRNParams()

    def stage_sizes(self) -> tuple[int, int, int, int]:
        """Spatial sizes (stage1 conv, stage1 pooled, stage2, stage3)."""
        s = self.input_size
        conv1 = (s - 7) // 2 + 1
        pool1 = (conv1 - 3) // 2 + 1
        conv2 = (pool1 - 5) // 2 + 1
        conv3 = conv2 - (3 + 2 * (3 - 1)) + 1  # 3x3 kernel, dilation 3
        return conv1, pool1, conv2, conv3

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3) < 1:
            raise ValueError("channel widths must be >= 1")
        if self.stage_sizes()[-1] < 1:
            raise ValueError(f"input size {self.input_size} is too small for stage 3")


def toy_backbone_config(input_size: int = 107) -> BackboneConfig:
    return BackboneConfig(c1=8, c2=16, c3=32, input_size=input_size)


class Backbone(nn.Module):
    """conv1 7x7/2 + LRN + pool, conv2 5x5/2 + LRN, conv3 3x3 dilation 3."""

    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.config = config
        self.conv1 = nn.Conv2d(3, config.c1, kernel_size=7, stride=2)
        self.conv2 = nn.Conv2d(config.c1, config.c2, kernel_size=5, stride=2)
        self.conv3 = nn.Conv2d(config.c2, config.c3, kernel_size=3, stride=1, dilation=3)
        lrn = config.lrn
        self.lrn = nn.LocalResponseNorm(lrn.n, alpha=lrn.alpha, beta=lrn.beta, k=lrn.k)

    def forward(self, patch: torch.Tensor):
        """Map a (B, 3, S, S) patch batch to the three stage outputs."""
        s = self.config.input_size
        if patch.dim() != 4 or patch.shape[1] != 3 or patch.shape[2:] != (s, s):
            raise ValueError(
                f"expected patches of shape (B, 3, {s}, {s}), got {tuple(patch.shape)}"
            )
        f1 = F.max_pool2d(self.lrn(F.relu(self.conv1(patch))), kernel_size=3, stride=2)
        f2 = self.lrn(F.relu(self.conv2(f1)))
        f3 = F.relu(self.conv3(f2))
        return f1, f2, f3
