"""Dense recursive fusion of the six backbone maps into one compressed map.

Each aggregation block applies one 1x1 convolution per input branch, sums the
results with a single shared bias, then ReLU and LRN:

    block(x_1, ..., x_n) = LRN(relu(sum_i conv1x1(x_i; W_i) + b))

The chain runs one block per backbone stage. Block 1 fuses the two stage-1
maps; blocks 2 and 3 fuse the previous block's output (max-pooled down to the
incoming stage's size) with both modalities' maps of that stage:

    A1 = block1(F1_rgb, F1_t)
    A2 = block2(pool(A1), F2_rgb, F2_t)
    A3 = block3(pool(A2), F3_rgb, F3_t)
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .backbone import BackboneConfig, LRNParams


def pool_geometry(in_size: int, out_size: int) -> tuple[int, int]:
    """Kernel and stride of the max pool mapping in_size to exactly out_size."""
    if out_size > in_size:
        raise ValueError(f"cannot pool {in_size} up to {out_size}")
    if out_size == in_size:
        return 1, 1
    if out_size == 1:
        return in_size, 1
    stride = (in_size - 1) // (out_size - 1)
    kernel = in_size - stride * (out_size - 1)
    return kernel, stride


def align_scale(x: torch.Tensor, target_h: int, target_w: int) -> torch.Tensor:
    """Max-pool a (..., H, W) map down to exactly (target_h, target_w)."""
    h, w = x.shape[-2], x.shape[-1]
    kh, sh = pool_geometry(h, target_h)
    kw, sw = pool_geometry(w, target_w)
    if (kh, sh) == (1, 1) and (kw, sw) == (1, 1):
        return x
    return F.max_pool2d(x, kernel_size=(kh, kw), stride=(sh, sw))


class AggBlock(nn.Module):
    """1x1 convs (one per input) + shared bias + ReLU + LRN."""

    def __init__(self, in_channels: list[int], out_channels: int, lrn: LRNParams):
        super().__init__()
        self.convs = nn.ModuleList(
            [nn.Conv2d(c, out_channels, kernel_size=1, bias=False) for c in in_channels]
        )
        self.bias = nn.Parameter(torch.zeros(out_channels))
        self.lrn = nn.LocalResponseNorm(lrn.n, alpha=lrn.alpha, beta=lrn.beta, k=lrn.k)

    @property
    def in_channels(self) -> list[int]:
        return [conv.in_channels for conv in self.convs]

    def forward(self, inputs: list[torch.Tensor]) -> torch.Tensor:
        if len(inputs) != len(self.convs):
            raise ValueError(f"block takes {len(self.convs)} inputs, got {len(inputs)}")
        spatial = inputs[0].shape[-2:]
        for x, conv in zip(inputs, self.convs):
            if x.shape[-2:] != spatial:
                raise ValueError(
                    f"input spatial dims differ: {tuple(x.shape[-2:])} vs {tuple(spatial)}"
                )
            if x.shape[-3] != conv.in_channels:
                raise ValueError(
                    f"input has {x.shape[-3]} channels, branch expects {conv.in_channels}"
                )
        acc = self.convs[0](inputs[0])
        for x, conv in zip(inputs[1:], self.convs[1:]):
            acc = acc + conv(x)
        acc = acc + self.bias.view(1, -1, 1, 1)
        return self.lrn(F.relu(acc))


class DenseAggregation(nn.Module):
    """The three-block chain; output keeps the stage-3 spatial dims."""

    def __init__(self, backbone: BackboneConfig, out_channels: int = 512):
        super().__init__()
        self.out_channels = out_channels
        lrn = backbone.lrn
        self.block1 = AggBlock([backbone.c1, backbone.c1], out_channels, lrn)
        self.block2 = AggBlock([out_channels, backbone.c2, backbone.c2], out_channels, lrn)
        self.block3 = AggBlock([out_channels, backbone.c3, backbone.c3], out_channels, lrn)

    def forward(self, rgb_feats, t_feats) -> torch.Tensor:
        r1, r2, r3 = rgb_feats
        t1, t2, t3 = t_feats
        a1 = self.block1([r1, t1])
        a2 = self.block2([align_scale(a1, r2.shape[-2], r2.shape[-1]), r2, t2])
        a3 = self.block3([align_scale(a2, r3.shape[-2], r3.shape[-1]), r3, t3])
        return a3
