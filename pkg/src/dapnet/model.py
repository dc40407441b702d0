"""Full network: shared backbone, fusion, optional pruning mask, classifier.

Ablation variants wire the pieces differently:

    full    aggregation chain, pruning active in training
    noFP    aggregation chain, no pruning
    noFA    both modalities' stage-3 maps concatenated, pruning active
    noFACP  concatenated stage-3 maps, no pruning

Pruning itself is driven by the training loop (which draws one weighted
random selection per mini-batch); the model only applies a given 0/1 channel
mask to the fused features. Tracking never passes a mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import torch
from torch import nn

from .aggregation import DenseAggregation
from .backbone import Backbone, BackboneConfig, LRNParams

VARIANTS = ("full", "noFP", "noFA", "noFACP")


def variant_uses_aggregation(variant: str) -> bool:
    return variant in ("full", "noFP")


def variant_uses_pruning(variant: str) -> bool:
    return variant in ("full", "noFA")


@dataclass(frozen=True)
class NetConfig:
    backbone: BackboneConfig = BackboneConfig()
    agg_channels: int = 512
    d4: int = 512
    d5: int = 512
    n_domains: int = 1
    variant: str = "full"
    dropout: float = 0.0
    # raw pixel values are mapped to (x - input_mean) / input_scale
    input_mean: float = 128.0
    input_scale: float = 64.0
    # "gaussian": N(0, init_std) weights; "he": fan-in scaled Gaussian
    init: str = "gaussian"
    init_std: float = 0.01

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.init not in ("gaussian", "he"):
            raise ValueError(f"unknown init scheme {self.init!r}")

    @property
    def head_in_channels(self) -> int:
        if variant_uses_aggregation(self.variant):
            return self.agg_channels
        return 2 * self.backbone.c3

    @property
    def feature_size(self) -> int:
        final = self.backbone.stage_sizes()[-1]
        return self.head_in_channels * final * final


def toy_net_config(input_size: int = 107, n_domains: int = 1,
                   variant: str = "full") -> NetConfig:
    return NetConfig(
        backbone=BackboneConfig(c1=8, c2=16, c3=32, input_size=input_size),
        agg_channels=32, d4=64, d5=64,
        n_domains=n_domains, variant=variant,
    )


class DAPNet(nn.Module):
    def __init__(self, config: NetConfig, rng: np.random.Generator | None = None):
        super().__init__()
        from .head import Head  # local import avoids a cycle in docs tooling

        self.config = config
        self.backbone = Backbone(config.backbone)
        if variant_uses_aggregation(config.variant):
            self.aggregation = DenseAggregation(config.backbone, config.agg_channels)
        else:
            self.aggregation = None
        self.head = Head(config.feature_size, config.d4, config.d5,
                         n_domains=config.n_domains, dropout=config.dropout)
        if rng is not None:
            self.initialize(rng)

    # -- initialization ----------------------------------------------------

    def initialize(self, rng: np.random.Generator) -> None:
        """Seeded Gaussian init; fc6 branches always use std 0.01."""
        for name, module in self.named_modules():
            if isinstance(module, (nn.Conv2d, nn.Linear)):
                if name.startswith("head.branches"):
                    std = 0.01
                elif self.config.init == "he":
                    fan_in = module.weight[0].numel()
                    std = float(np.sqrt(2.0 / fan_in))
                else:
                    std = self.config.init_std
                w = rng.normal(0.0, std, size=tuple(module.weight.shape))
                with torch.no_grad():
                    module.weight.copy_(torch.from_numpy(w))
                    if module.bias is not None:
                        module.bias.zero_()
        if self.aggregation is not None:
            with torch.no_grad():
                for block in (self.aggregation.block1, self.aggregation.block2,
                              self.aggregation.block3):
                    block.bias.zero_()

    # -- forward paths -------------------------------------------------------

    def normalize(self, patch: torch.Tensor) -> torch.Tensor:
        return (patch - self.config.input_mean) / self.config.input_scale

    def fused_features(self, rgb: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        """(B, C_head, Hf, Wf) fusion of both modalities' backbone features."""
        rgb_feats = self.backbone(self.normalize(rgb))
        t_feats = self.backbone(self.normalize(t))
        if self.aggregation is not None:
            return self.aggregation(rgb_feats, t_feats)
        return torch.cat([rgb_feats[2], t_feats[2]], dim=1)

    def forward(self, rgb: torch.Tensor, t: torch.Tensor, domain: int = 0,
                channel_mask: torch.Tensor | None = None) -> torch.Tensor:
        feats = self.fused_features(rgb, t)
        if channel_mask is not None:
            feats = feats * channel_mask.to(feats.dtype).view(1, -1, 1, 1)
        return self.head(feats, domain)

    # -- parameter grouping --------------------------------------------------

    def conv_parameters(self):
        """Backbone convolutions plus the aggregation 1x1 convs and biases."""
        params = list(self.backbone.parameters())
        if self.aggregation is not None:
            params += list(self.aggregation.parameters())
        return params

    def fc_parameters(self):
        return list(self.head.parameters())


def batch_channel_scores(feats: torch.Tensor) -> np.ndarray:
    """Per-channel GAP scores of a (B, C, H, W) batch, averaged over the batch."""
    return feats.detach().mean(dim=(0, 2, 3)).cpu().numpy().astype(np.float64)


def clone_config(config: NetConfig, **changes) -> NetConfig:
    return replace(config, **changes)
