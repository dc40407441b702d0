"""Offline multi-domain training.

Each iteration handles exactly one domain (training sequence): a mini-batch
of 8 random frames with 32 positive and 96 negative samples per frame runs
through the shared network and that domain's fc6 branch. Convolutional
parameters (backbone plus aggregation 1x1 convs) and fully connected layers
use separate learning rates; gradients are clipped by global L2 norm. When
the variant prunes, one fresh weighted random channel selection is drawn per
mini-batch from the batch-averaged GAP scores.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data import RGBTSequence
from .head import classification_loss
from .model import DAPNet, NetConfig, batch_channel_scores, variant_uses_pruning
from .pruning import PruningConfig, wrs_select
from .sampling import SampleSpec, draw_training_samples, extract_patches


class NumericError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    max_iterations: int = 0  # 0 = run all epochs * domains iterations
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
    wrs_ratio: float = 0.7
    prune_rescale: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.frames_per_batch < 1:
            raise ValueError("frames_per_batch must be >= 1")
        for name in ("lr_conv", "lr_fc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def sample_spec(self) -> SampleSpec:
        return SampleSpec(n_pos=self.pos_per_frame, n_neg=self.neg_per_frame,
                          pos_iou_min=self.pos_iou_min, neg_iou_max=self.neg_iou_max)


def build_minibatch(seq: RGBTSequence, spec: SampleSpec, frames_per_batch: int,
                    input_size: int, rng: np.random.Generator):
    """Sample one mini-batch: (rgb, thermal, labels) numpy batches.

    Frames are drawn without replacement, falling back to with-replacement
    draws when the sequence is shorter than the batch. Positive labels are 0,
    negative labels 1; positives come first.
    """
    n = len(seq)
    if n < 1:
        raise ValueError("sequence has no frames")
    replace = n < frames_per_batch
    frame_ids = rng.choice(n, size=frames_per_batch, replace=replace)
    image_size = seq.image_size
    pos_rgb, pos_t, neg_rgb, neg_t = [], [], [], []
    for idx in frame_ids:
        idx = int(idx)
        pos, neg = draw_training_samples(seq.gt[idx], image_size, spec, rng)
        rgb = seq.rgb_frame(idx)
        thermal = seq.thermal_frame(idx)
        pr, pt = extract_patches(rgb, thermal, pos, input_size)
        nr, nt = extract_patches(rgb, thermal, neg, input_size)
        pos_rgb.append(pr), pos_t.append(pt)
        neg_rgb.append(nr), neg_t.append(nt)
    rgb = np.concatenate(pos_rgb + neg_rgb)
    thermal = np.concatenate(pos_t + neg_t)
    n_pos = spec.n_pos * frames_per_batch
    labels = np.concatenate([np.zeros(n_pos, dtype=np.int64),
                             np.ones(len(rgb) - n_pos, dtype=np.int64)])
    return rgb, thermal, labels


def make_optimizer(model: DAPNet, config: TrainConfig) -> torch.optim.SGD:
    return torch.optim.SGD(
        [{"params": model.conv_parameters(), "lr": config.lr_conv},
         {"params": model.fc_parameters(), "lr": config.lr_fc}],
        lr=config.lr_conv, momentum=config.momentum,
        weight_decay=config.weight_decay,
    )


def training_step(model: DAPNet, optimizer: torch.optim.SGD, rgb, thermal, labels,
                  domain: int, prune_config: PruningConfig | None,
                  rng: np.random.Generator, clip_gradient: float) -> tuple[float, float]:
    """One SGD step; returns (loss, pre-clip gradient norm)."""
    rgb_t = torch.from_numpy(rgb)
    t_t = torch.from_numpy(thermal)
    labels_t = torch.from_numpy(labels)
    feats = model.fused_features(rgb_t, t_t)
    if prune_config is not None:
        selection = wrs_select(batch_channel_scores(feats), prune_config, rng)
        mask = torch.from_numpy(selection.mask()).to(feats.dtype)
        if prune_config.rescale:
            mask = mask * (selection.n_channels / len(selection.selected))
        feats = feats * mask.view(1, -1, 1, 1)
    logits = model.head(feats, domain)
    loss = classification_loss(logits, labels_t)
    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    grad_norm = torch.nn.utils.clip_grad_norm_(
        [p for group in optimizer.param_groups for p in group["params"]],
        max_norm=clip_gradient,
    )
    optimizer.step()
    return float(loss.detach()), float(grad_norm)


def train_offline(dataset: list[RGBTSequence], net_config: NetConfig,
                  config: TrainConfig, log_path=None) -> DAPNet:
    """Train from scratch on K sequences; domain k maps to fc6 branch k."""
    if len(dataset) < 1:
        raise ValueError("training needs at least one sequence")
    if net_config.n_domains != len(dataset):
        raise ValueError(
            f"net config has {net_config.n_domains} domains "
            f"for {len(dataset)} sequences"
        )
    rng = np.random.default_rng(config.seed)
    model = DAPNet(net_config, rng=rng)
    model.train()
    optimizer = make_optimizer(model, config)
    prunes = variant_uses_pruning(net_config.variant)
    prune_config = (PruningConfig(wrs_ratio=config.wrs_ratio,
                                  rescale=config.prune_rescale)
                    if prunes else None)
    spec = config.sample_spec()

    log_file = None
    writer = None
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        log_file = log_path.open("w", newline="")
        log_file.write(f"# variant: {net_config.variant}\n")
        log_file.write(f"# pruning: {'on' if prunes else 'off'}\n")
        writer = csv.writer(log_file)
        writer.writerow(["iteration", "domain", "loss", "grad_norm"])

    try:
        iteration = 0
        for _ in range(config.epochs):
            for domain, seq in enumerate(dataset):
                if config.max_iterations and iteration >= config.max_iterations:
                    return model
                iteration += 1
                rgb, thermal, labels = build_minibatch(
                    seq, spec, config.frames_per_batch,
                    net_config.backbone.input_size, rng,
                )
                loss, grad_norm = training_step(
                    model, optimizer, rgb, thermal, labels, domain,
                    prune_config, rng, config.clip_gradient,
                )
                if not math.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at iteration {iteration}, domain {domain}"
                    )
                if writer is not None:
                    writer.writerow([iteration, domain, f"{loss:.6f}", f"{grad_norm:.6f}"])
    finally:
        if log_file is not None:
            log_file.close()
    return model
