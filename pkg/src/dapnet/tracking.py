"""Online tracking: first-frame adaptation, candidate scoring, fc updates.

The tracker freezes every convolutional parameter of the pretrained model,
swaps the offline fc6 branches for one fresh branch, and fine-tunes fc4-6 on
first-frame samples. Per frame it scores Gaussian candidates around the
previous target state and takes the one with the highest positive softmax
score; a ridge bounding-box regressor (fitted once, on the first frame)
refines the output when that score is reliable. Pruning is never applied
while tracking, so the forward path consumes no randomness.

Update policy: a LONG update (positives of the last ``long_window`` frames)
every ``update_interval`` frames, and a SHORT update (positives of the last
``short_window`` frames) whenever the winning score drops to the reliability
threshold or below. Negatives always come from the last ``short_window``
frames. New samples are harvested only from reliable frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .core import Box, TargetState
from .data import RGBTSequence
from .head import classification_loss
from .model import DAPNet
from .sampling import (SampleSpec, draw_training_samples, extract_patches,
                       gaussian_candidates)


@dataclass(frozen=True)
class TrackConfig:
    n_candidates: int = 256
    force_first_candidate: bool = True
    init_pos: int = 500
    init_neg: int = 5000
    init_iterations: int = 10
    lr_fc45: float = 1e-4
    lr_fc6: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    update_interval: int = 10
    long_window: int = 100
    short_window: int = 20
    update_iterations: int = 10
    score_threshold: float = 0.5
    ridge_lambda: float = 1000.0
    harvest_pos: int = 50
    harvest_neg: int = 200
    pos_iou_min: float = 0.7
    neg_iou_max: float = 0.5
    harvest_neg_iou_max: float = 0.3
    batch_pos: int = 32
    batch_neg: int = 96


class BBoxRegressor:
    """Ridge regression from candidate features to box offsets.

    Offsets follow the usual parameterization: (dx, dy) shift the center in
    units of the box size, (dlogw, dlogh) scale the dimensions. The bias is
    modeled as an extra all-ones feature column and regularized like every
    other weight.
    """

    def __init__(self, lam: float = 1000.0):
        self.lam = lam
        self.weights: np.ndarray | None = None

    def fit(self, features: np.ndarray, boxes: np.ndarray, gt: Box) -> None:
        x = np.asarray(features, dtype=np.float64)
        boxes = np.asarray(boxes, dtype=np.float64)
        cx = boxes[:, 0] + boxes[:, 2] / 2
        cy = boxes[:, 1] + boxes[:, 3] / 2
        targets = np.stack([
            (gt.cx - cx) / boxes[:, 2],
            (gt.cy - cy) / boxes[:, 3],
            np.log(gt.w / boxes[:, 2]),
            np.log(gt.h / boxes[:, 3]),
        ], axis=1)
        x = np.hstack([x, np.ones((len(x), 1))])
        gram = x.T @ x + self.lam * np.eye(x.shape[1])
        self.weights = np.linalg.solve(gram, x.T @ targets)

    def apply(self, feature: np.ndarray, box: Box) -> Box:
        if self.weights is None:
            raise RuntimeError("regressor is not fitted")
        x = np.append(np.asarray(feature, dtype=np.float64), 1.0)
        dx, dy, dlw, dlh = x @ self.weights
        w = box.w * math.exp(dlw)
        h = box.h * math.exp(dlh)
        cx = box.cx + dx * box.w
        cy = box.cy + dy * box.h
        return Box(cx - w / 2, cy - h / 2, w, h)


class Tracker:
    """Per-sequence online state around a pretrained model."""

    def __init__(self, model: DAPNet, config: TrackConfig, rng: np.random.Generator):
        self.model = model
        self.config = config
        self.rng = rng
        self.regressor = BBoxRegressor(config.ridge_lambda)
        self.prev: TargetState | None = None
        self.ref_w = self.ref_h = 0.0
        self.frame_idx = 0
        self.image_size: tuple[int, int] = (0, 0)
        # stores hold (frame index, feature tensor) entries
        self.pos_store: list[tuple[int, torch.Tensor]] = []
        self.neg_store: list[tuple[int, torch.Tensor]] = []
        self.optimizer: torch.optim.SGD | None = None

    # -- feature extraction -------------------------------------------------

    def _features(self, rgb_frame, t_frame, boxes) -> torch.Tensor:
        """Flattened fused features for a list of boxes, conv grads off."""
        size = self.model.config.backbone.input_size
        out = []
        with torch.no_grad():
            for lo in range(0, len(boxes), 256):
                chunk = boxes[lo:lo + 256]
                rgb, thermal = extract_patches(rgb_frame, t_frame, chunk, size)
                feats = self.model.fused_features(torch.from_numpy(rgb),
                                                  torch.from_numpy(thermal))
                out.append(feats.flatten(1))
        return torch.cat(out)

    def _train_fc(self, pos_feats: torch.Tensor, neg_feats: torch.Tensor,
                  iterations: int) -> None:
        cfg = self.config
        for _ in range(iterations):
            pos_idx = self.rng.choice(len(pos_feats), size=cfg.batch_pos,
                                      replace=len(pos_feats) < cfg.batch_pos)
            neg_idx = self.rng.choice(len(neg_feats), size=cfg.batch_neg,
                                      replace=len(neg_feats) < cfg.batch_neg)
            batch = torch.cat([pos_feats[pos_idx], neg_feats[neg_idx]])
            labels = torch.cat([torch.zeros(cfg.batch_pos, dtype=torch.int64),
                                torch.ones(cfg.batch_neg, dtype=torch.int64)])
            logits = self.model.head(batch, 0)
            loss = classification_loss(logits, labels)
            self.optimizer.zero_grad(set_to_none=True)
            loss.backward()
            self.optimizer.step()

    def _trim_stores(self) -> None:
        cfg = self.config
        self.pos_store = [(f, feats) for f, feats in self.pos_store
                          if f > self.frame_idx - cfg.long_window]
        self.neg_store = [(f, feats) for f, feats in self.neg_store
                          if f > self.frame_idx - cfg.short_window]

    def _stored(self, store, window: int) -> torch.Tensor | None:
        feats = [f for idx, f in store if idx > self.frame_idx - window]
        return torch.cat(feats) if feats else None

    # -- protocol -----------------------------------------------------------

    def init(self, rgb_frame, t_frame, gt: Box) -> None:
        cfg = self.config
        self.image_size = (rgb_frame.shape[1], rgb_frame.shape[0])
        self.ref_w, self.ref_h = gt.w, gt.h
        self.prev = TargetState(gt.cx, gt.cy, 0.0)
        self.frame_idx = 0
        self.model.eval()

        for p in self.model.conv_parameters():
            p.requires_grad_(False)
        head = self.model.head
        head.replace_branches(1)
        branch = head.branches[0]
        with torch.no_grad():
            w = self.rng.normal(0.0, 0.01, size=tuple(branch.weight.shape))
            branch.weight.copy_(torch.from_numpy(w).to(branch.weight.dtype))
            branch.bias.zero_()
        self.optimizer = torch.optim.SGD(
            [{"params": list(head.fc4.parameters()) + list(head.fc5.parameters()),
              "lr": cfg.lr_fc45},
             {"params": list(branch.parameters()), "lr": cfg.lr_fc6}],
            lr=cfg.lr_fc45, momentum=cfg.momentum, weight_decay=cfg.weight_decay,
        )

        spec = SampleSpec(n_pos=cfg.init_pos, n_neg=cfg.init_neg,
                          pos_iou_min=cfg.pos_iou_min, neg_iou_max=cfg.neg_iou_max)
        pos, neg = draw_training_samples(gt, self.image_size, spec, self.rng)
        pos_feats = self._features(rgb_frame, t_frame, pos)
        neg_feats = self._features(rgb_frame, t_frame, neg)
        self._train_fc(pos_feats, neg_feats, cfg.init_iterations)

        pos_boxes = np.stack([b.as_array() for b in pos])
        self.regressor.fit(pos_feats.numpy(), pos_boxes, gt)
        self.pos_store = [(0, pos_feats)]
        self.neg_store = [(0, neg_feats)]

    def step(self, rgb_frame, t_frame) -> tuple[Box, float]:
        if self.prev is None:
            raise RuntimeError("tracker is not initialized")
        cfg = self.config
        self.frame_idx += 1

        candidates = gaussian_candidates(
            self.prev, self.ref_w, self.ref_h, cfg.n_candidates, self.rng,
            self.image_size, force_first=cfg.force_first_candidate,
        )
        boxes = [candidates.box(i) for i in range(len(candidates))]
        feats = self._features(rgb_frame, t_frame, boxes)
        with torch.no_grad():
            logits = self.model.head(feats, 0)
            f_plus = torch.softmax(logits, dim=1)[:, 0].numpy()
        candidates.scores = f_plus

        winner = int(np.argmax(f_plus))
        win_score = float(f_plus[winner])
        win_box = candidates.box(winner)
        out_box = win_box
        self.prev = candidates.state(winner)

        reliable = win_score > cfg.score_threshold
        if reliable:
            out_box = self.regressor.apply(feats[winner].numpy(), win_box)
            harvest_spec = SampleSpec(
                n_pos=cfg.harvest_pos, n_neg=cfg.harvest_neg,
                pos_iou_min=cfg.pos_iou_min, neg_iou_max=cfg.harvest_neg_iou_max,
            )
            pos, neg = draw_training_samples(win_box, self.image_size,
                                             harvest_spec, self.rng)
            self.pos_store.append((self.frame_idx,
                                   self._features(rgb_frame, t_frame, pos)))
            self.neg_store.append((self.frame_idx,
                                   self._features(rgb_frame, t_frame, neg)))
        self._trim_stores()

        if not reliable:
            self._update(cfg.short_window)
        elif self.frame_idx % cfg.update_interval == 0:
            self._update(cfg.long_window)
        return out_box, win_score

    def _update(self, pos_window: int) -> None:
        pos = self._stored(self.pos_store, pos_window)
        neg = self._stored(self.neg_store, self.config.short_window)
        if pos is None or neg is None:
            return
        self._train_fc(pos, neg, self.config.update_iterations)


def track_sequence(model: DAPNet, seq: RGBTSequence, config: TrackConfig,
                   rng: np.random.Generator) -> tuple[list[Box], list[float]]:
    """Track a whole sequence; frame 0 reports the ground truth it was given."""
    tracker = Tracker(model, config, rng)
    tracker.init(seq.rgb_frame(0), seq.thermal_frame(0), seq.gt[0])
    results = [seq.gt[0]]
    scores = [1.0]
    for i in range(1, len(seq)):
        box, score = tracker.step(seq.rgb_frame(i), seq.thermal_frame(i))
        results.append(box)
        scores.append(score)
    return results, scores
