"""Stochastic box generation and patch extraction.

Training samples are IoU-gated jitters of the ground-truth box: positives
overlap it by at least ``pos_iou_min``, negatives by less than
``neg_iou_max``, and boxes in the gap between the two gates are never
emitted. Tracking candidates follow a Gaussian around the previous target
state with covariance diag(0.09 r^2, 0.09 r^2, 0.25), r being the mean of
the previous target box's width and height.

All draws consume an explicit numpy Generator, so every function here is a
pure function of (inputs, rng state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .core import Box, SCALE_GAMMA, TargetState, iou_batch

PROPOSAL_BUDGET = 100_000
#: std of the candidate center offset, as a fraction of r (variance 0.09 r^2)
CANDIDATE_TRANS_STD = 0.3
#: std of the candidate log-scale offset (variance 0.25)
CANDIDATE_SCALE_STD = 0.5


class SamplingExhaustedError(RuntimeError):
    """Raised when the proposal budget runs out before the quotas are met."""


@dataclass(frozen=True)
class SampleSpec:
    n_pos: int = 32
    n_neg: int = 96
    pos_iou_min: float = 0.7
    neg_iou_max: float = 0.5
    # positive jitter: translation std as a fraction of r, scale std in s
    pos_trans_std: float = 0.1
    pos_scale_std: float = 0.05
    budget: int = PROPOSAL_BUDGET

    def __post_init__(self):
        if self.pos_iou_min <= self.neg_iou_max:
            raise ValueError(
                f"pos_iou_min ({self.pos_iou_min}) must exceed "
                f"neg_iou_max ({self.neg_iou_max})"
            )


@dataclass
class CandidateSet:
    """Candidate target states with their derived (image-clipped) boxes."""

    states: np.ndarray  # (N, 3) rows (a, b, s)
    boxes: np.ndarray   # (N, 4) rows (x, y, w, h)
    scores: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.states)

    def box(self, i: int) -> Box:
        return Box.from_array(self.boxes[i])

    def state(self, i: int) -> TargetState:
        a, b, s = self.states[i]
        return TargetState(float(a), float(b), float(s))


def _propose_positives(gt: Box, n: int, spec: SampleSpec,
                       rng: np.random.Generator) -> np.ndarray:
    r = (gt.w + gt.h) / 2.0
    cx = gt.cx + rng.normal(0.0, spec.pos_trans_std * r, size=n)
    cy = gt.cy + rng.normal(0.0, spec.pos_trans_std * r, size=n)
    scale = SCALE_GAMMA ** rng.normal(0.0, spec.pos_scale_std, size=n)
    w = gt.w * scale
    h = gt.h * scale
    return np.stack([cx - w / 2, cy - h / 2, w, h], axis=1)


def _propose_negatives(gt: Box, image_w: float, image_h: float, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    # half uniform over the image, half wide jitter around the target
    r = (gt.w + gt.h) / 2.0
    uniform = rng.random(size=n) < 0.5
    cx = np.where(uniform,
                  rng.uniform(0.0, image_w, size=n),
                  gt.cx + rng.normal(0.0, r, size=n))
    cy = np.where(uniform,
                  rng.uniform(0.0, image_h, size=n),
                  gt.cy + rng.normal(0.0, r, size=n))
    cx = np.clip(cx, 0.0, image_w)
    cy = np.clip(cy, 0.0, image_h)
    scale = SCALE_GAMMA ** rng.normal(0.0, 1.0, size=n)
    w = gt.w * scale
    h = gt.h * scale
    return np.stack([cx - w / 2, cy - h / 2, w, h], axis=1)


def draw_training_samples(gt: Box, image_size: tuple[int, int], spec: SampleSpec,
                          rng: np.random.Generator) -> tuple[list[Box], list[Box]]:
    """Rejection-sample ``n_pos`` positives and ``n_neg`` negatives around gt.

    image_size is (width, height). Raises SamplingExhaustedError once the
    proposal budget is spent; the IoU gates are never relaxed.
    """
    image_w, image_h = image_size
    pos: list[Box] = []
    neg: list[Box] = []
    spent = 0
    chunk = 4 * max(spec.n_pos, spec.n_neg)
    while (len(pos) < spec.n_pos or len(neg) < spec.n_neg) and spent < spec.budget:
        n = min(chunk, spec.budget - spent)
        spent += n
        need_pos = len(pos) < spec.n_pos
        cand = (_propose_positives(gt, n, spec, rng) if need_pos
                else _propose_negatives(gt, image_w, image_h, n, rng))
        overlaps = iou_batch(cand, gt)
        if need_pos:
            for row in cand[overlaps >= spec.pos_iou_min][: spec.n_pos - len(pos)]:
                pos.append(Box.from_array(row))
        else:
            for row in cand[overlaps < spec.neg_iou_max][: spec.n_neg - len(neg)]:
                neg.append(Box.from_array(row))
    if len(pos) < spec.n_pos or len(neg) < spec.n_neg:
        raise SamplingExhaustedError(
            f"proposal budget {spec.budget} exhausted with "
            f"{len(pos)}/{spec.n_pos} positives and {len(neg)}/{spec.n_neg} negatives"
        )
    return pos, neg


def gaussian_candidates(prev: TargetState, ref_w: float, ref_h: float,
                        n_cand: int, rng: np.random.Generator,
                        image_size: tuple[int, int],
                        force_first: bool = False,
                        trans_std: float = CANDIDATE_TRANS_STD,
                        scale_std: float = CANDIDATE_SCALE_STD,
                        gamma: float = SCALE_GAMMA) -> CandidateSet:
    """Draw candidate states around prev and clip their boxes to the image.

    ref_w/ref_h are the tracker's reference dimensions (the scale coordinate
    s is relative to them); the previous target box has dimensions
    ref * gamma**prev.s. Boxes are clamped to lie fully inside the image with
    at least 2 px of width and height, and states are re-derived from the
    clamped boxes so both views stay consistent.
    """
    if n_cand < 1:
        raise ValueError("need at least one candidate")
    image_w, image_h = image_size
    prev_w = ref_w * gamma ** prev.s
    prev_h = ref_h * gamma ** prev.s
    r = (prev_w + prev_h) / 2.0

    da = rng.normal(0.0, trans_std * r, size=n_cand)
    db = rng.normal(0.0, trans_std * r, size=n_cand)
    ds = rng.normal(0.0, scale_std, size=n_cand)
    if force_first:
        da[0] = db[0] = ds[0] = 0.0

    scale = gamma ** (prev.s + ds)
    w = np.clip(ref_w * scale, 2.0, image_w)
    h = np.clip(ref_h * scale, 2.0, image_h)
    x = np.clip(prev.a + da - w / 2, 0.0, image_w - w)
    y = np.clip(prev.b + db - h / 2, 0.0, image_h - h)
    boxes = np.stack([x, y, w, h], axis=1)

    s = np.log(np.sqrt((w * h) / (ref_w * ref_h))) / math.log(gamma)
    states = np.stack([x + w / 2, y + h / 2, s], axis=1)
    return CandidateSet(states=states, boxes=boxes)


def extract_patch(image: np.ndarray, box: Box, out_size: int = 107) -> np.ndarray:
    """Crop a box from an image (zero-padded outside) and resize bilinearly.

    Accepts (H, W) or (H, W, C) arrays; single-channel input is replicated to
    3 channels. Returns a float32 (out_size, out_size, 3) patch of raw pixel
    values.
    """
    if image.ndim == 2:
        image = image[:, :, None]
    img_h, img_w = image.shape[:2]
    x1 = int(round(box.x))
    y1 = int(round(box.y))
    x2 = max(x1 + 1, int(round(box.x + box.w)))
    y2 = max(y1 + 1, int(round(box.y + box.h)))
    if x2 <= 0 or y2 <= 0 or x1 >= img_w or y1 >= img_h:
        raise ValueError(f"box {box} lies fully outside the {img_w}x{img_h} image")

    crop = np.zeros((y2 - y1, x2 - x1, image.shape[2]), dtype=np.float32)
    sx1, sy1 = max(x1, 0), max(y1, 0)
    sx2, sy2 = min(x2, img_w), min(y2, img_h)
    crop[sy1 - y1: sy2 - y1, sx1 - x1: sx2 - x1] = image[sy1:sy2, sx1:sx2]

    if crop.shape[0] != out_size or crop.shape[1] != out_size:
        crop = cv2.resize(crop, (out_size, out_size), interpolation=cv2.INTER_LINEAR)
        if crop.ndim == 2:  # cv2 squeezes single-channel results
            crop = crop[:, :, None]
    if crop.shape[2] == 1:
        crop = np.repeat(crop, 3, axis=2)
    return crop


def extract_patches(rgb: np.ndarray, thermal: np.ndarray, boxes,
                    out_size: int = 107) -> tuple[np.ndarray, np.ndarray]:
    """Extract aligned patch batches, returned as (B, 3, S, S) float32 arrays."""
    rgb_patches = np.empty((len(boxes), 3, out_size, out_size), dtype=np.float32)
    t_patches = np.empty_like(rgb_patches)
    for i, box in enumerate(boxes):
        rgb_patches[i] = extract_patch(rgb, box, out_size).transpose(2, 0, 1)
        t_patches[i] = extract_patch(thermal, box, out_size).transpose(2, 0, 1)
    return rgb_patches, t_patches
