"""Axis-aligned boxes, target states and the small geometry kernel.

Boxes use a top-left origin and continuous (x, y, w, h) pixel coordinates.
The target state (a, b, s) stores the center and a multiplicative log-scale
coordinate: a state with scale s describes a box of ref_w * gamma**s by
ref_h * gamma**s pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Base of the multiplicative scale coordinate. s = 1 means "one scale step
# larger", i.e. dimensions multiplied by 1.05.
SCALE_GAMMA = 1.05


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle: left edge x, top edge y, width w, height h."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box coordinates must be finite, got {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box dimensions must be positive, got w={self.w}, h={self.h}")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    def area(self) -> float:
        return self.w * self.h

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)

    @staticmethod
    def from_array(arr) -> "Box":
        x, y, w, h = (float(v) for v in arr)
        return Box(x, y, w, h)


@dataclass(frozen=True)
class TargetState:
    """Tracker state: center (a, b) in pixels and log-scale coordinate s."""

    a: float
    b: float
    s: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.s)):
            raise ValueError(f"target state must be finite, got {self}")


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes, 0 when disjoint."""
    if a == b:
        return 1.0  # exact, even where x + w rounds
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area() + b.area() - inter
    return inter / union


def iou_batch(boxes: np.ndarray, ref: Box) -> np.ndarray:
    """IoU of each row of an (N, 4) xywh array against a reference box."""
    boxes = np.asarray(boxes, dtype=np.float64)
    ix = np.minimum(boxes[:, 0] + boxes[:, 2], ref.x + ref.w) - np.maximum(boxes[:, 0], ref.x)
    iy = np.minimum(boxes[:, 1] + boxes[:, 3], ref.y + ref.h) - np.maximum(boxes[:, 1], ref.y)
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    union = boxes[:, 2] * boxes[:, 3] + ref.area() - inter
    return inter / union


def center_distance(a: Box, b: Box) -> float:
    """Euclidean distance between box centers, in pixels."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


def state_to_box(state: TargetState, ref_w: float, ref_h: float,
                 gamma: float = SCALE_GAMMA) -> Box:
    """Realize a target state as a box around (a, b) at scale gamma**s."""
    if gamma <= 1:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    scale = gamma ** state.s
    w = ref_w * scale
    h = ref_h * scale
    return Box(state.a - w / 2.0, state.b - h / 2.0, w, h)


def box_to_state(box: Box, ref_w: float, ref_h: float,
                 gamma: float = SCALE_GAMMA) -> TargetState:
    """Inverse of state_to_box; the scale is read off the width ratio."""
    if gamma <= 1:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    s = math.log(box.w / ref_w) / math.log(gamma)
    return TargetState(box.cx, box.cy, s)
