"""Precision/success metrics and their export.

Precision at a pixel threshold t counts frames whose predicted center lies
within t of the ground truth (inclusive). Success at an overlap threshold t
counts frames whose IoU strictly exceeds t; the representative success rate
is the mean over the 21-point threshold grid 0.0, 0.05, ..., 1.0, which
equals the area under the piecewise-constant success plot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Box, center_distance, iou

ATTRIBUTES = ("NO", "PO", "HO", "LI", "LR", "TC", "DEF", "FM", "SV", "MB", "CM", "BC")
SR_THRESHOLDS = tuple(np.linspace(0.0, 1.0, 21))


@dataclass(frozen=True)
class EvalConfig:
    pr_threshold: float = 20.0  # 5 for GTOT-style data, 20 for RGBT234-style
    sr_thresholds: tuple[float, ...] = SR_THRESHOLDS

    def __post_init__(self):
        if list(self.sr_thresholds) != sorted(self.sr_thresholds):
            raise ValueError("sr_thresholds must be ascending")


def _check_lengths(results, gts):
    if len(results) != len(gts):
        raise ValueError(f"{len(results)} results vs {len(gts)} ground-truth boxes")
    if len(results) == 0:
        raise ValueError("empty result list")


def center_errors(results: list[Box], gts: list[Box]) -> np.ndarray:
    _check_lengths(results, gts)
    return np.array([center_distance(r, g) for r, g in zip(results, gts)])


def overlaps(results: list[Box], gts: list[Box]) -> np.ndarray:
    _check_lengths(results, gts)
    return np.array([iou(r, g) for r, g in zip(results, gts)])


def precision_curve_from_errors(errors: np.ndarray, thresholds) -> np.ndarray:
    return np.array([np.mean(errors <= t) for t in thresholds])


def success_curve_from_overlaps(ious: np.ndarray, thresholds=SR_THRESHOLDS) -> np.ndarray:
    return np.array([np.mean(ious > t) for t in thresholds])


def precision_curve(results, gts, thresholds) -> np.ndarray:
    """Fraction of frames with center error <= t, per threshold."""
    return precision_curve_from_errors(center_errors(results, gts), thresholds)


def success_curve(results, gts,
                  thresholds=SR_THRESHOLDS) -> tuple[np.ndarray, float]:
    """Success plot over the threshold grid and its mean (the AUC)."""
    curve = success_curve_from_overlaps(overlaps(results, gts), thresholds)
    return curve, float(curve.mean())


def representative_pr(results, gts, pr_threshold: float) -> float:
    return float(np.mean(center_errors(results, gts) <= pr_threshold))


@dataclass
class SequenceResult:
    """One tracked sequence paired with its ground truth and tags."""

    name: str
    results: list[Box]
    gts: list[Box]
    attributes: frozenset[str] = frozenset()

    def __post_init__(self):
        _check_lengths(self.results, self.gts)
        unknown = set(self.attributes) - set(ATTRIBUTES)
        if unknown:
            raise ValueError(f"{self.name}: unknown attribute tags {sorted(unknown)}")


@dataclass
class MetricRow:
    label: str
    n_sequences: int
    n_frames: int
    pr: float
    sr: float


def pooled_metrics(seqs: list[SequenceResult], config: EvalConfig) -> tuple[float, float]:
    """Frame-weighted PR/SR over the concatenation of all listed sequences."""
    errors = np.concatenate([center_errors(s.results, s.gts) for s in seqs])
    ious = np.concatenate([overlaps(s.results, s.gts) for s in seqs])
    pr = float(np.mean(errors <= config.pr_threshold))
    sr = float(success_curve_from_overlaps(ious, config.sr_thresholds).mean())
    return pr, sr


def attribute_breakdown(seqs: list[SequenceResult],
                        config: EvalConfig) -> dict[str, MetricRow | None]:
    """Per-attribute pooled metrics plus an ALL row; untagged rows are None."""
    table: dict[str, MetricRow | None] = {}
    for attr in ATTRIBUTES:
        tagged = [s for s in seqs if attr in s.attributes]
        if not tagged:
            table[attr] = None
            continue
        pr, sr = pooled_metrics(tagged, config)
        table[attr] = MetricRow(attr, len(tagged),
                                sum(len(s.results) for s in tagged), pr, sr)
    pr, sr = pooled_metrics(seqs, config)
    table["ALL"] = MetricRow("ALL", len(seqs),
                             sum(len(s.results) for s in seqs), pr, sr)
    return table


# -- export -------------------------------------------------------------------


def write_curve(path, thresholds, values) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "value"])
        for t, v in zip(thresholds, values):
            writer.writerow([repr(float(t)), repr(float(v))])


def read_curve(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["threshold", "value"]:
            raise ValueError(f"{path}: unexpected curve header {header}")
        rows = [(float(t), float(v)) for t, v in reader]
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def write_summary(path, rows: list[dict]) -> None:
    """Summary CSV: one row per tracker variant per dataset."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = ["tracker", "dataset", "n_sequences", "n_frames", "pr", "sr"]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_attribute_table(path, table: dict[str, MetricRow | None]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["attribute", "n_sequences", "n_frames", "pr", "sr"])
        for attr, row in table.items():
            if row is None:
                writer.writerow([attr, 0, 0, "", ""])  # absent, not zero
            else:
                writer.writerow([attr, row.n_sequences, row.n_frames,
                                 f"{row.pr:.6f}", f"{row.sr:.6f}"])


def plot_curves(out_path, curves: dict[str, tuple], xlabel: str, title: str) -> None:
    """Optional matplotlib rendering of threshold/value curves."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for label, (thresholds, values) in curves.items():
        ax.plot(thresholds, values, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("fraction of frames")
    ax.set_title(title)
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
