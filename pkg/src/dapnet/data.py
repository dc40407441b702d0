"""Dataset ingestion for two-directory RGBT layouts and result-file IO.

Two on-disk layouts are understood:

    gtot      v/ and i/ image directories, groundTruth_v.txt (canonical
              boxes) and optionally groundTruth_i.txt
    rgbt234   visible/ and infrared/ image directories, visible.txt
              (canonical) and optionally infrared.txt

Ground-truth files hold one box per line, comma- or whitespace-separated.
Four numbers are read as x,y,w,h; eight numbers as a polygon that is reduced
to its axis-aligned bounding rectangle. An optional attributes.txt lists the
sequence's challenge tags. Frames are ordered by the natural numeric order
of their filenames.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .core import Box

LAYOUTS = {
    "gtot": dict(rgb_dir="v", t_dir="i",
                 rgb_gt="groundTruth_v.txt", t_gt="groundTruth_i.txt"),
    "rgbt234": dict(rgb_dir="visible", t_dir="infrared",
                    rgb_gt="visible.txt", t_gt="infrared.txt"),
}

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


class DataError(Exception):
    """Malformed or inconsistent dataset files."""


@dataclass
class RGBTSequence:
    """Aligned RGB and thermal frame streams with per-frame ground truth.

    Frame entries are either file paths (loaded lazily) or in-memory arrays.
    RGB frames are (H, W, 3) uint8, thermal frames (H, W) uint8.
    """

    name: str
    rgb: list
    thermal: list
    gt: list[Box]
    gt_thermal: list[Box] | None = None
    attributes: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.rgb) != len(self.thermal):
            raise DataError(
                f"{self.name}: {len(self.rgb)} RGB frames vs "
                f"{len(self.thermal)} thermal frames"
            )
        if len(self.gt) != len(self.rgb):
            raise DataError(
                f"{self.name}: {len(self.gt)} ground-truth boxes for "
                f"{len(self.rgb)} frames"
            )

    def __len__(self) -> int:
        return len(self.rgb)

    def rgb_frame(self, i: int) -> np.ndarray:
        return _load_frame(self.rgb[i], color=True)

    def thermal_frame(self, i: int) -> np.ndarray:
        return _load_frame(self.thermal[i], color=False)

    @property
    def image_size(self) -> tuple[int, int]:
        """(width, height) of the frames."""
        frame = self.rgb_frame(0)
        return frame.shape[1], frame.shape[0]


def _load_frame(entry, color: bool) -> np.ndarray:
    if isinstance(entry, np.ndarray):
        return entry
    flag = cv2.IMREAD_COLOR if color else cv2.IMREAD_GRAYSCALE
    img = cv2.imread(str(entry), flag)
    if img is None:
        raise DataError(f"cannot read image {entry}")
    return img


def _natural_key(path: Path):
    return [int(part) if part.isdigit() else part
            for part in re.split(r"(\d+)", path.name)]


def _list_frames(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise DataError(f"missing image directory {directory}")
    frames = [p for p in directory.iterdir()
              if p.suffix.lower() in IMAGE_EXTENSIONS]
    if not frames:
        raise DataError(f"no image files in {directory}")
    return sorted(frames, key=_natural_key)


def parse_box_line(line: str, path, lineno: int) -> Box:
    fields = [f for f in re.split(r"[,\s]+", line.strip()) if f]
    try:
        values = [float(f) for f in fields]
    except ValueError as exc:
        raise DataError(f"{path}:{lineno}: non-numeric field in {line!r}") from exc
    if len(values) == 4:
        x, y, w, h = values
    elif len(values) == 8:
        xs, ys = values[0::2], values[1::2]
        x, y = min(xs), min(ys)
        w, h = max(xs) - x, max(ys) - y
    else:
        raise DataError(
            f"{path}:{lineno}: expected 4 or 8 numbers, got {len(values)}"
        )
    try:
        return Box(x, y, w, h)
    except ValueError as exc:
        raise DataError(f"{path}:{lineno}: {exc}") from exc


def _read_gt_file(path: Path) -> list[Box]:
    if not path.is_file():
        raise DataError(f"missing ground-truth file {path}")
    boxes = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        boxes.append(parse_box_line(line, path, lineno))
    return boxes


def _read_attributes(path: Path) -> frozenset[str]:
    if not path.is_file():
        return frozenset()
    tags = re.split(r"[,\s]+", path.read_text().strip())
    return frozenset(t for t in tags if t)


def detect_layout(directory: Path) -> str:
    for layout, names in LAYOUTS.items():
        if (directory / names["rgb_dir"]).is_dir() and (directory / names["t_dir"]).is_dir():
            return layout
    raise DataError(
        f"{directory} matches no known layout (expected v/ + i/ or visible/ + infrared/)"
    )


def load_sequence(directory, layout: str | None = None) -> RGBTSequence:
    """Load and validate one sequence directory; frames stay on disk."""
    directory = Path(directory)
    if layout is None:
        layout = detect_layout(directory)
    if layout not in LAYOUTS:
        raise DataError(f"unknown layout {layout!r}, expected one of {sorted(LAYOUTS)}")
    names = LAYOUTS[layout]
    rgb_frames = _list_frames(directory / names["rgb_dir"])
    t_frames = _list_frames(directory / names["t_dir"])
    gt = _read_gt_file(directory / names["rgb_gt"])
    t_gt_path = directory / names["t_gt"]
    gt_thermal = _read_gt_file(t_gt_path) if t_gt_path.is_file() else None
    if len(gt) != len(rgb_frames):
        raise DataError(
            f"{directory}: {len(gt)} ground-truth lines for {len(rgb_frames)} frames"
        )
    return RGBTSequence(
        name=directory.name,
        rgb=rgb_frames,
        thermal=t_frames,
        gt=gt,
        gt_thermal=gt_thermal,
        attributes=_read_attributes(directory / "attributes.txt"),
    )


def list_sequence_dirs(root) -> list[Path]:
    """Sequence subdirectories of a dataset root, sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    dirs = sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: p.name)
    if not dirs:
        raise DataError(f"no sequence directories under {root}")
    return dirs


def write_sequence(seq: RGBTSequence, directory, layout: str = "rgbt234") -> Path:
    """Materialize a sequence (e.g. a synthetic one) in a standard layout."""
    directory = Path(directory)
    names = LAYOUTS[layout]
    rgb_dir = directory / names["rgb_dir"]
    t_dir = directory / names["t_dir"]
    rgb_dir.mkdir(parents=True, exist_ok=True)
    t_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        cv2.imwrite(str(rgb_dir / f"{i:05d}.png"), seq.rgb_frame(i))
        cv2.imwrite(str(t_dir / f"{i:05d}.png"), seq.thermal_frame(i))
    save_results(directory / names["rgb_gt"], seq.gt)
    if seq.gt_thermal is not None:
        save_results(directory / names["t_gt"], seq.gt_thermal)
    if seq.attributes:
        (directory / "attributes.txt").write_text(
            "\n".join(sorted(seq.attributes)) + "\n"
        )
    return directory


def save_results(path, boxes: list[Box]) -> None:
    """One "x,y,w,h" line per frame; floats round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{b.x},{b.y},{b.w},{b.h}" for b in boxes]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def load_results(path) -> list[Box]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing result file {path}")
    boxes = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = [f for f in re.split(r"[,\s]+", line.strip()) if f]
        if len(fields) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
        boxes.append(parse_box_line(line, path, lineno))
    return boxes
