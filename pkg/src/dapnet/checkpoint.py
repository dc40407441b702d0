"""Flat named-array weight files.

Layout (all integers little-endian):

    magic   b"DAPW1\\n"
    u32     number of arrays
    per array:
        u16     name length, then that many UTF-8 bytes
        u8      rank
        u32*    dimensions
        f32*    row-major values

The same format serves training checkpoints and external weight injection
(e.g. pretrained backbone filters); names follow the module state-dict paths
documented in the README.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"DAPW1\n"


class CheckpointError(Exception):
    pass


def save_arrays(path, arrays: dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC, struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    path.write_bytes(b"".join(chunks))


def load_arrays(path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"missing checkpoint file {path}")
    blob = path.read_bytes()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path} is not a weight file (bad magic)")
    offset = len(MAGIC)

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(blob):
            raise CheckpointError(f"{path}: truncated weight file")
        out = blob[offset:offset + n]
        offset += n
        return out

    (count,) = struct.unpack("<I", take(4))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim)) if ndim else ()
        n_values = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        data = np.frombuffer(take(4 * n_values), dtype="<f4").reshape(shape)
        arrays[name] = data.copy()
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return arrays


def save_model(path, model: torch.nn.Module) -> None:
    arrays = {name: tensor.detach().cpu().numpy()
              for name, tensor in model.state_dict().items()}
    save_arrays(path, arrays)


def load_into_model(model: torch.nn.Module, path, strict: bool = True) -> list[str]:
    """Load named arrays into matching parameters; returns unmatched names.

    With strict=True every model parameter must be covered and every file
    array must match a parameter. With strict=False (partial injection, e.g.
    pretrained backbone filters) name and shape mismatches are only reported.
    """
    arrays = load_arrays(path)
    state = model.state_dict()
    unmatched = [name for name in arrays if name not in state]
    missing = [name for name in state if name not in arrays]
    if strict and (unmatched or missing):
        raise CheckpointError(
            f"{path}: checkpoint does not match model "
            f"(unknown: {unmatched[:3]}, missing: {missing[:3]})"
        )
    loaded = {}
    for name, arr in arrays.items():
        if name not in state:
            continue
        if tuple(state[name].shape) != arr.shape:
            raise CheckpointError(
                f"{path}: shape mismatch for {name}: "
                f"file {arr.shape} vs model {tuple(state[name].shape)}"
            )
        loaded[name] = torch.from_numpy(arr)
    model.load_state_dict(loaded, strict=False)  # validated above
    return unmatched
