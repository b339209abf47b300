"""Frame-stack persistence.

Binary container, all integers little-endian::

    offset  size  field
    0       8     magic  b"GISTACK\\x00"
    8       2     format version (uint16, currently 1)
    10      2     flags (uint16): bit 0 payload is float64 (normalized),
                  bit 1 per-frame mu array follows the payload
    12      4     rows (uint32)
    16      4     cols (uint32)
    20      4     K, number of frames (uint32)
    24      8     seed (uint64)
    32      4     length L of the JSON header (uint32)
    36      L     UTF-8 JSON: params snapshot, mask, tool version
    36+L    ...   payload: for each frame, the object grid then the
                  reference grid, row-major; uint32 or float64
    ...     8*K   optional per-frame mu, float64

The JSON header is written with sorted keys and no timestamps, so equal
stacks produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from . import __version__
from .geometry import ExperimentParams
from .simulator import FrameStack, MaskSpec

MAGIC = b"GISTACK\x00"
VERSION = 1
FLAG_FLOAT = 1
FLAG_MU = 2
_HEAD = struct.Struct("<8sHHIIIQI")


def save_stack(stack: FrameStack, path: Union[str, Path]) -> Path:
    path = Path(path)
    rows, cols = stack.mask.shape
    flags = (FLAG_FLOAT if stack.normalized else 0) | (FLAG_MU if stack.frame_mu is not None else 0)
    meta = {
        "params": stack.params.to_dict(),
        "mask": stack.mask.transmission.astype(int).tolist(),
        "normalized": stack.normalized,
        "tool": "ghostsnr",
        "tool_version": __version__,
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    dtype = "<f8" if stack.normalized else "<u4"
    payload = np.stack([stack.obj, stack.ref], axis=1).astype(dtype, copy=False)
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, flags, rows, cols, stack.frames, stack.seed, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(payload).tobytes())
        if stack.frame_mu is not None:
            fh.write(np.asarray(stack.frame_mu, dtype="<f8").tobytes())
    return path


def load_stack(path: Union[str, Path]) -> FrameStack:
    data = Path(path).read_bytes()
    magic, version, flags, rows, cols, K, seed, L = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a frame-stack file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    off = _HEAD.size
    meta = json.loads(data[off : off + L].decode("utf-8"))
    off += L
    dtype = np.dtype("<f8" if flags & FLAG_FLOAT else "<u4")
    count = K * 2 * rows * cols
    payload = np.frombuffer(data, dtype=dtype, count=count, offset=off).reshape(K, 2, rows, cols)
    off += count * dtype.itemsize
    frame_mu = None
    if flags & FLAG_MU:
        frame_mu = np.frombuffer(data, dtype="<f8", count=K, offset=off).copy()
    native = np.float64 if flags & FLAG_FLOAT else np.uint32
    return FrameStack(
        obj=payload[:, 0].astype(native),
        ref=payload[:, 1].astype(native),
        params=ExperimentParams.from_dict(meta["params"]),
        mask=MaskSpec(np.array(meta["mask"], dtype=bool)),
        seed=int(seed),
        frame_mu=frame_mu,
        normalized=bool(flags & FLAG_FLOAT),
    )


CSV_COLUMNS = ("frame", "row", "col", "transmission", "object", "reference")


def export_csv(stack: FrameStack, path: Union[str, Path], max_rows: int = 1_000_000) -> Path:
    """One line per (frame, cell).  Meant for small stacks."""
    K, rows, cols = stack.obj.shape
    if K * rows * cols > max_rows:
        raise ValueError(f"stack has {K * rows * cols} cells; CSV export is limited to {max_rows}")
    path = Path(path)
    t = stack.mask.transmission
    fmt = repr if stack.normalized else (lambda v: str(int(v)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k in range(K):
            for i in range(rows):
                for j in range(cols):
                    w.writerow((k, i, j, int(t[i, j]), fmt(float(stack.obj[k, i, j])), fmt(float(stack.ref[k, i, j]))))
    return path
