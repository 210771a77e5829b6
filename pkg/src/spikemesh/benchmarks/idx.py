"""IDX tensor files (the MNIST container format), gzip-transparent.

An IDX file is big-endian throughout:

    byte 0..1   zero
    byte 2      element type code
    byte 3      number of dimensions N
    4 + 4*i     dimension i size (u32 big-endian)
    then        row-major payload

Files whose name ends in ``.gz`` are decompressed on the fly; ``load_idx``
also accepts an uncompressed path.
"""
from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

_TYPE_CODES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_CODE_FOR_KIND = {v.str.lstrip(">|"): k for k, v in _TYPE_CODES.items()}


class IdxError(ValueError):
    pass


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def load_idx(path) -> np.ndarray:
    """Load one IDX tensor; returns a native-endian array."""
    data = _read_bytes(path)
    if len(data) < 4:
        raise IdxError(f"{path}: truncated header")
    zero, code, ndim = struct.unpack_from(">HBB", data, 0)
    if zero != 0:
        raise IdxError(f"{path}: bad magic prefix {zero:#06x}")
    dtype = _TYPE_CODES.get(code)
    if dtype is None:
        raise IdxError(f"{path}: unknown element type {code:#04x}")
    if len(data) < 4 + 4 * ndim:
        raise IdxError(f"{path}: truncated dimension list")
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    payload = data[4 + 4 * ndim:]
    expected = count * dtype.itemsize
    if len(payload) != expected:
        raise IdxError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype=dtype, count=count).reshape(dims)
    return arr.astype(dtype.newbyteorder("="))


def save_idx(path, arr: np.ndarray) -> None:
    """Write one IDX tensor (gzipped when the name ends in .gz)."""
    arr = np.asarray(arr)
    kind = arr.dtype.newbyteorder(">").str.lstrip(">|")
    code = _CODE_FOR_KIND.get(kind)
    if code is None:
        raise IdxError(f"dtype {arr.dtype} has no IDX type code")
    out = bytearray()
    out += struct.pack(">HBB", 0, code, arr.ndim)
    for d in arr.shape:
        out += struct.pack(">I", d)
    out += arr.astype(arr.dtype.newbyteorder(">")).tobytes()
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps the container byte-stable for identical tensors
        path.write_bytes(gzip.compress(bytes(out), mtime=0))
    else:
        path.write_bytes(bytes(out))


def load_mnist(data_dir, split: str = "test"):
    """Return (images, labels) for one MNIST split.

    Looks for the canonical file names, compressed or not:
    ``{train|t10k}-images-idx3-ubyte[.gz]`` and the matching labels file.
    """
    prefix = {"train": "train", "test": "t10k", "t10k": "t10k"}.get(split)
    if prefix is None:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    data_dir = Path(data_dir)
    arrays = []
    for stem in (f"{prefix}-images-idx3-ubyte", f"{prefix}-labels-idx1-ubyte"):
        for name in (stem + ".gz", stem):
            p = data_dir / name
            if p.exists():
                arrays.append(load_idx(p))
                break
        else:
            raise FileNotFoundError(f"{data_dir}/{stem}[.gz] not found")
    images, labels = arrays
    if images.ndim != 3 or labels.ndim != 1 or len(images) != len(labels):
        raise IdxError("images/labels shape mismatch")
    return images, labels
