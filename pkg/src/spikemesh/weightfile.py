"""MWB1 binary weight container.

Format (all multi-byte integers little-endian):

    offset  size  field
    0       4     magic "MWB1"
    4       2     version (currently 1)
    6       2     layer_count
    then per layer, in order:
            4     rows (u32)
            4     cols (u32)
            1     encoding: 0 -> weights in {0,1}, 1 -> weights in {-1,+1}
            ceil(rows*cols/8)  payload: bitpacked row-major, LSB-first per byte

For encoding 1 a stored bit b maps to weight 2*b - 1.  The final payload byte
of a layer is zero-padded.  store(load(f)) is byte-identical.
"""
from __future__ import annotations

import hashlib
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"MWB1"
VERSION = 1

ENC_UNSIGNED = 0   # {0, 1}
ENC_SIGNED = 1     # {-1, +1}


class WeightFileError(ValueError):
    pass


@dataclass
class WeightLayer:
    encoding: int
    values: np.ndarray   # int8, shape (rows, cols)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int8)
        if self.values.ndim != 2:
            raise WeightFileError("layer values must be 2-D (rows, cols)")
        domain = {0, 1} if self.encoding == ENC_UNSIGNED else {-1, 1}
        if self.encoding not in (ENC_UNSIGNED, ENC_SIGNED):
            raise WeightFileError(f"unknown encoding {self.encoding}")
        present = set(np.unique(self.values).tolist())
        if not present <= domain:
            raise WeightFileError(
                f"values {sorted(present - domain)} outside encoding-{self.encoding} "
                f"domain {sorted(domain)}"
            )

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def bits(self) -> np.ndarray:
        """Stored bit per weight: {0,1} identity; {-1,+1} -> (w+1)/2."""
        if self.encoding == ENC_UNSIGNED:
            return self.values.astype(np.uint8)
        return ((self.values.astype(np.int16) + 1) // 2).astype(np.uint8)


def save_weightfile(path, layers: list[WeightLayer]) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HH", VERSION, len(layers)))
    for layer in layers:
        buf.write(struct.pack("<IIB", layer.rows, layer.cols, layer.encoding))
        bits = layer.bits().reshape(-1)
        buf.write(np.packbits(bits, bitorder="little").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_weightfile(path) -> list[WeightLayer]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise WeightFileError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 8:
        raise WeightFileError("truncated header")
    version, layer_count = struct.unpack_from("<HH", data, 4)
    if version != VERSION:
        raise WeightFileError(f"unsupported version {version}")
    pos = 8
    layers = []
    for i in range(layer_count):
        if pos + 9 > len(data):
            raise WeightFileError(f"truncated layer {i} header")
        rows, cols, encoding = struct.unpack_from("<IIB", data, pos)
        pos += 9
        nbytes = (rows * cols + 7) // 8
        if pos + nbytes > len(data):
            raise WeightFileError(f"truncated layer {i} payload")
        packed = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=pos)
        pos += nbytes
        bits = np.unpackbits(packed, bitorder="little", count=rows * cols)
        bits = bits.reshape(rows, cols)
        if encoding == ENC_UNSIGNED:
            values = bits.astype(np.int8)
        elif encoding == ENC_SIGNED:
            values = (bits.astype(np.int8) * 2) - 1
        else:
            raise WeightFileError(f"unknown encoding {encoding} in layer {i}")
        layers.append(WeightLayer(encoding=encoding, values=values))
    if pos != len(data):
        raise WeightFileError(f"{len(data) - pos} trailing bytes after last layer")
    return layers


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
