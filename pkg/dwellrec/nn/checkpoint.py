"""
Named-parameter checkpoint files.

Layout (little-endian):

- magic ``NRCK``, u32 version, u32 parameter count
- per parameter: u16 name length, UTF-8 name, u32 rank, u32 per dim,
  then the values as 64-bit floats in row-major order

Parameters are written in registration order, so saving the same ParamSet
twice produces identical bytes.
"""

import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from dwellrec.core.exceptions import DataFormatError
from dwellrec.nn.params import ParamSet

MAGIC = b"NRCK"
VERSION = 1


def save_checkpoint(params: ParamSet, path: Union[str, Path]) -> Path:
    """Write every parameter value to path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for param in params:
        name = param.name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", param.value.ndim))
        chunks.append(struct.pack(f"<{param.value.ndim}I", *param.value.shape))
        chunks.append(np.ascontiguousarray(param.value, dtype="<f8").tobytes())
    path.write_bytes(b"".join(chunks))
    return path


class _Reader:
    def __init__(self, data: bytes, source: str) -> None:
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise DataFormatError("checkpoint is truncated", path=self.source)
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """
    Read a checkpoint into an ordered name → array mapping.

    Raises:
        DataFormatError: Missing file, bad magic, unsupported version,
            truncated or trailing data
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError("checkpoint not found", path=str(path))
    reader = _Reader(path.read_bytes(), str(path))

    if reader.take(4) != MAGIC:
        raise DataFormatError("not a checkpoint file (bad magic)", path=str(path))
    version, count = reader.unpack("<II")
    if version != VERSION:
        raise DataFormatError(f"unsupported checkpoint version {version}", path=str(path))

    state: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (rank,) = reader.unpack("<I")
        shape = reader.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(reader.take(8 * size), dtype="<f8").astype(np.float64)
        state[name] = values.reshape(shape)

    if reader.offset != len(reader.data):
        raise DataFormatError("trailing bytes after the last parameter", path=str(path))
    return state


def load_into(params: ParamSet, path: Union[str, Path]) -> ParamSet:
    """Load a checkpoint into an existing ParamSet, checking names and shapes."""
    params.load_state(load_checkpoint(path), source=str(path))
    return params
