"""Binary checkpoints.

Layout (all integers little-endian)::

    magic      8 bytes  b"PCGDCKPT"
    version    u32
    n_players  u32, then n_players x u64 block sizes
    arch       u32 length + UTF-8 text
    seed       i64
    step       i64
    n_arrays   u32, then per array:
        name   u32 length + UTF-8 text
        kind   1 byte: b"f" (float64 values) or b"s" (UTF-8 strings)
        count  u64
        data   count little-endian float64, or count x (u32 length + UTF-8)

The flat parameter vector is stored as the array named ``theta``.  Files are
written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..game import ContractError

MAGIC = b"PCGDCKPT"
VERSION = 1


class CheckpointError(ContractError):
    pass


@dataclass
class Checkpoint:
    dims: tuple[int, ...]
    arch: str
    seed: int
    step: int
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def theta(self) -> np.ndarray:
        return self.arrays["theta"]


def _text(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def encode(ck: Checkpoint) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(ck.dims)))
    buf.write(struct.pack(f"<{len(ck.dims)}Q", *ck.dims))
    _text(buf, ck.arch)
    buf.write(struct.pack("<qq", ck.seed, ck.step))
    buf.write(struct.pack("<I", len(ck.arrays)))
    for name in sorted(ck.arrays):
        arr = np.asarray(ck.arrays[name])
        _text(buf, name)
        if arr.dtype.kind in "US":
            buf.write(b"s")
            buf.write(struct.pack("<Q", arr.size))
            for s in arr.ravel():
                _text(buf, str(s))
        else:
            data = np.ascontiguousarray(arr, dtype="<f8").ravel()
            buf.write(b"f")
            buf.write(struct.pack("<Q", data.size))
            buf.write(data.tobytes())
    return buf.getvalue()


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise CheckpointError("truncated checkpoint")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (n,) = self.unpack("<I")
        return self.take(n).decode("utf-8")


def decode(raw: bytes) -> Checkpoint:
    r = _Reader(raw)
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, n = r.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    dims = tuple(int(d) for d in r.unpack(f"<{n}Q"))
    arch = r.text()
    seed, step = r.unpack("<qq")
    (count,) = r.unpack("<I")
    arrays = {}
    for _ in range(count):
        name = r.text()
        kind = r.take(1)
        (size,) = r.unpack("<Q")
        if kind == b"f":
            arrays[name] = np.frombuffer(r.take(8 * size), dtype="<f8").astype(np.float64)
        elif kind == b"s":
            arrays[name] = np.array([r.text() for _ in range(size)], dtype=str)
        else:
            raise CheckpointError(f"unknown array kind {kind!r} for {name!r}")
    if r.pos != len(raw):
        raise CheckpointError("trailing bytes after checkpoint")
    ck = Checkpoint(dims, arch, int(seed), int(step), arrays)
    if "theta" in arrays and arrays["theta"].size != sum(dims):
        raise CheckpointError(f"theta has {arrays['theta'].size} values, partition needs {sum(dims)}")
    return ck


def save_checkpoint(path, ck: Checkpoint) -> Path:
    """Write ``ck`` atomically: a reader sees either the old file or the new one."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(encode(ck))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    return decode(path.read_bytes())
