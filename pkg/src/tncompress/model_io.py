"""Binary model container: a UTF-8 key-value manifest plus named float32
tensor payloads.

Layout (all integers little-endian):
    magic b"STNZ" | version u32 | manifest length u64 | manifest bytes |
    tensor count u64 | per tensor: name length u64, name bytes,
    order u64, dims u64 * order, data float32 * prod(dims)

Tensor data is stored first-index-fastest (Fortran order).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptionError, FormatError

MAGIC = b"STNZ"
VERSION = 1


@dataclass
class ModelContainer:
    manifest: dict[str, str] = field(default_factory=dict)
    tensors: dict[str, np.ndarray] = field(default_factory=dict)


def _manifest_bytes(manifest: dict[str, str]) -> bytes:
    lines = []
    for key, value in manifest.items():
        if "\n" in key or "\n" in str(value) or "=" in key:
            raise ValueError(f"manifest entry {key!r} is not encodable")
        lines.append(f"{key} = {value}")
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def _parse_manifest(blob: bytes) -> dict[str, str]:
    manifest = {}
    for line in blob.decode("utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"malformed manifest line {line!r}")
        key, value = line.split("=", 1)
        manifest[key.strip()] = value.strip()
    return manifest


def save_model(path, container: ModelContainer) -> None:
    manifest = _manifest_bytes(container.manifest)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(manifest)))
        fh.write(manifest)
        fh.write(struct.pack("<Q", len(container.tensors)))
        for name, tensor in container.tensors.items():
            blob = name.encode("utf-8")
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            arr = np.asarray(tensor)
            fh.write(struct.pack("<Q", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.astype("<f4").flatten(order="F").tobytes())


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptionError("model file is truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def load_model(path) -> ModelContainer:
    with open(path, "rb") as fh:
        blob = fh.read()
    reader = _Reader(blob)
    if reader.take(4) != MAGIC:
        raise FormatError("bad magic bytes; not a model file")
    version = struct.unpack("<I", reader.take(4))[0]
    if version != VERSION:
        raise FormatError(f"unsupported model version {version}")
    manifest = _parse_manifest(reader.take(reader.u64()))
    tensors = {}
    for _ in range(reader.u64()):
        name = reader.take(reader.u64()).decode("utf-8")
        order = reader.u64()
        dims = struct.unpack(f"<{order}Q", reader.take(8 * order))
        if any(d < 1 for d in dims):
            raise CorruptionError(f"tensor {name!r} has a non-positive dim")
        count = int(np.prod(dims))
        data = np.frombuffer(reader.take(4 * count), dtype="<f4")
        if name in tensors:
            raise CorruptionError(f"duplicate tensor name {name!r}")
        tensors[name] = data.reshape(dims, order="F").copy()
    if reader.pos != len(blob):
        raise CorruptionError("trailing bytes after the last tensor")
    return ModelContainer(manifest, tensors)
