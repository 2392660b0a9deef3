from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from errors import CubeFormatError, DataError
from tensornet.adam import AdamState
from tensornet.architectures import ArchConfig, build_network
from tensornet.network import Network

MAGIC = b"HSNN"
VERSION = 1
_HEADER = struct.Struct("<4sII")
_FLOAT = np.dtype("<f8")


def _blob(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=_FLOAT).tobytes()


def encode_checkpoint(net: Network, adam: AdamState | None = None) -> bytes:
    """Header, JSON metadata, then f64 LE blobs: parameters, BN stats, Adam m and v."""
    if net.arch is None:
        raise DataError("only networks built from an ArchConfig can be checkpointed")
    params = net.parameters()
    batchnorm = net.batchnorm_layers()
    has_stats = [layer.running_mean is not None for _, layer in batchnorm]
    has_adam = adam is not None and bool(adam.m)
    meta = {
        "arch": net.arch.to_dict(),
        "params": [[name, list(value.shape)] for name, value in params.items()],
        "batchnorm": [[prefix, layer.channels, stats] for (prefix, layer), stats in zip(batchnorm, has_stats)],
        "adam_t": adam.t if adam is not None else 0,
        "has_adam": has_adam,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts = [_HEADER.pack(MAGIC, VERSION, len(meta_bytes)), meta_bytes]
    parts += [_blob(value) for value in params.values()]
    for (_, layer), stats in zip(batchnorm, has_stats):
        if stats:
            parts += [_blob(layer.running_mean), _blob(layer.running_var)]
    if has_adam:
        parts += [_blob(adam.m[name]) for name in params]
        parts += [_blob(adam.v[name]) for name in params]
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes, offset: int, source: str) -> None:
        self.blob = blob
        self.offset = offset
        self.source = source

    def take(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        end = self.offset + count * _FLOAT.itemsize
        if end > len(self.blob):
            raise CubeFormatError(f"checkpoint {self.source} is truncated")
        array = np.frombuffer(self.blob, dtype=_FLOAT, count=count, offset=self.offset)
        self.offset = end
        return array.astype(np.float64).reshape(shape)


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> tuple[Network, AdamState]:
    if len(blob) < _HEADER.size:
        raise CubeFormatError(f"checkpoint {source} is shorter than its header")
    magic, version, meta_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CubeFormatError(f"{source} is not a network checkpoint")
    if version != VERSION:
        raise CubeFormatError(f"unsupported checkpoint version {version} in {source}")
    try:
        meta = json.loads(blob[_HEADER.size : _HEADER.size + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CubeFormatError(f"checkpoint {source} has unreadable metadata: {exc}") from exc

    net = build_network(ArchConfig.from_dict(meta["arch"]))
    params = net.parameters()
    expected = [[name, list(value.shape)] for name, value in params.items()]
    if expected != meta["params"]:
        raise CubeFormatError(f"checkpoint {source} does not match its architecture")

    reader = _Reader(blob, _HEADER.size + meta_len, source)
    for name, value in params.items():
        value[...] = reader.take(value.shape)
    for (_, layer), (_, channels, stats) in zip(net.batchnorm_layers(), meta["batchnorm"]):
        if stats:
            layer.running_mean = reader.take((channels,))
            layer.running_var = reader.take((channels,))
    adam = AdamState(t=int(meta["adam_t"]))
    if meta["has_adam"]:
        adam.m = {name: reader.take(value.shape) for name, value in params.items()}
        adam.v = {name: reader.take(value.shape) for name, value in params.items()}
    if reader.offset != len(blob):
        raise CubeFormatError(f"checkpoint {source} has {len(blob) - reader.offset} trailing bytes")
    return net, adam


def save_checkpoint(net: Network, destination: str | Path, adam: AdamState | None = None) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(net, adam))
    return path


def load_checkpoint(source: str | Path) -> tuple[Network, AdamState]:
    path = Path(source)
    return decode_checkpoint(path.read_bytes(), str(path))
