"""Named weight tensors: deterministic initialization, SNWT files, binding to a graph.

SNWT layout (little-endian, no padding)::

    b"SNWT" | u32 version=1 | u32 entry_count
    per entry: u16 name_len | name (UTF-8) | u8 rank | u32 dims[rank] | f32 values[prod(dims)]
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import FormatError, ShapeError
from .graph import GraphSpec, LayerSpec
from .ops import ConvParams, avg_pool_params

MAGIC = b"SNWT"
VERSION = 1


@dataclass
class WeightStore:
    entries: dict[str, np.ndarray]
    seed: Optional[int] = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> list[str]:
        return sorted(self.entries)

    def with_prefix(self, prefix: str) -> "WeightStore":
        return WeightStore({prefix + k: v for k, v in self.entries.items()}, self.seed)

    def subset(self, prefix: str) -> "WeightStore":
        """Entries starting with ``prefix``, with the prefix stripped."""
        return WeightStore({k[len(prefix):]: v for k, v in self.entries.items() if k.startswith(prefix)},
                           self.seed)

    def merged(self, other: "WeightStore") -> "WeightStore":
        return WeightStore({**self.entries, **other.entries}, self.seed)

    def equals(self, other: "WeightStore") -> bool:
        """Bit-level equality of every entry."""
        if self.names() != other.names():
            return False
        return all(self.entries[k].shape == other.entries[k].shape
                   and self.entries[k].tobytes() == other.entries[k].tobytes() for k in self.entries)


def _rng(seed: int, name: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def fan_in(layer: LayerSpec) -> int:
    """Number of input terms summed into one output step."""
    if layer.kind == "tconv":
        return layer.in_channels * layer.kernel_size // layer.stride
    return layer.in_channels // layer.groups * layer.kernel_size


def init_std(layer: LayerSpec) -> float:
    return 1.0 / np.sqrt(fan_in(layer))


def init_weights(graph: GraphSpec, seed: int = 0) -> WeightStore:
    """Uniform fan-in scaled kernels (std ``1/sqrt(fan_in)``), zero biases, unit norm gains.

    Each tensor draws from a Philox stream keyed by ``(seed, tensor name)``.
    """
    entries: dict[str, np.ndarray] = {}
    for layer in graph.layers:
        for name, shape in layer.parameter_shapes().items():
            if name.endswith(".weight"):
                bound = np.sqrt(3.0) * init_std(layer)
                values = _rng(seed, name).uniform(-bound, bound, size=shape)
            elif name.endswith(".norm_gain"):
                values = np.ones(shape)
            else:
                values = np.zeros(shape)
            entries[name] = values.astype(np.float32)
    return WeightStore(entries, seed)


def save_weights(ws: WeightStore, path: Union[str, Path]) -> None:
    parts = [MAGIC, struct.pack("<II", VERSION, len(ws))]
    for name in ws.names():
        arr = np.asarray(ws[name], dtype="<f4")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weights(path: Union[str, Path]) -> WeightStore:
    data = Path(path).read_bytes()
    view = memoryview(data)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"{path}: truncated at byte {pos}")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise FormatError(f"{path}: bad magic, not an SNWT file")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported SNWT version {version}")
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        try:
            name = bytes(take(name_len)).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: entry name is not UTF-8") from exc
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(dims, dtype=np.int64))
        entries[name] = np.frombuffer(take(4 * n), dtype="<f4").reshape(dims).astype(np.float32)
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    return WeightStore(entries)


@dataclass
class LayerParams:
    conv: Optional[ConvParams] = None
    norm_gain: Optional[np.ndarray] = None
    norm_bias: Optional[np.ndarray] = None


@dataclass
class BoundGraph:
    """A graph with concrete parameter arrays in one floating dtype."""

    graph: GraphSpec
    params: dict[str, LayerParams] = field(default_factory=dict)
    dtype: type = np.float32


def bind(graph: GraphSpec, ws: WeightStore, dtype=np.float32) -> BoundGraph:
    """Attach weights to ``graph``; raises ShapeError on missing or mis-shaped entries."""
    expected = graph.parameter_shapes()
    for name, shape in expected.items():
        if name not in ws:
            raise ShapeError(f"weights lack entry {name!r} required by {graph.name}")
        if tuple(ws[name].shape) != tuple(shape):
            raise ShapeError(f"{name}: stored shape {tuple(ws[name].shape)} != expected {tuple(shape)}")
    params: dict[str, LayerParams] = {}
    for layer in graph.layers:
        lp = LayerParams()
        if layer.has_weights:
            lp.conv = ConvParams(ws[f"{layer.name}.weight"], ws[f"{layer.name}.bias"], layer.stride,
                                 layer.dilation, layer.groups, layer.kind == "tconv").astype(dtype)
        elif layer.kind == "pool":
            lp.conv = avg_pool_params(layer.in_channels, dtype)
        if layer.norm == "layer_norm":
            lp.norm_gain = np.asarray(ws[f"{layer.name}.norm_gain"], dtype=dtype)
            lp.norm_bias = np.asarray(ws[f"{layer.name}.norm_bias"], dtype=dtype)
        params[layer.name] = lp
    return BoundGraph(graph, params, dtype)
