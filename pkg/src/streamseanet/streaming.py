"""Chunked streaming execution with per-layer rolling state, and latency profiling."""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .audio import AudioBuffer, Chunk
from .engine import apply_layer
from .errors import ChunkSizeError, UnsupportedGraphError
from .graph import GRAPH_INPUT, GraphSpec
from .ops import conv_step, transposed_conv_step
from .weights import BoundGraph, WeightStore, bind
from . import kernels

REFERENCE_DEVICE_COMPUTE_MS = 1.5


class StreamState:
    """Rolling buffers for one stream.

    Causal conv and pooling layers keep the last ``(kernel_size - 1) * dilation``
    steps of their (activated) input; transposed convs keep the
    ``[out_channels, stride]`` overlap-add carry. Buffers are allocated once
    and never grow.
    """

    def __init__(self, buffers: dict[str, np.ndarray]):
        self.buffers = buffers
        self.chunks_processed = 0

    @property
    def nbytes(self) -> int:
        return sum(b.nbytes for b in self.buffers.values())

    def reset(self) -> "StreamState":
        for b in self.buffers.values():
            b.fill(0)
        self.chunks_processed = 0
        return self

    def copy(self) -> "StreamState":
        s = StreamState({k: v.copy() for k, v in self.buffers.items()})
        s.chunks_processed = self.chunks_processed
        return s


def reset(state: StreamState) -> StreamState:
    return state.reset()


@dataclass
class LatencyReport:
    chunk_samples: int
    stride_product: int
    sample_rate_hz: int
    architectural_latency_ms: float
    per_chunk_compute_ms: Optional[float] = None
    real_time_factor: Optional[float] = None
    total_latency_ms: Optional[float] = None
    chunks_measured: int = 0
    warmup_chunks: int = 0
    backend: str = ""
    reference_device_compute_ms: float = REFERENCE_DEVICE_COMPUTE_MS

    def as_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.as_dict().items())

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


class StreamExecutor:
    """Immutable chunked executor for a single-input, single-output causal graph.

    The base chunk is the coarsest temporal resolution in the graph (the
    product of the down-sampling strides); callers may feed any positive
    multiple of it.
    """

    def __init__(self, bound: BoundGraph, sample_rate_hz: int = 16000):
        graph = bound.graph
        if len(graph.outputs) != 1:
            raise UnsupportedGraphError(f"{graph.name}: streaming needs exactly one output")
        res = graph.resolutions()
        for layer in graph.layers:
            if not layer.causal:
                raise UnsupportedGraphError(f"{graph.name}/{layer.name}: non-causal layer")
            if layer.kind not in ("conv", "tconv", "pool"):
                raise UnsupportedGraphError(f"{graph.name}/{layer.name}: unsupported op {layer.kind!r}")
            if res[layer.name].denominator != 1:
                raise UnsupportedGraphError(f"{graph.name}/{layer.name}: finer than the input rate")
        if res[graph.outputs[0]] != 1:
            raise UnsupportedGraphError(f"{graph.name}: output is not at the input rate")
        self.bound = bound
        self.graph = graph
        self.sample_rate_hz = int(sample_rate_hz)
        self.chunk_samples = math.lcm(*(int(r) for r in res.values()))
        self._res = {k: int(v) for k, v in res.items()}

    @property
    def stride_product(self) -> int:
        return self.chunk_samples

    @property
    def architectural_latency_ms(self) -> float:
        return 1000.0 * self.chunk_samples / self.sample_rate_hz

    def latency_report(self) -> LatencyReport:
        """Architectural part of the report; compute fields are filled by :func:`probe_latency`."""
        return LatencyReport(self.chunk_samples, self.stride_product, self.sample_rate_hz,
                             self.architectural_latency_ms)

    def new_state(self) -> StreamState:
        buffers = {}
        dtype = self.bound.dtype
        for layer in self.graph.layers:
            p = self.bound.params[layer.name].conv
            if layer.kind == "tconv":
                buffers[layer.name] = np.zeros((p.out_channels, p.stride), dtype=dtype)
            elif p.history:
                buffers[layer.name] = np.zeros((p.in_channels, p.history), dtype=dtype)
        return StreamState(buffers)

    def _conv(self, name: str, kind: str, p, state: StreamState, x: np.ndarray) -> np.ndarray:
        buf = state.buffers.get(name)
        if kind == "tconv":
            y, state.buffers[name] = transposed_conv_step(x, p, buf)
        elif buf is None:
            y, _ = conv_step(x, p, np.zeros((p.in_channels, 0), dtype=x.dtype))
        else:
            y, state.buffers[name] = conv_step(x, p, buf)
        return y

    def process(self, state: StreamState, samples: np.ndarray) -> np.ndarray:
        """Feed one chunk (a multiple of the base chunk); returns the same number of output samples."""
        samples = np.asarray(samples, dtype=self.bound.dtype)
        n = samples.shape[-1]
        if samples.ndim != 1 or n == 0 or n % self.chunk_samples:
            raise ChunkSizeError(
                f"chunk of {samples.shape} samples; need a positive multiple of {self.chunk_samples}")
        outs = {GRAPH_INPUT: samples[None, :]}
        for layer in self.graph.layers:
            lp = self.bound.params[layer.name]
            outs[layer.name] = apply_layer(
                layer, lp, outs[layer.source], outs,
                lambda v, layer=layer, lp=lp: self._conv(layer.name, layer.kind, lp.conv, state, v))
        state.chunks_processed += 1
        return outs[self.graph.outputs[0]][0]

    def process_chunk(self, state: StreamState, chunk: Chunk) -> Chunk:
        return Chunk(self.process(state, chunk.samples), chunk.index)

    def run(self, samples: np.ndarray, chunk_size: Optional[int] = None,
            state: Optional[StreamState] = None) -> np.ndarray:
        """Stream a whole signal through fresh (or given) state, ``chunk_size`` samples at a time."""
        chunk_size = chunk_size or self.chunk_samples
        samples = np.asarray(samples, dtype=self.bound.dtype)
        if samples.shape[0] % chunk_size:
            raise ChunkSizeError(f"signal length {samples.shape[0]} is not a multiple of {chunk_size}")
        state = state or self.new_state()
        pieces = [self.process(state, samples[i:i + chunk_size])
                  for i in range(0, samples.shape[0], chunk_size)]
        return np.concatenate(pieces) if pieces else np.zeros(0, dtype=self.bound.dtype)


def build_stream(graph: GraphSpec, weights: WeightStore | BoundGraph, sample_rate_hz: int = 16000,
                 dtype=np.float32) -> StreamExecutor:
    """Bind ``weights`` to ``graph`` and wrap it in a streaming executor."""
    bound = weights if isinstance(weights, BoundGraph) else bind(graph.validate(), weights, dtype)
    return StreamExecutor(bound, sample_rate_hz)


def probe_latency(executor: StreamExecutor, n_chunks: int = 1000, warmup: int = 50,
                  seed: int = 0) -> LatencyReport:
    """Median wall-clock compute per base chunk on a single thread, after warm-up."""
    from threadpoolctl import threadpool_limits

    rng = np.random.default_rng(seed)
    size = executor.chunk_samples
    data = (0.1 * rng.standard_normal((warmup + n_chunks, size))).astype(executor.bound.dtype)
    state = executor.new_state()
    timings = []
    with threadpool_limits(limits=1):
        for i in range(warmup + n_chunks):
            t0 = time.perf_counter()
            executor.process(state, data[i])
            dt = time.perf_counter() - t0
            if i >= warmup:
                timings.append(dt)
    report = executor.latency_report()
    report.per_chunk_compute_ms = 1000.0 * statistics.median(timings)
    report.real_time_factor = report.per_chunk_compute_ms / report.architectural_latency_ms
    report.total_latency_ms = report.architectural_latency_ms + report.per_chunk_compute_ms
    report.chunks_measured = n_chunks
    report.warmup_chunks = warmup
    report.backend = kernels.BACKEND
    return report


def stream_audio(executor: StreamExecutor, buf: AudioBuffer, chunk_size: Optional[int] = None) -> AudioBuffer:
    return AudioBuffer(executor.run(buf.samples, chunk_size), buf.sample_rate_hz)
