import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamseanet import (Chunk, bind, build_discriminator, build_generator, build_stream, generate,
                          init_weights, kernels, probe_latency)
from streamseanet.errors import ChunkSizeError, UnsupportedGraphError
from streamseanet.graph import GRAPH_INPUT, GraphSpec, LayerSpec
from streamseanet.streaming import StreamState, reset
from streamseanet.weights import WeightStore


def _setup(base=4, seed=0, strides=(2, 2, 8, 8), dtype=np.float32):
    g = build_generator(base, strides)
    return g, bind(g, init_weights(g, seed), dtype)


def _signal(n, seed=0, dtype=np.float32):
    return (0.5 * np.random.default_rng(seed).standard_normal(n)).astype(dtype)


def test_chunk_size_is_stride_product():
    g, b = _setup()
    assert build_stream(g, b).chunk_samples == 256
    g2, b2 = _setup(strides=(2, 2))
    assert build_stream(g2, b2).chunk_samples == 4
    single = GraphSpec("toy", (LayerSpec("c", "conv", GRAPH_INPUT, 1, 1, kernel_size=3),), 1, outputs=("c",))
    ex = build_stream(single, init_weights(single, 0))
    assert ex.chunk_samples == 1
    assert ex.architectural_latency_ms == 0.0625


def test_stride_22_chunk_matches_offline_length_law():
    g, b = _setup(strides=(2, 2))
    ex = build_stream(g, b)
    x = _signal(4 * 9)
    np.testing.assert_allclose(ex.run(x, 4), generate(b, x), atol=1e-4, rtol=0)


def test_zero_stream_zero_output():
    g, b = _setup()
    ex = build_stream(g, b)
    state = ex.new_state()
    for i in range(4):
        out = ex.process_chunk(state, Chunk(np.zeros(256), i))
        assert out.index == i and not out.samples.any()


@pytest.mark.parametrize("chunk", [256, 512, 1024])
def test_streaming_matches_offline(backend, chunk):
    g, b = _setup(base=8, seed=3)
    x = _signal(16384, seed=1)
    ex = build_stream(g, b)
    offline = generate(b, x)
    assert np.max(np.abs(ex.run(x, chunk) - offline)) <= 1e-4


def test_mixed_chunk_multiples(backend):
    g, b = _setup(seed=9)
    ex = build_stream(g, b)
    x = _signal(256 * 12, seed=2)
    state = ex.new_state()
    sizes = [256, 768, 512, 256, 1280]
    pieces, pos = [], 0
    for s in sizes:
        pieces.append(ex.process(state, x[pos:pos + s]))
        pos += s
    assert np.max(np.abs(np.concatenate(pieces) - generate(b, x))) <= 1e-4


def test_float64_streaming_is_exact_on_compiled_backend():
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled kernels not built")
    previous = kernels.BACKEND
    kernels.use_backend("cython")
    try:
        for seed in range(3):
            g, b = _setup(base=2, seed=seed, dtype=np.float64)
            x = _signal(2048, seed=seed, dtype=np.float64)
            ex = build_stream(g, b)
            off = generate(b, x)
            for chunk in (256, 512, 2048):
                np.testing.assert_array_equal(ex.run(x, chunk), off)
    finally:
        kernels.use_backend(previous)


def test_float64_streaming_fallback_backend():
    previous = kernels.BACKEND
    kernels.use_backend("python")
    try:
        g, b = _setup(base=2, seed=1, dtype=np.float64)
        x = _signal(2048, seed=1, dtype=np.float64)
        np.testing.assert_allclose(build_stream(g, b).run(x, 256), generate(b, x), rtol=0, atol=1e-12)
    finally:
        kernels.use_backend(previous)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(1, 6))
def test_prefix_property(seed, m):
    g, b = _setup(base=2, seed=seed % 5)
    ex = build_stream(g, b)
    x = _signal(256 * 8, seed=seed)
    x2 = x.copy()
    x2[256 * m:] = _signal(256 * (8 - m), seed=seed + 1)
    y, y2 = ex.run(x), ex.run(x2)
    np.testing.assert_array_equal(y[:256 * m], y2[:256 * m])


def test_reset_and_determinism():
    g, b = _setup(seed=4)
    ex = build_stream(g, b)
    x = _signal(256 * 4, seed=4)
    state = ex.new_state()
    first = ex.run(x, state=state)
    reset(state)
    assert all(not buf.any() for buf in state.buffers.values())
    np.testing.assert_array_equal(ex.run(x, state=state), first)
    fresh = ex.new_state()
    nbytes = fresh.nbytes
    reset(fresh)
    assert fresh.nbytes == nbytes and all(not buf.any() for buf in fresh.buffers.values())


def test_interleaved_streams_do_not_interfere():
    g, b = _setup(seed=6)
    ex = build_stream(g, b)
    xa, xb = _signal(256 * 5, seed=10), _signal(256 * 5, seed=11)
    ya, yb = ex.run(xa), ex.run(xb)
    sa, sb = ex.new_state(), ex.new_state()
    out_a, out_b = [], []
    for i in range(5):
        sl = slice(256 * i, 256 * (i + 1))
        out_b.append(ex.process(sb, xb[sl]))
        out_a.append(ex.process(sa, xa[sl]))
    np.testing.assert_array_equal(np.concatenate(out_a), ya)
    np.testing.assert_array_equal(np.concatenate(out_b), yb)


def test_state_size_constant():
    g, b = _setup()
    ex = build_stream(g, b)
    state = ex.new_state()
    sizes = {name: buf.shape for name, buf in state.buffers.items()}
    initial = state.nbytes
    for i in range(20):
        ex.process(state, _signal(256 * (1 + i % 3), seed=i))
        assert state.nbytes == initial
    assert {name: buf.shape for name, buf in state.buffers.items()} == sizes
    # conv buffers hold exactly (k - 1) * dilation steps; transposed carries hold `stride` steps
    assert sizes["enc0.res2.conv1"] == (4, 18)
    assert sizes["dec3.up"] == (32, 8)
    assert "enc0.res0.conv2" not in sizes  # 1x1 conv needs no history


def test_wrong_chunk_length():
    g, b = _setup()
    ex = build_stream(g, b)
    with pytest.raises(ChunkSizeError):
        ex.process(ex.new_state(), np.zeros(100))
    with pytest.raises(ChunkSizeError):
        ex.process(ex.new_state(), np.zeros(0))


def test_unsupported_graphs():
    d = build_discriminator(width=4, max_channels=16)
    with pytest.raises(UnsupportedGraphError):
        build_stream(d, init_weights(d, 0))
    nc = GraphSpec("nc", (LayerSpec("c", "conv", GRAPH_INPUT, 1, 1, kernel_size=3, causal=False),), 1,
                   outputs=("c",))
    with pytest.raises(UnsupportedGraphError):
        build_stream(nc, init_weights(nc, 0))
    down = GraphSpec("down", (LayerSpec("c", "conv", GRAPH_INPUT, 1, 2, kernel_size=4, stride=2),), 1,
                     outputs=("c",))
    with pytest.raises(UnsupportedGraphError):
        build_stream(down, init_weights(down, 0))


def test_latency_report_arithmetic():
    g, b = _setup(base=8)
    ex = build_stream(g, b)
    report = probe_latency(ex, n_chunks=20, warmup=2)
    assert report.chunk_samples == report.stride_product == 256
    assert report.architectural_latency_ms == 16.0
    assert report.real_time_factor == pytest.approx(report.per_chunk_compute_ms / 16.0)
    assert report.reference_device_compute_ms == 1.5
    text = dict(line.split("=", 1) for line in report.to_text().splitlines())
    assert text["architectural_latency_ms"] == "16.0"
    assert json.loads(report.to_json())["stride_product"] == 256
