"""Compare the compiled and numpy kernel backends.

Times the convolution kernels at layer shapes taken from the base-8
generator for one 256-sample chunk, then the whole streaming step.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--base-channels 8]
"""

import argparse
import json
import time

import numpy as np
from threadpoolctl import threadpool_limits

from streamseanet import build_generator, build_stream, init_weights, kernels
from streamseanet.ops import ConvParams, conv_step, transposed_conv_step


def _median_ms(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return 1000.0 * float(np.median(times))


def kernel_cases(base, rng):
    """(label, thunk) pairs mirroring the per-chunk work of a few generator layers."""
    def conv(cin, cout, k, n, stride=1, dilation=1):
        p = ConvParams(rng.standard_normal((cout, cin, k)).astype(np.float32),
                       np.zeros(cout, np.float32), stride, dilation)
        x = rng.standard_normal((cin, n)).astype(np.float32)
        h = np.zeros((cin, p.history), np.float32)
        return f"conv {cin}->{cout} k{k} d{dilation} s{stride} n{n}", lambda: conv_step(x, p, h)

    def tconv(cin, cout, stride, n):
        p = ConvParams(rng.standard_normal((cout, cin, 2 * stride)).astype(np.float32),
                       np.zeros(cout, np.float32), stride, transposed=True)
        x = rng.standard_normal((cin, n)).astype(np.float32)
        c = np.zeros((cout, stride), np.float32)
        return f"tconv {cin}->{cout} s{stride} n{n}", lambda: transposed_conv_step(x, p, c)

    b = base
    return [
        conv(1, b, 7, 256),
        conv(b, b, 3, 256, dilation=9),
        conv(b, 2 * b, 4, 256, stride=2),
        conv(4 * b, 4 * b, 3, 64, dilation=9),
        conv(8 * b, 16 * b, 16, 32, stride=8),
        conv(16 * b, 16 * b, 3, 4, dilation=9),
        tconv(16 * b, 8 * b, 8, 4),
        tconv(2 * b, b, 2, 128),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--base-channels", type=int, default=8)
    parser.add_argument("--json", action="store_true", help="print results as JSON")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    graph = build_generator(args.base_channels)
    ws = init_weights(graph, 0)
    rows = {}
    with threadpool_limits(limits=1):
        for name in backends:
            kernels.use_backend(name)
            rng = np.random.default_rng(0)
            for label, fn in kernel_cases(args.base_channels, rng):
                rows.setdefault(label, {})[name] = _median_ms(fn, args.repeat)
            ex = build_stream(graph, ws)
            state = ex.new_state()
            chunk = np.random.default_rng(1).uniform(-1, 1, ex.chunk_samples).astype(np.float32)
            rows.setdefault("generator stream step", {})[name] = _median_ms(
                lambda: ex.process(state, chunk), args.repeat)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    header = f"{'case':<34}" + "".join(f"{b + ' ms':>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, res in rows.items():
        line = f"{label:<34}" + "".join(f"{res[b]:>12.4f}" for b in backends)
        if len(backends) == 2:
            line += f"{res['python'] / res['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
