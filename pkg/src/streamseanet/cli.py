"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 shape/config error,
4 tolerance failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import kernels
from .audio import AudioBuffer, wav_read, wav_write
from .dsp import BANDS, BandSampler, BandSpec, bandpass, save_spectrogram_csv, stft_mag
from .engine import discriminate, generate
from .errors import ConfigError, DomainError, FormatError, ShapeError
from .graph import GraphSpec, build_discriminator, build_generator, parameter_counts
from .losses import LossConfig, si_sdr, total_generator_loss
from .streaming import build_stream, probe_latency
from .weights import WeightStore, bind, init_weights, load_weights, save_weights

log = logging.getLogger("streamseanet")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SHAPE, EXIT_TOLERANCE = 0, 1, 2, 3, 4
GEN_PREFIX = "generator."
DISC_PREFIX = "discriminator."


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    seed: int = 0
    base_channels: Optional[int] = None
    strides: Optional[list[int]] = None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    options: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def write_beside(self, path: str | Path) -> None:
        Path(f"{path}.manifest.json").write_text(self.to_json() + "\n")


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _generator_from_store(store: WeightStore) -> tuple[GraphSpec, WeightStore]:
    gen = store.subset(GEN_PREFIX)
    key = "input_conv.weight"
    if key not in gen:
        raise ShapeError("weight file holds no generator entries")
    graph = build_generator(int(gen[key].shape[0]))
    bind(graph, gen)  # shape check
    return graph, gen


def _trim(buf: AudioBuffer, multiple: int) -> AudioBuffer:
    n = len(buf) - len(buf) % multiple
    if n != len(buf):
        log.warning("input length %d is not a multiple of %d; trimming to %d samples", len(buf), multiple, n)
        buf = buf.replace(buf.samples[:n])
    if n == 0:
        raise ShapeError(f"input is shorter than one {multiple}-sample chunk")
    return buf


def cmd_gen_weights(args) -> int:
    graph = build_generator(args.base_channels)
    store = init_weights(graph, args.seed).with_prefix(GEN_PREFIX)
    if not args.no_discriminator:
        store = store.merged(init_weights(build_discriminator(), args.seed).with_prefix(DISC_PREFIX))
    save_weights(store, args.out)
    counts = parameter_counts(graph)
    wider = parameter_counts(build_generator(4 * args.base_channels))
    manifest = RunManifest("gen-weights", args.seed, args.base_channels, list(graph.strides),
                           outputs=[str(args.out)],
                           options={"discriminator": not args.no_discriminator})
    manifest.write_beside(args.out)
    _emit({"entries": len(store), "parameters": counts,
           "internal_weights_at_4x_width": wider["internal_weights"],
           "internal_weight_ratio": counts["internal_weights"] / wider["internal_weights"],
           "manifest": asdict(manifest)})
    return EXIT_OK


def _stream_run(graph, gen, samples, chunk):
    ex = build_stream(graph, gen)
    if chunk % ex.chunk_samples:
        raise ShapeError(f"--chunk {chunk} is not a multiple of the base chunk {ex.chunk_samples}")
    state = ex.new_state()
    pieces, times = [], []
    for i in range(0, samples.shape[0], chunk):
        t0 = time.perf_counter()
        pieces.append(ex.process(state, samples[i:i + chunk]))
        times.append(1000.0 * (time.perf_counter() - t0))
    return np.concatenate(pieces), times


def cmd_run(args) -> int:
    graph, gen = _generator_from_store(load_weights(args.weights))
    buf = _trim(wav_read(args.input), graph.stride_product)
    if args.mode == "offline":
        y = generate(bind(graph, gen), buf.samples)
        stats = {}
    else:
        y, times = _stream_run(graph, gen, buf.samples, args.chunk)
        stats = {"chunks": len(times), "chunk_ms_median": float(np.median(times)),
                 "chunk_ms_max": float(np.max(times))}
    wav_write(buf.replace(y), args.out)
    manifest = RunManifest("run", args.seed, graph.base_channels, list(graph.strides),
                           [str(args.input), str(args.weights)], [str(args.out)],
                           {"mode": args.mode, "chunk": args.chunk})
    manifest.write_beside(args.out)
    _emit({"samples": int(y.shape[0]), "sample_rate_hz": buf.sample_rate_hz,
           "timing": stats, "manifest": asdict(manifest)})
    return EXIT_OK


def cmd_compare(args) -> int:
    graph, gen = _generator_from_store(load_weights(args.weights))
    buf = _trim(wav_read(args.input), graph.stride_product)
    n = len(buf)
    offline = generate(bind(graph, gen), buf.samples)
    results = {}
    for chunk in args.chunks:
        usable = n - n % chunk
        if usable == 0:
            raise ShapeError(f"input shorter than chunk {chunk}")
        y, _ = _stream_run(graph, gen, buf.samples[:usable], chunk)
        results[str(chunk)] = float(np.max(np.abs(y - offline[:usable])))
    ok = all(v <= args.tol for v in results.values())
    manifest = RunManifest("compare", args.seed, graph.base_channels, list(graph.strides),
                           [str(args.input), str(args.weights)],
                           options={"chunks": args.chunks, "tol": args.tol})
    _emit({"max_abs_deviation": results, "tolerance": args.tol, "pass": ok,
           "manifest": asdict(manifest)})
    return EXIT_OK if ok else EXIT_TOLERANCE


def _pin_single_core() -> None:
    if hasattr(os, "sched_setaffinity"):
        cpus = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, {cpus[0]})


def cmd_latency(args) -> int:
    graph, gen = _generator_from_store(load_weights(args.weights))
    ex = build_stream(graph, gen, sample_rate_hz=args.sample_rate)
    _pin_single_core()
    report = probe_latency(ex, n_chunks=args.chunks, warmup=args.warmup, seed=args.seed)
    if args.format == "text":
        print(report.to_text())
    else:
        manifest = RunManifest("latency", args.seed, graph.base_channels, list(graph.strides),
                               [str(args.weights)], options={"chunks": args.chunks, "warmup": args.warmup,
                                                             "sample_rate": args.sample_rate})
        _emit({"latency": report.as_dict(), "manifest": asdict(manifest)})
    return EXIT_OK if report.real_time_factor < 1.0 else EXIT_TOLERANCE


def cmd_bandpass(args) -> int:
    buf = wav_read(args.input)
    if args.band:
        band = BANDS[args.band]
    elif args.low is not None and args.high is not None:
        band = BandSpec(args.low, args.high)
    elif args.sample_seed is not None:
        band = BandSampler(args.sample_seed).draw()
    else:
        raise UsageError("give --band, --low/--high or --sample-seed")
    y = bandpass(buf, band)
    wav_write(y, args.out)
    manifest = RunManifest("bandpass", args.sample_seed or 0, inputs=[str(args.input)],
                           outputs=[str(args.out)], options={"band": asdict(band), "preset": args.band})
    manifest.write_beside(args.out)
    _emit({"band": asdict(band), "manifest": asdict(manifest)})
    return EXIT_OK


def cmd_metrics(args) -> int:
    est, ref = wav_read(args.estimate), wav_read(args.reference)
    value = si_sdr(est, ref)
    manifest = RunManifest("metrics", inputs=[str(args.estimate), str(args.reference)])
    _emit({"si_sdr_db": round(value, 1), "manifest": asdict(manifest)})
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    mag = stft_mag(wav_read(args.input))
    save_spectrogram_csv(mag, args.out)
    manifest = RunManifest("spectrogram", inputs=[str(args.input)], outputs=[str(args.out)],
                           options={"window": 512, "hop": 128})
    manifest.write_beside(args.out)
    _emit({"frames": mag.shape[0], "bins": mag.shape[1], "manifest": asdict(manifest)})
    return EXIT_OK


def cmd_losses(args) -> int:
    store = load_weights(args.weights).subset(DISC_PREFIX)
    if not len(store):
        raise ShapeError("weight file holds no discriminator entries")
    disc = bind(build_discriminator(), store)
    ref, est = wav_read(args.reference), wav_read(args.estimate)
    if len(ref) != len(est):
        raise ShapeError(f"reference has {len(ref)} samples, estimate {len(est)}")
    cfg = LossConfig(rec_weight=args.rec_weight)
    breakdown = total_generator_loss(discriminate(disc, ref.samples), discriminate(disc, est.samples), cfg)
    manifest = RunManifest("losses", inputs=[str(args.reference), str(args.estimate), str(args.weights)],
                           options={"rec_weight": args.rec_weight})
    _emit({"losses": breakdown.as_dict(), "manifest": asdict(manifest)})
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _chunk_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values or min(values) <= 0:
        raise argparse.ArgumentTypeError("chunk sizes must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamseanet", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0, help="seed for all randomized behaviour")
    parser.add_argument("--backend", choices=kernels.BACKENDS, help="kernel backend override")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-weights", help="write deterministic generator + discriminator weights")
    p.add_argument("--base-channels", type=int, default=8)
    p.add_argument("--no-discriminator", action="store_true", help="generator entries only")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_weights)

    p = sub.add_parser("run", help="enhance a WAV file offline or in streaming mode")
    p.add_argument("input")
    p.add_argument("--weights", required=True)
    p.add_argument("--mode", choices=("offline", "stream"), default="stream")
    p.add_argument("--chunk", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="max-abs deviation between offline and streaming output")
    p.add_argument("input")
    p.add_argument("--weights", required=True)
    p.add_argument("--chunks", type=_chunk_list, default=[256, 512, 1024])
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("latency", help="architectural latency and per-chunk compute time")
    p.add_argument("--weights", required=True)
    p.add_argument("--chunks", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("bandpass", help="band-limit a WAV file")
    p.add_argument("input")
    p.add_argument("--band", choices=sorted(BANDS))
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--sample-seed", type=int, help="draw a variable band from this seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bandpass)

    p = sub.add_parser("metrics", help="SI-SDR of an estimate against a reference")
    p.add_argument("estimate")
    p.add_argument("reference")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("spectrogram", help="write an STFT magnitude CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("losses", help="discriminator losses between reference and estimate")
    p.add_argument("reference")
    p.add_argument("estimate")
    p.add_argument("--weights", required=True)
    p.add_argument("--rec-weight", type=float, default=100.0)
    p.set_defaults(func=cmd_losses)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", force=True)
    try:
        if args.backend:
            kernels.use_backend(args.backend)
        return args.func(args)
    except UsageError as exc:
        print(f"streamseanet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShapeError, ConfigError, DomainError, ImportError) as exc:
        print(f"streamseanet: shape/config error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (OSError, FormatError) as exc:
        print(f"streamseanet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
