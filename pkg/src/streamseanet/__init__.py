"""Streaming inference runtime for causal 1-D convolutional U-Nets."""

from .audio import AudioBuffer, Chunk, iter_chunks, wav_read, wav_write
from .engine import discriminate, generate, run_graph
from .graph import (DiscriminatorOutput, GraphSpec, LayerSpec, build_discriminator,
                    build_generator, parameter_counts)
from .kernels import available_backends, use_backend
from .streaming import LatencyReport, StreamExecutor, StreamState, build_stream, probe_latency
from .weights import WeightStore, bind, init_weights, load_weights, save_weights

__version__ = "0.1.0"
