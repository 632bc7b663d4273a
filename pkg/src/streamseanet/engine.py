"""Offline (whole-sequence) execution of bound graphs."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ShapeError
from .graph import GRAPH_INPUT, DiscriminatorOutput, LayerSpec
from .ops import ACTIVATIONS, causal_conv, causal_transposed_conv, layer_norm
from . import kernels
from .weights import BoundGraph, LayerParams


def apply_layer(layer: LayerSpec, lp: LayerParams, x: np.ndarray, outs: dict,
                conv: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Shared per-layer body; ``conv`` supplies the offline or streaming convolution."""
    if layer.pre_activation:
        x = ACTIVATIONS[layer.pre_activation](x)
    y = conv(x)
    if layer.norm == "layer_norm":
        y = layer_norm(y, lp.norm_gain, lp.norm_bias)
    if layer.activation:
        y = ACTIVATIONS[layer.activation](y)
    if layer.residual is not None:
        y = y + outs[layer.residual]
    if layer.skip is not None:
        y = y + outs[layer.skip]
    return y


def _offline_conv(layer: LayerSpec, lp: LayerParams, x: np.ndarray) -> np.ndarray:
    p = lp.conv
    if layer.kind == "tconv":
        return causal_transposed_conv(x, p)
    if layer.causal:
        return causal_conv(x, p)
    # centred ("same") padding, offline only
    n_out = -(-x.shape[1] // p.stride)
    left = p.history // 2
    total = p.history + n_out * p.stride
    xp = np.zeros((x.shape[0], total), dtype=x.dtype)
    xp[:, left:left + x.shape[1]] = x[:, :total - left]
    return kernels.conv1d(xp, p.weight, p.weight_t, p.bias, p.stride, p.dilation, p.groups, n_out)


def run_graph(bound: BoundGraph, x: np.ndarray) -> dict[str, np.ndarray]:
    """Execute every layer on the full input ``[channels, time]``; returns all layer outputs."""
    graph = bound.graph
    x = np.asarray(x, dtype=bound.dtype)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] != graph.in_channels:
        raise ShapeError(f"{graph.name} expects {graph.in_channels} input channels, got {x.shape[0]}")
    outs = {GRAPH_INPUT: np.ascontiguousarray(x)}
    for layer in graph.layers:
        lp = bound.params[layer.name]
        outs[layer.name] = apply_layer(layer, lp, outs[layer.source], outs,
                                       lambda v, layer=layer, lp=lp: _offline_conv(layer, lp, v))
    return outs


def generate(bound: BoundGraph, samples: np.ndarray) -> np.ndarray:
    """Offline generator pass on a 1-D signal whose length is a multiple of the stride product."""
    samples = np.asarray(samples)
    if samples.ndim != 1:
        raise ShapeError("generator input must be a 1-D signal")
    if samples.shape[0] % bound.graph.stride_product:
        raise ShapeError(
            f"input length {samples.shape[0]} is not a multiple of {bound.graph.stride_product}")
    outs = run_graph(bound, samples)
    return outs[bound.graph.outputs[0]][0]


def discriminate(bound: BoundGraph, samples: np.ndarray) -> DiscriminatorOutput:
    """Run the multi-scale discriminator on a 1-D signal."""
    outs = run_graph(bound, np.asarray(samples)[None, :])
    graph = bound.graph
    return DiscriminatorOutput(
        logits=[outs[name][0] for name in graph.outputs],
        features=[[outs[name] for name in scale] for scale in graph.features],
    )
