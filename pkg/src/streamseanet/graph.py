"""Declarative graphs for the streaming U-Net generator and the multi-scale discriminator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConfigError

GRAPH_INPUT = "input"

GEN_STRIDES = (2, 2, 8, 8)
GEN_DILATIONS = (1, 3, 9)
RES_KERNEL = 3
BOUNDARY_KERNEL = 7

DISC_SCALES = 3
DISC_WIDTH = 16
DISC_MAX_CHANNELS = 1024
DISC_GROUPED = 4
DISC_FACTOR = 4
DISC_GROUP_SIZE = 4


@dataclass(frozen=True)
class LayerSpec:
    """One node of a causal conv graph.

    The node computes ``post_act(norm(conv(pre_act(source)))) + residual + skip``.
    ``kind`` is ``"conv"``, ``"tconv"`` (transposed, up-sampling) or
    ``"pool"`` (fixed causal average pooling, kernel 4 stride 2).
    """

    name: str
    kind: str
    source: str
    in_channels: int
    out_channels: int
    kernel_size: int = 1
    stride: int = 1
    dilation: int = 1
    groups: int = 1
    pre_activation: Optional[str] = None
    norm: Optional[str] = None
    activation: Optional[str] = None
    residual: Optional[str] = None
    skip: Optional[str] = None
    causal: bool = True

    @property
    def has_weights(self) -> bool:
        return self.kind in ("conv", "tconv")

    def weight_shape(self) -> tuple[int, int, int]:
        return (self.out_channels, self.in_channels // self.groups, self.kernel_size)

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        if self.has_weights:
            shapes[f"{self.name}.weight"] = self.weight_shape()
            shapes[f"{self.name}.bias"] = (self.out_channels,)
        if self.norm == "layer_norm":
            shapes[f"{self.name}.norm_gain"] = (self.out_channels,)
            shapes[f"{self.name}.norm_bias"] = (self.out_channels,)
        return shapes

    def resolution(self, source_resolution: Fraction) -> Fraction:
        """Time-step size relative to the graph input after this layer."""
        if self.kind == "tconv":
            return source_resolution / self.stride
        return source_resolution * self.stride


@dataclass(frozen=True)
class GraphSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    base_channels: int
    strides: tuple[int, ...] = ()
    up_strides: tuple[int, ...] = ()
    outputs: tuple[str, ...] = ()
    features: tuple[tuple[str, ...], ...] = ()
    in_channels: int = 1
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {layer.name: layer for layer in self.layers})

    def layer(self, name: str) -> LayerSpec:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def stride_product(self) -> int:
        return math.prod(self.strides)

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        for layer in self.layers:
            shapes.update(layer.parameter_shapes())
        return shapes

    def channels(self) -> dict[str, int]:
        ch = {GRAPH_INPUT: self.in_channels}
        ch.update({layer.name: layer.out_channels for layer in self.layers})
        return ch

    def resolutions(self) -> dict[str, Fraction]:
        res = {GRAPH_INPUT: Fraction(1)}
        for layer in self.layers:
            res[layer.name] = layer.resolution(res[layer.source])
        return res

    def validate(self) -> "GraphSpec":
        """Check topology, channel and resolution agreement; return self."""
        seen = {GRAPH_INPUT: self.in_channels}
        res = {GRAPH_INPUT: Fraction(1)}
        for layer in self.layers:
            where = f"{self.name}/{layer.name}"
            if layer.name in seen:
                raise ConfigError(f"{where}: duplicate layer name")
            if layer.kind not in ("conv", "tconv", "pool"):
                raise ConfigError(f"{where}: unknown layer kind {layer.kind!r}")
            if layer.source not in seen:
                raise ConfigError(f"{where}: source {layer.source!r} is not an earlier layer")
            if seen[layer.source] != layer.in_channels:
                raise ConfigError(
                    f"{where}: expects {layer.in_channels} channels, source gives {seen[layer.source]}")
            if layer.in_channels % layer.groups or layer.out_channels % layer.groups:
                raise ConfigError(f"{where}: channels not divisible by groups {layer.groups}")
            if layer.kind == "tconv":
                if layer.groups != 1 or layer.dilation != 1:
                    raise ConfigError(f"{where}: transposed conv needs groups 1 and dilation 1")
                if layer.kernel_size != 2 * layer.stride:
                    raise ConfigError(f"{where}: transposed kernel_size must equal 2*stride")
            if layer.kind == "pool" and (layer.in_channels != layer.out_channels
                                         or layer.kernel_size != 4 or layer.stride != 2):
                raise ConfigError(f"{where}: pooling is fixed to kernel 4, stride 2, same channels")
            r = layer.resolution(res[layer.source])
            for join in (layer.residual, layer.skip):
                if join is None:
                    continue
                if join not in seen:
                    raise ConfigError(f"{where}: join source {join!r} is not an earlier layer")
                if seen[join] != layer.out_channels or res[join] != r:
                    raise ConfigError(
                        f"{where}: join with {join!r} mismatches channels or temporal resolution")
            seen[layer.name] = layer.out_channels
            res[layer.name] = r
        for name in self.outputs + tuple(n for scale in self.features for n in scale):
            if name not in seen:
                raise ConfigError(f"{self.name}: output {name!r} is not a layer")
        if self.up_strides:
            if tuple(reversed(self.up_strides)) != tuple(self.strides):
                raise ConfigError(f"{self.name}: decoder strides must mirror encoder strides")
            for layer in self.layers:
                if layer.kind == "conv" and layer.stride > 1 and layer.out_channels != 2 * layer.in_channels:
                    raise ConfigError(f"{self.name}/{layer.name}: down-sampling must double channels")
                if layer.kind == "tconv" and 2 * layer.out_channels != layer.in_channels:
                    raise ConfigError(f"{self.name}/{layer.name}: up-sampling must halve channels")
        return self


def _residual_unit(layers: list, prefix: str, source: str, channels: int, dilation: int) -> str:
    layers.append(LayerSpec(f"{prefix}.conv1", "conv", source, channels, channels,
                            kernel_size=RES_KERNEL, dilation=dilation, pre_activation="elu"))
    layers.append(LayerSpec(f"{prefix}.conv2", "conv", f"{prefix}.conv1", channels, channels,
                            kernel_size=1, pre_activation="elu", residual=source))
    return f"{prefix}.conv2"


def build_generator(base_channels: int = 8, strides: tuple[int, ...] = GEN_STRIDES) -> GraphSpec:
    """Causal U-Net: input conv, down-sampling blocks, mirrored up-sampling blocks, output conv.

    Each encoder block is three pre-activation residual units (dilations
    1, 3, 9) followed by a strided conv that doubles the channels. Each
    decoder block is a transposed conv that halves the channels followed by
    three residual units; its output receives the matching encoder block's
    input as a skip. The input waveform is added to the output.
    """
    if base_channels < 1:
        raise ConfigError("base_channels must be >= 1")
    strides = tuple(int(s) for s in strides)
    layers: list[LayerSpec] = [
        LayerSpec("input_conv", "conv", GRAPH_INPUT, 1, base_channels, kernel_size=BOUNDARY_KERNEL)]
    prev = "input_conv"
    block_inputs = []
    ch = base_channels
    for i, s in enumerate(strides):
        block_inputs.append(prev)
        for u, d in enumerate(GEN_DILATIONS):
            prev = _residual_unit(layers, f"enc{i}.res{u}", prev, ch, d)
        layers.append(LayerSpec(f"enc{i}.down", "conv", prev, ch, 2 * ch,
                                kernel_size=2 * s, stride=s, pre_activation="elu"))
        prev = f"enc{i}.down"
        ch *= 2
    for i in reversed(range(len(strides))):
        s = strides[i]
        layers.append(LayerSpec(f"dec{i}.up", "tconv", prev, ch, ch // 2,
                                kernel_size=2 * s, stride=s, pre_activation="elu"))
        prev = f"dec{i}.up"
        ch //= 2
        for u, d in enumerate(GEN_DILATIONS):
            prev = _residual_unit(layers, f"dec{i}.res{u}", prev, ch, d)
        last = layers[-1]
        layers[-1] = replace(last, skip=block_inputs[i])
    layers.append(LayerSpec("output_conv", "conv", prev, base_channels, 1,
                            kernel_size=BOUNDARY_KERNEL, pre_activation="elu", skip=GRAPH_INPUT))
    return GraphSpec("generator", tuple(layers), base_channels, strides,
                     up_strides=tuple(reversed(strides)), outputs=("output_conv",)).validate()


def discriminator_widths(width: int = DISC_WIDTH, max_channels: int = DISC_MAX_CHANNELS) -> list[int]:
    """Channel count after the initial conv and after each grouped conv."""
    widths = [width]
    for _ in range(DISC_GROUPED):
        widths.append(min(widths[-1] * DISC_FACTOR, max_channels))
    return widths


def build_discriminator(width: int = DISC_WIDTH, max_channels: int = DISC_MAX_CHANNELS,
                        scales: int = DISC_SCALES) -> GraphSpec:
    """Three identical conv stacks on the waveform at 1x, 2x and 4x down-sampling.

    Per scale: plain conv, four grouped convs (4 channels per group, stride
    4, channels x4 up to ``max_channels``), a plain conv and a 1-channel
    logit conv. Every non-logit conv is followed by layer norm and leaky
    ReLU; those six activations are the internal features.
    """
    layers: list[LayerSpec] = []
    sources = [GRAPH_INPUT]
    for k in range(1, scales):
        name = f"pool_x{2 ** k}"
        layers.append(LayerSpec(name, "pool", sources[-1], 1, 1, kernel_size=4, stride=2))
        sources.append(name)
    widths = discriminator_widths(width, max_channels)
    outputs, features = [], []
    for k, src in enumerate(sources):
        p = f"d{k}"
        feats = []
        layers.append(LayerSpec(f"{p}.conv0", "conv", src, 1, widths[0], kernel_size=15,
                                norm="layer_norm", activation="leaky_relu"))
        feats.append(f"{p}.conv0")
        for g in range(1, DISC_GROUPED + 1):
            cin, cout = widths[g - 1], widths[g]
            layers.append(LayerSpec(f"{p}.group{g}", "conv", feats[-1], cin, cout,
                                    kernel_size=10 * DISC_FACTOR + 1, stride=DISC_FACTOR,
                                    groups=cin // DISC_GROUP_SIZE,
                                    norm="layer_norm", activation="leaky_relu"))
            feats.append(f"{p}.group{g}")
        layers.append(LayerSpec(f"{p}.conv5", "conv", feats[-1], widths[-1], widths[-1],
                                kernel_size=5, norm="layer_norm", activation="leaky_relu"))
        feats.append(f"{p}.conv5")
        layers.append(LayerSpec(f"{p}.logits", "conv", feats[-1], widths[-1], 1, kernel_size=3))
        outputs.append(f"{p}.logits")
        features.append(tuple(feats))
    return GraphSpec("discriminator", tuple(layers), width, (DISC_FACTOR,) * DISC_GROUPED,
                     outputs=tuple(outputs), features=tuple(features)).validate()


BOUNDARY_LAYERS = ("input_conv", "output_conv")


def parameter_counts(graph: GraphSpec) -> dict[str, int]:
    """Exact parameter counts split into internal/boundary weights and biases.

    Internal kernel weights scale with the square of the width, so their
    ratio between two widths is exact; biases and the two boundary convs
    scale linearly and are reported separately.
    """
    counts = {"internal_weights": 0, "internal_biases": 0, "boundary_weights": 0,
              "boundary_biases": 0, "norm": 0}
    for layer in graph.layers:
        where = "boundary" if layer.name in BOUNDARY_LAYERS else "internal"
        for name, shape in layer.parameter_shapes().items():
            n = int(np.prod(shape))
            if name.endswith(".weight"):
                counts[f"{where}_weights"] += n
            elif name.endswith(".bias"):
                counts[f"{where}_biases"] += n
            else:
                counts["norm"] += n
    counts["total"] = sum(counts.values())
    return counts


@dataclass
class DiscriminatorOutput:
    """Per-scale logits ``[T_k]`` and per-scale, per-layer features ``[C, T_kl]``."""

    logits: list[np.ndarray]
    features: list[list[np.ndarray]]

    @property
    def num_scales(self) -> int:
        return len(self.logits)

    @property
    def num_layers(self) -> int:
        return len(self.features[0]) if self.features else 0
