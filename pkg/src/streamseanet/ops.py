"""Causal 1-D convolution, activation and normalization primitives.

Feature maps are 2-D arrays indexed ``[channel, time]``. Kernel taps follow
a "k steps in the past" convention: ``weight[:, :, 0]`` multiplies the
current input step, ``weight[:, :, k]`` the step ``k * dilation`` earlier.
For transposed convolutions ``weight[:, :, k]`` lands ``k`` output steps
after the up-sampled position of its input.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError

LN_EPS = 1e-5


@dataclass(frozen=True)
class ConvParams:
    weight: np.ndarray  # [out, in / groups, kernel]
    bias: np.ndarray    # [out]
    stride: int = 1
    dilation: int = 1
    groups: int = 1
    transposed: bool = False

    def __post_init__(self):
        w = np.asarray(self.weight)
        if w.ndim != 3:
            raise ShapeError(f"weight must be 3-D, got shape {w.shape}")
        if np.asarray(self.bias).shape != (w.shape[0],):
            raise ShapeError(f"bias shape {np.shape(self.bias)} does not match {w.shape[0]} outputs")
        if min(self.stride, self.dilation, self.groups) < 1:
            raise ConfigError("stride, dilation and groups must be >= 1")
        if w.shape[0] % self.groups:
            raise ConfigError(f"out_channels {w.shape[0]} not divisible by groups {self.groups}")
        if self.transposed:
            if self.dilation != 1 or self.groups != 1:
                raise ConfigError("transposed convolutions require dilation 1 and groups 1")
            if w.shape[2] != 2 * self.stride:
                raise ConfigError(
                    f"transposed kernel_size must be 2*stride={2 * self.stride}, got {w.shape[2]}")

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1] * self.groups

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[2]

    @cached_property
    def weight_t(self) -> np.ndarray:
        """Kernel as ``[in/groups, kernel, out]`` (the layout the compiled kernels read)."""
        return np.ascontiguousarray(self.weight.transpose(1, 2, 0))

    @property
    def history(self) -> int:
        """Past input steps a causal conv needs (zero for transposed convs)."""
        return 0 if self.transposed else (self.kernel_size - 1) * self.dilation

    def astype(self, dtype) -> "ConvParams":
        return ConvParams(
            np.ascontiguousarray(self.weight, dtype=dtype),
            np.ascontiguousarray(self.bias, dtype=dtype),
            self.stride, self.dilation, self.groups, self.transposed)


def _check_input(x: np.ndarray, p: ConvParams) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != p.in_channels:
        raise ShapeError(f"input shape {x.shape} does not match {p.in_channels} input channels")
    return np.ascontiguousarray(x, dtype=p.weight.dtype)


def conv_step(x: np.ndarray, p: ConvParams, history: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Causal conv over ``x`` continuing from ``history``; returns ``(y, new_history)``.

    ``x.shape[1]`` must be a multiple of the stride.
    """
    x = _check_input(x, p)
    if p.transposed:
        raise ConfigError("conv_step needs a regular (non-transposed) conv")
    n = x.shape[1]
    if n % p.stride:
        raise ShapeError(f"input length {n} is not a multiple of stride {p.stride}")
    xp = np.concatenate([history.astype(x.dtype, copy=False), x], axis=1) if p.history else x
    y = kernels.conv1d(xp, p.weight, p.weight_t, p.bias, p.stride, p.dilation, p.groups, n // p.stride)
    new_history = xp[:, xp.shape[1] - p.history:].copy() if p.history else history
    return y, new_history


def causal_conv(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Offline causal conv: left-pad with zeros, no right padding.

    Output length is ``ceil(T / stride)``; output step ``j`` reads inputs at
    times ``<= j * stride``.
    """
    x = _check_input(x, p)
    if p.transposed:
        raise ConfigError("causal_conv needs a regular (non-transposed) conv; use causal_transposed_conv")
    n = x.shape[1]
    n_out = -(-n // p.stride)
    pad_right = n_out * p.stride - n
    xp = np.zeros((x.shape[0], p.history + n + pad_right), dtype=x.dtype)
    xp[:, p.history:p.history + n] = x
    return kernels.conv1d(xp, p.weight, p.weight_t, p.bias, p.stride, p.dilation, p.groups, n_out)


def transposed_conv_step(x: np.ndarray, p: ConvParams, carry: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Up-sample ``x`` by ``p.stride`` adding ``carry`` from the previous call.

    Returns ``(y, new_carry)`` where ``new_carry`` (shape ``[out, stride]``)
    holds the kernel tail that spills past the end of ``y``.
    """
    x = _check_input(x, p)
    if not p.transposed:
        raise ConfigError("transposed_conv_step needs a transposed conv")
    carry = np.ascontiguousarray(carry, dtype=x.dtype)
    if carry.shape != (p.out_channels, p.stride):
        raise ShapeError(f"carry shape {carry.shape} != {(p.out_channels, p.stride)}")
    if x.shape[1] == 0:
        return np.zeros((p.out_channels, 0), dtype=x.dtype), carry
    return kernels.conv_transpose1d(x, p.weight_t, p.bias, carry, p.stride)


def causal_transposed_conv(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Offline causal transposed conv; output length ``T * stride``.

    Output step ``t`` reads input steps ``<= t // stride``; the tail spilling
    past the last input is dropped.
    """
    carry = np.zeros((p.out_channels, p.stride), dtype=p.weight.dtype)
    return transposed_conv_step(x, p, carry)[0]


def elu(x: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    x = np.asarray(x)
    neg = np.expm1(np.minimum(x, 0))
    if alpha != 1.0:
        neg *= x.dtype.type(alpha)
    return np.maximum(x, 0) + neg


def leaky_relu(x: np.ndarray, alpha: float = 0.2) -> np.ndarray:
    x = np.asarray(x)
    return np.where(x >= 0, x, x * x.dtype.type(alpha))


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = LN_EPS) -> np.ndarray:
    """Normalize each time step across channels, then scale and shift per channel."""
    x = np.asarray(x)
    gain = np.asarray(gain)
    bias = np.asarray(bias)
    if x.ndim != 2 or gain.shape != (x.shape[0],) or bias.shape != (x.shape[0],):
        raise ShapeError(f"layer_norm: input {x.shape}, gain {gain.shape}, bias {bias.shape}")
    mean = x.mean(axis=0, keepdims=True)
    var = np.square(x - mean).mean(axis=0, keepdims=True)
    y = (x - mean) / np.sqrt(var + eps)
    return (y * gain[:, None] + bias[:, None]).astype(x.dtype, copy=False)


ACTIVATIONS = {"elu": elu, "leaky_relu": leaky_relu}


def avg_pool_params(channels: int, dtype=np.float32) -> ConvParams:
    """Causal average pooling (kernel 4, stride 2) expressed as a depthwise conv."""
    return ConvParams(np.full((channels, 1, 4), 0.25, dtype=dtype),
                      np.zeros(channels, dtype=dtype), stride=2, groups=channels)
