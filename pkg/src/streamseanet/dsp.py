"""Band-limited input generation, discriminator-scale pooling and STFT magnitudes."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy import signal

from .audio import AudioBuffer
from .errors import DomainError
from .ops import avg_pool_params, causal_conv

BANDPASS_TAPS = 1025
STFT_WINDOW = 512
STFT_HOP = 128


@dataclass(frozen=True)
class BandSpec:
    low_hz: float
    high_hz: float

    def check(self, sample_rate_hz: int) -> "BandSpec":
        if not (0 <= self.low_hz < self.high_hz <= sample_rate_hz / 2):
            raise DomainError(
                f"band {self.low_hz}-{self.high_hz} Hz invalid at {sample_rate_hz} Hz")
        return self


BANDS = {
    "wide": BandSpec(100.0, 3800.0),
    "medium": BandSpec(200.0, 3600.0),
    "narrow": BandSpec(300.0, 3400.0),
}

LOW_RANGE = (0.0, 300.0)
HIGH_RANGE = (3400.0, 4000.0)


@dataclass
class BandSampler:
    """Draws cutoffs uniformly and independently from the low and high ranges."""

    seed: int = 0
    low_range: tuple[float, float] = LOW_RANGE
    high_range: tuple[float, float] = HIGH_RANGE
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def draw(self) -> BandSpec:
        low = self._rng.uniform(*self.low_range)
        high = self._rng.uniform(*self.high_range)
        return BandSpec(float(low), float(high))


def sample_band(sampler: BandSampler) -> BandSpec:
    return sampler.draw()


def bandpass_taps(band: BandSpec, sample_rate_hz: int, numtaps: int = BANDPASS_TAPS) -> np.ndarray:
    """Linear-phase windowed-sinc (Hann) FIR taps; degrades to low/high-pass at the band edges."""
    band.check(sample_rate_hz)
    nyq = sample_rate_hz / 2
    if band.low_hz <= 0 and band.high_hz >= nyq:
        taps = np.zeros(numtaps)
        taps[numtaps // 2] = 1.0
        return taps
    if band.low_hz <= 0:
        return signal.firwin(numtaps, band.high_hz, window="hann", fs=sample_rate_hz)
    if band.high_hz >= nyq:
        return signal.firwin(numtaps, band.low_hz, window="hann", pass_zero=False, fs=sample_rate_hz)
    return signal.firwin(numtaps, [band.low_hz, band.high_hz], window="hann",
                         pass_zero=False, fs=sample_rate_hz)


def bandpass(x: AudioBuffer, band: BandSpec) -> AudioBuffer:
    """Zero-phase-aligned band-pass: output is time-aligned with, and as long as, the input."""
    taps = bandpass_taps(band, x.sample_rate_hz)
    # odd tap count: "same" mode removes exactly the (numtaps - 1) / 2 group delay
    y = signal.fftconvolve(x.samples.astype(np.float64), taps, mode="same")
    return x.replace(y)


def avg_downsample(x: AudioBuffer, factor: int) -> AudioBuffer:
    """Causal average pooling (kernel 4, stride 2, zero history) applied once or twice."""
    if factor not in (2, 4):
        raise DomainError(f"down-sampling factor must be 2 or 4, got {factor}")
    p = avg_pool_params(1, np.float64)
    y = x.samples.astype(np.float64)[None, :]
    for _ in range(factor.bit_length() - 1):
        y = causal_conv(y, p)
    return AudioBuffer(y[0], max(1, x.sample_rate_hz // factor))


def stft_mag(x: AudioBuffer | np.ndarray, window: int = STFT_WINDOW, hop: int = STFT_HOP) -> np.ndarray:
    """Magnitude spectrogram ``[frames, window // 2 + 1]`` with a periodic Hann window, no padding."""
    samples = np.asarray(x.samples if isinstance(x, AudioBuffer) else x, dtype=np.float64)
    if samples.shape[0] < window:
        raise DomainError(f"signal of {samples.shape[0]} samples is shorter than the {window}-sample window")
    frames = np.lib.stride_tricks.sliding_window_view(samples, window)[::hop]
    return np.abs(np.fft.rfft(frames * signal.get_window("hann", window), axis=1))


def save_spectrogram_csv(mag: np.ndarray, path: Union[str, Path]) -> None:
    np.savetxt(path, mag, fmt="%.6g", delimiter=",")
