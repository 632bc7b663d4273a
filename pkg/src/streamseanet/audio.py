"""Audio containers and 16-bit PCM WAV I/O."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .errors import FormatError, ShapeError, UnsupportedFormatError

PathLike = Union[str, Path]

DTYPE = np.float32
_PCM_SCALE = 32768.0


def _frozen(samples, ndim: int) -> np.ndarray:
    arr = np.array(samples, dtype=DTYPE, copy=True)
    if arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples contain NaN or Inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AudioBuffer:
    """Mono float32 signal with its sample rate. Immutable."""

    samples: np.ndarray
    sample_rate_hz: int = 16000

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples, 1))
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def replace(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class Chunk:
    """One fixed-size slice of a stream, tagged with its ordinal."""

    samples: np.ndarray
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples, 1))
        if self.index < 0:
            raise ValueError("chunk index must be nonnegative")

    def __len__(self) -> int:
        return self.samples.shape[0]


def iter_chunks(buf: AudioBuffer | np.ndarray, size: int) -> Iterator[Chunk]:
    """Split a signal into consecutive chunks of ``size`` samples.

    The signal length must be a multiple of ``size``.
    """
    samples = buf.samples if isinstance(buf, AudioBuffer) else np.asarray(buf)
    if size <= 0 or samples.shape[0] % size:
        raise ShapeError(f"length {samples.shape[0]} is not a multiple of {size}")
    for i in range(samples.shape[0] // size):
        yield Chunk(samples[i * size:(i + 1) * size], i)


def wav_read(path: PathLike) -> AudioBuffer:
    """Read a 16-bit PCM mono WAV file into an AudioBuffer scaled to [-1, 1)."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            nframes = w.getnframes()
            if channels != 1:
                raise UnsupportedFormatError(f"{path}: {channels} channels, only mono is supported")
            if width != 2:
                raise UnsupportedFormatError(f"{path}: {8 * width}-bit samples, only 16-bit PCM is supported")
            raw = w.readframes(nframes)
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if len(raw) != 2 * nframes:
        raise FormatError(f"{path}: header declares {nframes} frames, file holds {len(raw) // 2}")
    if rate <= 0:
        raise FormatError(f"{path}: invalid sample rate {rate}")
    pcm = np.frombuffer(raw, dtype="<i2")
    return AudioBuffer(pcm.astype(DTYPE) / DTYPE(_PCM_SCALE), rate)


def wav_write(buf: AudioBuffer, path: PathLike) -> None:
    """Write ``buf`` as 16-bit PCM mono, clamping samples to [-1, 1]."""
    pcm = np.clip(np.round(buf.samples.astype(np.float64) * _PCM_SCALE), -32768, 32767)
    with open(path, "wb") as f, wave.open(f, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate_hz)
        w.writeframes(pcm.astype("<i2").tobytes())
