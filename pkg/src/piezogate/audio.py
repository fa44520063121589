"""Mono RIFF WAVE reading and writing.

Supported encodings are 16-bit and 24-bit integer PCM and 32-bit float.
Integers are mapped to [-1, 1) and floats are passed through unchanged.
"""

from __future__ import annotations

import enum
import wave
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .spectral import TimeSignal


class AudioReadError(OSError):
    """The file could not be opened or read."""


class UnsupportedFormatError(ValueError):
    """The file is readable but not a supported mono WAV encoding."""


class SampleFormat(str, enum.Enum):
    FLOAT32 = "float32"
    PCM16 = "pcm16"
    PCM24 = "pcm24"


def read_wav(path) -> TimeSignal:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(12)
    except OSError as exc:
        raise AudioReadError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path} is not a RIFF WAVE file")
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError) as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise UnsupportedFormatError(
            f"{path} has {data.shape[1]} channels; only mono is supported "
            "(extract one channel first, e.g. `sox in.wav out.wav remix 1`)"
        )
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit samples in int32.
        samples = data / 2147483648.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported sample type {data.dtype}")
    if not np.all(np.isfinite(samples)):
        raise UnsupportedFormatError(f"{path} contains NaN or Inf samples")
    return TimeSignal(samples, float(rate))


def _quantize(samples: np.ndarray, bits: int) -> np.ndarray:
    scale = 2.0 ** (bits - 1)
    return np.clip(np.round(samples * scale), -scale, scale - 1).astype(np.int32)


def write_wav(path, signal: TimeSignal, fmt: SampleFormat | str = SampleFormat.FLOAT32):
    """Write ``signal`` as a mono WAV file; integer formats clip to full scale."""
    fmt = SampleFormat(fmt)
    rate = int(round(signal.sample_rate))
    if rate != signal.sample_rate:
        raise ValueError(f"WAV needs an integer sample rate, got {signal.sample_rate}")
    path = Path(path)
    if fmt is SampleFormat.FLOAT32:
        wavfile.write(path, rate, signal.samples.astype(np.float32))
    elif fmt is SampleFormat.PCM16:
        wavfile.write(path, rate, _quantize(signal.samples, 16).astype(np.int16))
    else:
        raw = _quantize(signal.samples, 24).astype("<i4").view(np.uint8).reshape(-1, 4)
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(3)
            w.setframerate(rate)
            w.writeframes(raw[:, :3].tobytes())
