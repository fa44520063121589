"""Short-time Fourier analysis and weighted overlap-add resynthesis.

Conventions used throughout the package:

* the forward transform is unnormalized (``numpy.fft.rfft``), the inverse
  is scaled by ``1 / window_size``;
* the analysis window is a symmetric Hamming window, applied only at
  analysis time;
* the signal is padded at the head with ``window_size - hop`` zeros so that
  every input sample is covered by the same number of frames, and synthesis
  divides by the realized sum of shifted windows.

Together these make ``synthesize(analyze(x), len(x))`` an exact identity
(up to rounding) on every sample, edges included.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class WindowKind(str, enum.Enum):
    HAMMING = "hamming"


@dataclass(frozen=True)
class FrameParams:
    """STFT framing. Defaults are 2048-sample Hamming frames, 75% overlap, 44.1 kHz."""

    window_size: int = 2048
    hop: int = 512
    window_kind: WindowKind = WindowKind.HAMMING
    sample_rate: float = 44100.0

    def __post_init__(self):
        if self.window_size <= 0:
            raise ValueError(f"window_size must be positive, got {self.window_size}")
        if not 0 < self.hop <= self.window_size:
            raise ValueError(
                f"hop must satisfy 0 < hop <= window_size, got hop={self.hop}"
            )
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "window_kind", WindowKind(self.window_kind))

    @property
    def bins(self) -> int:
        return self.window_size // 2 + 1

    @property
    def head_pad(self) -> int:
        return self.window_size - self.hop

    def n_frames(self, n_samples: int) -> int:
        """Number of frames ``analyze`` produces for a signal of ``n_samples``."""
        return math.ceil((n_samples + self.head_pad) / self.hop)

    def window(self) -> np.ndarray:
        return make_window(self.window_kind, self.window_size)


def make_window(kind: WindowKind, size: int) -> np.ndarray:
    kind = WindowKind(kind)
    if kind is WindowKind.HAMMING:
        # np.hamming is the symmetric variant.
        return np.hamming(size)
    raise ValueError(f"unsupported window kind: {kind!r}")


@dataclass
class TimeSignal:
    """A mono sample sequence with its sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"TimeSignal must be 1-D, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("TimeSignal contains NaN or Inf")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def energy(self) -> float:
        return float(np.sum(self.samples**2))

    def rms(self) -> float:
        if len(self) == 0:
            return 0.0
        return math.sqrt(self.energy() / len(self))

    def __add__(self, other: TimeSignal) -> TimeSignal:
        _check_rates(self, other)
        return TimeSignal(self.samples + other.samples, self.sample_rate)

    def __sub__(self, other: TimeSignal) -> TimeSignal:
        _check_rates(self, other)
        return TimeSignal(self.samples - other.samples, self.sample_rate)

    def scaled(self, gain: float) -> TimeSignal:
        return TimeSignal(self.samples * gain, self.sample_rate)


def _check_rates(a: TimeSignal, b: TimeSignal):
    if a.sample_rate != b.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: {a.sample_rate} Hz vs {b.sample_rate} Hz"
        )


@dataclass
class Spectrogram:
    """One-sided complex STFT, ``data`` has shape (frames, bins)."""

    data: np.ndarray
    params: FrameParams = field(default_factory=FrameParams)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[1] != self.params.bins:
            raise ValueError(
                f"spectrogram data must have shape (frames, {self.params.bins}), "
                f"got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("spectrogram contains NaN or Inf")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.data)


def frame_signal(samples: np.ndarray, params: FrameParams) -> np.ndarray:
    """Zero-pad and slice ``samples`` into overlapping (unwindowed) frames."""
    n = samples.shape[0]
    n_frames = params.n_frames(n)
    total = (n_frames - 1) * params.hop + params.window_size
    padded = np.zeros(total)
    padded[params.head_pad : params.head_pad + n] = samples
    view = np.lib.stride_tricks.sliding_window_view(padded, params.window_size)
    return view[:: params.hop][:n_frames]


def analyze(signal: TimeSignal, params: FrameParams | None = None) -> Spectrogram:
    """Compute the STFT of ``signal``.

    Frame ``t`` covers samples ``[t*hop, t*hop + window_size)`` of the signal
    after ``window_size - hop`` zeros have been prepended. Each frame is
    windowed and transformed with an unnormalized real FFT.

    Raises:
        ValueError: on an empty signal or a sample-rate mismatch.
    """
    params = params or FrameParams(sample_rate=signal.sample_rate)
    if len(signal) == 0:
        raise ValueError("cannot analyze an empty signal")
    if signal.sample_rate != params.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: signal is {signal.sample_rate} Hz, "
            f"frame params expect {params.sample_rate} Hz"
        )
    frames = frame_signal(signal.samples, params) * params.window()
    return Spectrogram(np.fft.rfft(frames, axis=-1), params)


def window_sum(params: FrameParams, n_frames: int) -> np.ndarray:
    """Sum of the analysis window shifted by every frame offset."""
    total = (n_frames - 1) * params.hop + params.window_size
    acc = np.zeros(total)
    win = params.window()
    for t in range(n_frames):
        acc[t * params.hop : t * params.hop + params.window_size] += win
    return acc


def synthesize(spec: Spectrogram, out_len: int) -> TimeSignal:
    """Invert ``analyze`` by overlap-add and window-sum division.

    The output is trimmed to ``out_len`` samples, with sample ``i`` aligned to
    input sample ``i`` of the analyzed signal.

    Raises:
        ValueError: if ``out_len`` is negative or exceeds ``frames * hop``, the
            last sample position with full frame coverage.
    """
    params = spec.params
    if spec.bins != params.bins:
        raise ValueError(
            f"spectrogram has {spec.bins} bins, params imply {params.bins}"
        )
    limit = spec.frames * params.hop
    if out_len < 0 or out_len > limit:
        raise ValueError(
            f"out_len={out_len} outside reconstructable range [0, {limit}]"
        )
    frames = np.fft.irfft(spec.data, n=params.window_size, axis=-1)
    total = (spec.frames - 1) * params.hop + params.window_size
    acc = np.zeros(total)
    for t in range(spec.frames):
        acc[t * params.hop : t * params.hop + params.window_size] += frames[t]
    wsum = window_sum(params, spec.frames)
    start = params.head_pad
    out = acc[start : start + out_len] / wsum[start : start + out_len]
    return TimeSignal(out, params.sample_rate)


def bin_frequency(k: int | np.ndarray, params: FrameParams):
    """Center frequency in Hz of bin ``k``."""
    return np.asarray(k) * params.sample_rate / params.window_size
