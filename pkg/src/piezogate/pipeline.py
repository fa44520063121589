"""End-to-end processor: pickup-derived mask applied to the microphone STFT."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gate import GateMode, GateParams, init_state, update_hard, update_smooth
from .spectral import FrameParams, Spectrogram, TimeSignal, analyze, synthesize


@dataclass
class MaskSequence:
    """Per-frame, per-bin real gains in [0, 1], shape (frames, bins)."""

    gains: np.ndarray
    params: FrameParams = field(default_factory=FrameParams)
    gate: GateParams = field(default_factory=GateParams)

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=np.float64)
        if self.gains.ndim != 2 or self.gains.shape[1] != self.params.bins:
            raise ValueError(
                f"mask must have shape (frames, {self.params.bins}), "
                f"got {self.gains.shape}"
            )
        if np.any(self.gains < 0) or np.any(self.gains > 1):
            raise ValueError("mask gains must lie in [0, 1]")

    @property
    def frames(self) -> int:
        return self.gains.shape[0]

    @classmethod
    def constant(cls, value: float, n_samples: int, params: FrameParams,
                 gate: GateParams | None = None) -> MaskSequence:
        """A mask with every gain equal to ``value`` for a signal of ``n_samples``."""
        shape = (params.n_frames(n_samples), params.bins)
        return cls(np.full(shape, float(value)), params, gate or GateParams())


def gains_from_magnitudes(mags: np.ndarray, gparams: GateParams) -> np.ndarray:
    """Run the gate over a (frames, bins) magnitude array in time order."""
    if gparams.mode is GateMode.HARD:
        return update_hard(mags, gparams.th)
    state = init_state(mags.shape[1])
    out = np.empty_like(mags, dtype=np.float64)
    for t in range(mags.shape[0]):
        out[t] = update_smooth(state, mags[t], gparams)
    return out


def build_mask(pickup: TimeSignal, fparams: FrameParams | None = None,
               gparams: GateParams | None = None) -> MaskSequence:
    """Derive the gating mask from the pickup signal.

    Raises:
        ValueError: if ``pickup`` is empty.
    """
    fparams = fparams or FrameParams(sample_rate=pickup.sample_rate)
    gparams = gparams or GateParams()
    if len(pickup) == 0:
        raise ValueError("cannot build a mask from an empty pickup signal")
    mags = analyze(pickup, fparams).magnitude()
    return MaskSequence(gains_from_magnitudes(mags, gparams), fparams, gparams)


def process_with_mask(signal: TimeSignal, mask: MaskSequence) -> TimeSignal:
    """Gate ``signal`` with a precomputed mask; output length equals input length.

    For a fixed mask this is linear in ``signal``. An all-ones mask returns
    the input unchanged.
    """
    fparams = mask.params
    expected = fparams.n_frames(len(signal))
    if expected != mask.frames:
        raise ValueError(
            f"mask has {mask.frames} frames but a {len(signal)}-sample signal "
            f"produces {expected}"
        )
    if np.all(mask.gains == 1.0):
        # Exact identity rather than a round trip with rounding residue.
        return TimeSignal(signal.samples.copy(), signal.sample_rate)
    spec = analyze(signal, fparams)
    gated = Spectrogram(spec.data * mask.gains, fparams)
    return synthesize(gated, len(signal))


def align(pickup: TimeSignal, n_samples: int, lag: int = 0) -> TimeSignal:
    """Shift ``pickup`` by ``lag`` samples and fit it to ``n_samples``.

    A positive lag means the pickup runs late relative to the microphone, so
    it is advanced: output sample ``i`` is pickup sample ``i + lag``. Samples
    shifted in from outside the recording are zero.
    """
    y = pickup.samples
    out = np.zeros(n_samples)
    src_start = max(lag, 0)
    dst_start = max(-lag, 0)
    count = min(len(y) - src_start, n_samples - dst_start)
    if count > 0:
        out[dst_start : dst_start + count] = y[src_start : src_start + count]
    return TimeSignal(out, pickup.sample_rate)


def padded_length(n_mic: int, n_pickup: int, lag: int = 0) -> int:
    """Common length of the mic and the ``lag``-shifted pickup after zero-padding."""
    return max(n_mic, n_pickup - lag)


def process(mic: TimeSignal, pickup: TimeSignal, fparams: FrameParams | None = None,
            gparams: GateParams | None = None, lag: int = 0) -> TimeSignal:
    """Extract the target instrument from ``mic`` using ``pickup`` as reference.

    After shifting the pickup by ``lag`` the shorter of the two signals is
    zero-padded; the output keeps the length of ``mic``.

    Raises:
        ValueError: on empty inputs or a sample-rate mismatch.
    """
    if len(mic) == 0 or len(pickup) == 0:
        raise ValueError("mic and pickup must be non-empty")
    if mic.sample_rate != pickup.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: mic {mic.sample_rate} Hz, "
            f"pickup {pickup.sample_rate} Hz"
        )
    fparams = fparams or FrameParams(sample_rate=mic.sample_rate)
    # Zero-pad whichever is shorter after the shift, then trim to the mic.
    n = padded_length(len(mic), len(pickup), lag)
    padded = TimeSignal(np.pad(mic.samples, (0, n - len(mic))), mic.sample_rate)
    mask = build_mask(align(pickup, n, lag), fparams, gparams)
    out = process_with_mask(padded, mask)
    return TimeSignal(out.samples[: len(mic)], mic.sample_rate)
