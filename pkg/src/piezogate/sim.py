"""Simulated microphone/pickup recordings.

The microphone hears the target through a reverberant room plus every
background source through its own room response. The pickup hears the
target through a short coloration filter and the background only at a very
low leakage level.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple

import numpy as np
from scipy import signal as sps

from .spectral import TimeSignal

NO_LEAKAGE = -math.inf

_LN1000 = math.log(1000.0)


@dataclass
class ImpulseResponse:
    taps: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.float64)
        if self.taps.ndim != 1 or self.taps.size == 0:
            raise ValueError("impulse response must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("impulse response contains NaN or Inf")

    def __len__(self) -> int:
        return self.taps.shape[0]

    @classmethod
    def identity(cls, sample_rate: float) -> ImpulseResponse:
        return cls(np.ones(1), sample_rate)


def convolve(signal: TimeSignal, ir: ImpulseResponse) -> TimeSignal:
    """Linear convolution truncated to the length of ``signal``."""
    if signal.sample_rate != ir.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: signal {signal.sample_rate} Hz, "
            f"impulse response {ir.sample_rate} Hz"
        )
    if len(signal) == 0:
        return TimeSignal(np.zeros(0), signal.sample_rate)
    full = sps.convolve(signal.samples, ir.taps, mode="full")
    return TimeSignal(full[: len(signal)], signal.sample_rate)


def reverb_envelope(t, rt60_s: float):
    """Amplitude envelope that has fallen by 60 dB at ``t = rt60_s``."""
    return np.exp(-_LN1000 * np.asarray(t) / rt60_s)


def synth_reverb_ir(rt60_s: float, length_s: float, sample_rate: float,
                    seed: int | np.random.SeedSequence | None = 0,
                    drr_db: float = 0.0) -> ImpulseResponse:
    """Statistical room response: a unit direct-path tap followed by decaying noise.

    The diffuse tail is Gaussian noise shaped by :func:`reverb_envelope` and
    scaled so that the direct-to-reverberant energy ratio is ``drr_db``. The
    result is peak-normalized.
    """
    if rt60_s <= 0 or length_s <= 0 or sample_rate <= 0:
        raise ValueError("rt60_s, length_s and sample_rate must all be positive")
    n = max(int(round(length_s * sample_rate)), 1)
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate
    tail = rng.standard_normal(n) * reverb_envelope(t, rt60_s)
    tail[0] = 0.0
    taps = tail
    tail_energy = float(np.sum(tail**2))
    if tail_energy > 0:
        taps = tail * math.sqrt(10.0 ** (-drr_db / 10.0) / tail_energy)
    taps[0] = 1.0
    return ImpulseResponse(taps / np.max(np.abs(taps)), sample_rate)


def load_eq_preset(name: str = "default", sample_rate: float = 44100.0) -> ImpulseResponse:
    """Pickup coloration FIR by name.

    ``"default"`` is a gentle low-shelf boost with a high-frequency roll-off,
    unity gain in the mid band; ``"flat"`` is the identity.
    """
    if name == "flat":
        return ImpulseResponse.identity(sample_rate)
    if name != "default":
        raise ValueError(f"unknown pickup EQ preset: {name!r}")
    text = resources.files("piezogate.data").joinpath("pickup_eq.txt").read_text()
    return ImpulseResponse(load_taps_text(text), sample_rate)


def load_taps_text(text: str) -> np.ndarray:
    """Parse taps stored one real number per line (blank lines and ``#`` ignored)."""
    values = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.append(float(line))
    return np.array(values)


def dump_taps_text(taps) -> str:
    return "".join(f"{float(v):.17g}\n" for v in np.asarray(taps))


@dataclass(frozen=True)
class MixSpec:
    """Recipe for one microphone/pickup pair.

    ``reverb_rt60_s = 0`` disables the room (dry microphone).
    ``pickup_leak_db = NO_LEAKAGE`` gives a pickup free of background sound.
    """

    mic_snr_db: float = 0.0
    pickup_leak_db: float = -40.0
    reverb_rt60_s: float = 0.6
    reverb_drr_db: float = 0.0
    pickup_eq: str | ImpulseResponse = "default"
    seed: int = 0

    def __post_init__(self):
        if self.pickup_leak_db > 0:
            raise ValueError(
                f"pickup_leak_db must be <= 0, got {self.pickup_leak_db}"
            )
        if self.reverb_rt60_s < 0:
            raise ValueError(
                f"reverb_rt60_s must be >= 0, got {self.reverb_rt60_s}"
            )
        if not math.isfinite(self.mic_snr_db):
            raise ValueError("mic_snr_db must be finite")

    def eq_ir(self, sample_rate: float) -> ImpulseResponse:
        if isinstance(self.pickup_eq, ImpulseResponse):
            return self.pickup_eq
        return load_eq_preset(self.pickup_eq, sample_rate)


class SimPair(NamedTuple):
    mic: TimeSignal
    pickup: TimeSignal
    mic_signal_part: TimeSignal
    mic_noise_part: TimeSignal


def _room(spec: MixSpec, sample_rate: float, seed) -> ImpulseResponse:
    if spec.reverb_rt60_s == 0:
        return ImpulseResponse.identity(sample_rate)
    return synth_reverb_ir(spec.reverb_rt60_s, spec.reverb_rt60_s, sample_rate,
                           seed, drr_db=spec.reverb_drr_db)


def make_pair(signal: TimeSignal, noises: list[TimeSignal], spec: MixSpec | None = None) -> SimPair:
    """Mix a target and background sources into microphone and pickup recordings.

    The noise sum at the microphone is scaled so that its RMS sits
    ``spec.mic_snr_db`` below the reverberant target. The pickup carries the
    colored target plus the colored noise sum at ``spec.pickup_leak_db``
    relative to the pickup's own target level.

    Raises:
        ValueError: for a silent target or noise sum, no noises, or mismatched rates.
    """
    spec = spec or MixSpec()
    if not noises:
        raise ValueError("at least one noise source is required")
    fs = signal.sample_rate
    for n in noises:
        if n.sample_rate != fs:
            raise ValueError(
                f"sample-rate mismatch: signal {fs} Hz, noise {n.sample_rate} Hz"
            )
        if len(n) != len(signal):
            raise ValueError("noise sources must have the same length as the signal")
    if signal.energy() == 0:
        raise ValueError("signal is silent; SNR scaling is undefined")

    seeds = np.random.SeedSequence(spec.seed).spawn(len(noises) + 1)
    sig_part = convolve(signal, _room(spec, fs, seeds[0]))
    noise_raw = np.zeros(len(signal))
    for n, ss in zip(noises, seeds[1:]):
        noise_raw += convolve(n, _room(spec, fs, ss)).samples
    noise_rms = math.sqrt(np.mean(noise_raw**2))
    if noise_rms == 0:
        raise ValueError("noise sum is silent; SNR scaling is undefined")
    gain = sig_part.rms() / noise_rms * 10.0 ** (-spec.mic_snr_db / 20.0)
    noise_part = TimeSignal(noise_raw * gain, fs)
    mic = TimeSignal(sig_part.samples + noise_part.samples, fs)

    eq = spec.eq_ir(fs)
    pickup_sig = convolve(signal, eq)
    pickup = pickup_sig.samples.copy()
    if spec.pickup_leak_db != NO_LEAKAGE:
        noise_sum = TimeSignal(np.sum([n.samples for n in noises], axis=0), fs)
        leak = convolve(noise_sum, eq)
        if leak.rms() > 0:
            scale = pickup_sig.rms() / leak.rms() * 10.0 ** (spec.pickup_leak_db / 20.0)
            pickup = pickup + leak.samples * scale
    return SimPair(mic, TimeSignal(pickup, fs), sig_part, noise_part)


class FixtureKind(str, enum.Enum):
    DISJOINT_TONES = "disjoint-tones"
    PLUCKED_VS_BAND = "plucked-vs-band"
    OVERLAPPING_HARMONICS = "overlapping-harmonics"


@dataclass
class Fixture:
    """Signal and noise sources, plus the STFT bins each tone was centered on."""

    signal: TimeSignal
    noises: list[TimeSignal]
    signal_bins: frozenset[int] = frozenset()
    noise_bins: frozenset[int] = frozenset()

    def __iter__(self):
        # Allows ``s, noises = synth_fixture(...)``.
        return iter((self.signal, self.noises))


def _raised_cosine_burst(n: int, start: int, length: int, ramp: int) -> np.ndarray:
    env = np.zeros(n)
    stop = min(start + length, n)
    if stop <= start:
        return env
    env[start:stop] = 1.0
    ramp = min(ramp, (stop - start) // 2)
    if ramp > 0:
        rise = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
        env[start : start + ramp] = rise
        env[stop - ramp : stop] = rise[::-1]
    return env


def _bursts(rng, n: int, fs: float, min_s: float, max_s: float, ramp_s: float,
            count: int) -> np.ndarray:
    env = np.zeros(n)
    ramp = int(ramp_s * fs)
    for _ in range(count):
        length = int(rng.uniform(min_s, max_s) * fs)
        start = int(rng.integers(0, max(n - length, 1)))
        env = np.maximum(env, _raised_cosine_burst(n, start, length, ramp))
    return env


def _disjoint_tones(rng, n, fs, window_size):
    t = np.arange(n) / fs
    # Target and background alternate on a grid 64 bins apart; long bursts with
    # slow ramps keep transition leakage below the far-bin floor.
    start_bin = int(rng.integers(16, 40))
    grid = start_bin + 64 * np.arange(12)
    sig_bins = grid[0::2].tolist()
    noise_bins = grid[1::2].tolist()

    def tones(bins):
        out = np.zeros(n)
        for k in bins:
            env = _bursts(rng, n, fs, 1.0, 2.0, 0.3, 1)
            out += 0.1 * env * np.sin(2 * np.pi * k * fs / window_size * t + rng.uniform(0, 2 * np.pi))
        return out

    return [tones(sig_bins)], [tones(noise_bins)], frozenset(sig_bins), frozenset(noise_bins)


# Hirajoshi-like tuning, Hz.
_PENTATONIC_NOTES = np.array([293.66, 311.13, 392.0, 440.0, 466.16, 587.33, 622.25, 783.99])


def _plucked_vs_band(rng, n, fs, window_size):
    t_all = np.arange(n) / fs
    s = np.zeros(n)
    onset = rng.uniform(0.0, 0.1)
    while onset < n / fs:
        f0 = rng.choice(_PENTATONIC_NOTES)
        start = int(onset * fs)
        tt = t_all[: n - start]
        attack = np.minimum(tt / 0.002, 1.0)
        note = np.zeros(tt.shape[0])
        for h in range(1, 11):
            fh = h * f0
            if fh >= fs / 2:
                break
            tau = 0.6 / (1.0 + 0.4 * h)
            note += (1.0 / h) * np.exp(-tt / tau) * np.sin(2 * np.pi * fh * tt + rng.uniform(0, 2 * np.pi))
        s[start:] += rng.uniform(0.5, 1.0) * attack * note
        onset += rng.uniform(0.12, 0.36)
    s *= 0.5 / np.max(np.abs(s))

    # Guitar-like: band-limited noise bursts.
    sos = sps.butter(4, [200.0, 4000.0], btype="bandpass", fs=fs, output="sos")
    band = sps.sosfilt(sos, rng.standard_normal(n))
    band *= _bursts(rng, n, fs, 0.15, 0.5, 0.01, max(int(n / fs * 3), 1))

    # Drum/bass-like: low-frequency decaying pulses plus a bass line.
    low = np.zeros(n)
    period = int(0.5 * fs)
    kick_len = int(0.25 * fs)
    tk = np.arange(kick_len) / fs
    kick = np.sin(2 * np.pi * (50.0 * tk + 80.0 * 0.03 * (1 - np.exp(-tk / 0.03)))) * np.exp(-tk / 0.08)
    for start in range(int(rng.integers(0, period)), n, period):
        stop = min(start + kick_len, n)
        low[start:stop] += kick[: stop - start]
    bass_f = rng.choice([55.0, 65.41, 73.42, 82.41], size=max(int(n / fs) + 1, 1))
    seg = np.minimum((t_all / 1.0).astype(int), bass_f.size - 1)
    phase = 2 * np.pi * np.cumsum(bass_f[seg]) / fs
    low += 0.5 * np.sin(phase)

    band /= np.sqrt(np.mean(band**2)) or 1.0
    low /= np.sqrt(np.mean(low**2)) or 1.0
    return [s], [0.35 * band, 0.25 * low], frozenset(), frozenset()


def _overlapping_harmonics(rng, n, fs, window_size):
    t = np.arange(n) / fs
    k0 = 2 * int(rng.integers(10, 16))
    k1 = 3 * k0 // 2  # harmonics 2*k1 = 3*k0, 4*k1 = 6*k0, ... coincide
    sig_bins = [h * k0 for h in range(1, 9)]
    noise_bins = [h * k1 for h in range(1, 7)]
    s = np.zeros(n)
    env = _bursts(rng, n, fs, 0.4, 0.9, 0.04, 3)
    for h, k in enumerate(sig_bins, start=1):
        s += (0.15 / h) * env * np.sin(2 * np.pi * k * fs / window_size * t + rng.uniform(0, 2 * np.pi))
    noise = np.zeros(n)
    env = _bursts(rng, n, fs, 0.4, 0.9, 0.04, 3)
    for h, k in enumerate(noise_bins, start=1):
        noise += (0.15 / h) * env * np.sin(2 * np.pi * k * fs / window_size * t + rng.uniform(0, 2 * np.pi))
    return [s], [noise], frozenset(sig_bins), frozenset(noise_bins)


_FIXTURES = {
    FixtureKind.DISJOINT_TONES: _disjoint_tones,
    FixtureKind.PLUCKED_VS_BAND: _plucked_vs_band,
    FixtureKind.OVERLAPPING_HARMONICS: _overlapping_harmonics,
}


def synth_fixture(kind: FixtureKind | str, duration_s: float = 4.0,
                  sample_rate: float = 44100.0, seed: int = 0,
                  window_size: int = 2048) -> Fixture:
    """Deterministic stand-in material for the target and background instruments.

    Tone frequencies in the tonal fixtures are centered on bins of a
    ``window_size``-point STFT.

    Raises:
        ValueError: for an unknown kind or ``duration_s < 1``.
    """
    try:
        kind = FixtureKind(kind)
    except ValueError:
        raise ValueError(f"unknown fixture kind: {kind!r}") from None
    if duration_s < 1:
        raise ValueError(f"duration_s must be at least 1 s, got {duration_s}")
    n = int(round(duration_s * sample_rate))
    rng = np.random.default_rng(seed)
    sigs, noises, sig_bins, noise_bins = _FIXTURES[kind](rng, n, sample_rate, window_size)
    return Fixture(
        TimeSignal(sigs[0], sample_rate),
        [TimeSignal(x, sample_rate) for x in noises],
        sig_bins,
        noise_bins,
    )
