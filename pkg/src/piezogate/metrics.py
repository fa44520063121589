"""SNR and SDR measurements for the gated output.

Zero denominators yield ``math.inf`` and zero numerators ``-math.inf``; no
epsilon or cap is applied to the energy ratios.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .gate import GateParams
from .pipeline import MaskSequence, build_mask, process_with_mask
from .spectral import FrameParams, TimeSignal

CSV_COLUMNS = ("th", "d", "r", "mode", "snr_o_db", "snr_p_db", "sdr_m_db", "sdr_p_db")


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, TimeSignal) else np.asarray(x, dtype=np.float64)


def energy_ratio_db(num, den) -> float:
    """``10*log10(sum(num**2) / sum(den**2))``."""
    a, b = _samples(num), _samples(den)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    e_num = float(np.sum(a * a))
    e_den = float(np.sum(b * b))
    if e_den == 0:
        return math.inf
    if e_num == 0:
        return -math.inf
    return 10.0 * math.log10(e_num / e_den)


def snr_pair(s: TimeSignal, n: TimeSignal, mask: MaskSequence) -> tuple[float, float]:
    """SNR before and after gating, each part gated separately under ``mask``."""
    snr_o = energy_ratio_db(s, n)
    snr_p = energy_ratio_db(process_with_mask(s, mask), process_with_mask(n, mask))
    return snr_o, snr_p


def sdr_m(s: TimeSignal, mask: MaskSequence) -> float:
    gs = process_with_mask(s, mask)
    return energy_ratio_db(s, s.samples - gs.samples)


def sdr_p(s: TimeSignal, p: TimeSignal) -> float:
    """SDR of the pickup against the clean signal after matching their RMS."""
    if len(s) != len(p):
        raise ValueError(f"length mismatch: {len(s)} vs {len(p)}")
    p_rms = p.rms()
    if p_rms == 0:
        raise ValueError("pickup signal is silent; loudness matching is undefined")
    p_scaled = p.samples * (s.rms() / p_rms)
    residual = s.samples - p_scaled
    # A residual at the rounding level of the rescale itself counts as zero.
    if np.sum(residual**2) <= (4 * np.finfo(float).eps) ** 2 * s.energy():
        return math.inf
    return energy_ratio_db(s, residual)


@dataclass
class EvalReport:
    snr_o_db: float
    snr_p_db: float
    sdr_m_db: float
    sdr_p_db: float
    gate: GateParams = field(default_factory=GateParams)
    frame: FrameParams = field(default_factory=FrameParams)

    @property
    def improvement_db(self) -> float:
        return self.snr_p_db - self.snr_o_db

    def csv_row(self) -> list[str]:
        return [
            repr(float(self.gate.th)),
            repr(float(self.gate.d)),
            repr(float(self.gate.r)),
            self.gate.mode.value,
            format_db(self.snr_o_db),
            format_db(self.snr_p_db),
            format_db(self.sdr_m_db),
            format_db(self.sdr_p_db),
        ]


def format_db(value: float) -> str:
    """Two-decimal rendering, ``inf``/``-inf`` for the infinity markers."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.2f}"


def evaluate(mic_signal_part: TimeSignal, mic_noise_part: TimeSignal, pickup: TimeSignal,
             fparams: FrameParams | None = None,
             gparams: GateParams | None = None) -> EvalReport:
    """All four figures for one parameter setting.

    The mask is built once from ``pickup`` and shared by both gated parts.
    ``pickup`` must already be aligned and of the same length as the parts.
    A silent pickup leaves the pickup SDR undefined and reported as NaN.
    """
    fparams = fparams or FrameParams(sample_rate=mic_signal_part.sample_rate)
    gparams = gparams or GateParams()
    mask = build_mask(pickup, fparams, gparams)
    snr_o, snr_p = snr_pair(mic_signal_part, mic_noise_part, mask)
    return EvalReport(
        snr_o_db=snr_o,
        snr_p_db=snr_p,
        sdr_m_db=sdr_m(mic_signal_part, mask),
        sdr_p_db=sdr_p(mic_signal_part, pickup) if pickup.rms() > 0 else math.nan,
        gate=gparams,
        frame=fparams,
    )


def sweep(mic_signal_part: TimeSignal, mic_noise_part: TimeSignal, pickup: TimeSignal,
          param: str, values, fparams: FrameParams | None = None,
          gparams: GateParams | None = None, workers: int = 1) -> list[EvalReport]:
    """Evaluate at each value of one gate parameter, others held fixed.

    Reports come back in the order of ``values`` regardless of ``workers``.
    """
    if param not in ("th", "d", "r"):
        raise ValueError(f"can only sweep th, d or r, got {param!r}")
    base = gparams or GateParams()
    points = [replace(base, **{param: float(v)}) for v in values]

    def run(gp):
        return evaluate(mic_signal_part, mic_noise_part, pickup, fparams, gp)

    if workers <= 1:
        return [run(gp) for gp in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, points))
