"""Per-bin gating driven by pickup magnitudes.

Two modes are provided. The hard gate passes a bin when the pickup magnitude
reaches the threshold and blocks it otherwise. The smooth gate keeps a
reducing coefficient per bin that decays geometrically by ``d`` while the
pickup is below threshold and relaxes toward 1 as ``a <- 1 - r + r*a`` while
it is at or above threshold, starting from ``a = 1``.

Magnitudes are linear ``|Y|`` under the unnormalized transform of
:mod:`piezogate.spectral`, for inputs in nominal full scale [-1, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class GateMode(str, enum.Enum):
    HARD = "hard"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class GateParams:
    th: float = 4.0
    d: float = 0.95
    r: float = 0.1
    mode: GateMode = GateMode.SMOOTH

    def __post_init__(self):
        if not np.isfinite(self.th) or self.th < 0:
            raise ValueError(f"th must be a finite value >= 0, got {self.th}")
        if not 0 < self.d < 1:
            raise ValueError(f"d must lie in (0, 1), got {self.d}")
        if not 0 < self.r < 1:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        object.__setattr__(self, "mode", GateMode(self.mode))


@dataclass
class GateState:
    """Reducing coefficients, one per frequency bin."""

    a: np.ndarray

    @property
    def bins(self) -> int:
        return self.a.shape[0]


def init_state(bins: int) -> GateState:
    if bins <= 0:
        raise ValueError(f"bins must be positive, got {bins}")
    return GateState(np.ones(bins))


def _check_mags(pickup_mags) -> np.ndarray:
    mags = np.asarray(pickup_mags, dtype=np.float64)
    if np.any(np.isnan(mags)):
        raise ValueError("pickup magnitudes contain NaN")
    if np.any(mags < 0):
        raise ValueError("pickup magnitudes must be non-negative")
    return mags


def update_smooth(state: GateState, pickup_mags, params: GateParams) -> np.ndarray:
    """Advance ``state`` by one frame and return the new coefficients.

    Ties (``|Y| == th``) take the rise branch. ``state.a`` is updated in place;
    the returned array is a copy.
    """
    mags = _check_mags(pickup_mags)
    if mags.shape != state.a.shape:
        raise ValueError(
            f"length mismatch: {mags.shape[0]} magnitudes for {state.bins} bins"
        )
    above = mags >= params.th
    a = state.a
    a[:] = np.where(above, 1.0 - params.r + params.r * a, params.d * a)
    return a.copy()


def update_hard(pickup_mags, th: float) -> np.ndarray:
    """Binary mask: 1 where ``|Y| >= th``, else 0."""
    mags = _check_mags(pickup_mags)
    return (mags >= th).astype(np.float64)


def apply_mask(mic_frame, mask) -> np.ndarray:
    """Scale each complex bin by its real gain; phases are untouched."""
    frame = np.asarray(mic_frame, dtype=np.complex128)
    mask = np.asarray(mask, dtype=np.float64)
    if frame.shape != mask.shape:
        raise ValueError(f"length mismatch: frame {frame.shape}, mask {mask.shape}")
    return frame * mask
