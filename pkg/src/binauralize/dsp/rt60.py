"""RT60 estimation from Schroeder backward integration.

The energy decay curve is the reversed cumulative sum of squared samples
(or of per-frame spectrogram energies). RT60 is extrapolated from a linear
fit on the -5 dB to -25 dB segment of the curve (T20 x 3), which is robust
for short simulated impulse responses. The estimate is scale invariant.
"""

from __future__ import annotations

import numpy as np

from .types import MagnitudeSpectrogram, Waveform

FIT_HIGH_DB = -5.0
FIT_LOW_DB = -25.0
MIN_FIT_POINTS = 10


class NoEnergyError(ValueError):
    pass


class InsufficientDecayError(ValueError):
    pass


def schroeder_rt60(ir: Waveform) -> float:
    if len(ir) == 0:
        raise NoEnergyError("no energy")
    return rt60_from_energy(ir.samples ** 2, 1.0 / ir.sample_rate)


def rt60_from_magspec(x: MagnitudeSpectrogram) -> float:
    """RT60 from per-frame energy (sum of squared magnitudes across bins).

    Needs no phase; the same decay fit at frame resolution
    (hop/sample_rate seconds per point).
    """
    frame_energy = np.sum(x.bins ** 2, axis=1)
    return rt60_from_energy(frame_energy, x.params.hop / x.sample_rate)


def rt60_from_energy(energy: np.ndarray, dt: float) -> float:
    energy = np.asarray(energy, dtype=np.float64)
    total = float(np.sum(energy))
    if total <= 0.0:
        raise NoEnergyError("no energy")
    edc = np.cumsum(energy[::-1])[::-1]
    edc = edc[edc > 0.0]
    edc_db = 10.0 * np.log10(edc / edc[0])
    lo, hi = decay_fit_segment(edc_db)
    t = np.arange(lo, hi + 1) * dt
    y = edc_db[lo:hi + 1]
    slope = _fit_slope(t, y)
    if slope >= 0.0:
        raise InsufficientDecayError("insufficient decay")
    return float(-60.0 / slope)


def decay_fit_segment(edc_db: np.ndarray,
                      high_db: float = FIT_HIGH_DB,
                      low_db: float = FIT_LOW_DB,
                      min_points: int = MIN_FIT_POINTS) -> tuple[int, int]:
    """Inclusive index range of the fit segment on a dB decay curve."""
    below_high = np.nonzero(edc_db < high_db)[0]
    below_low = np.nonzero(edc_db < low_db)[0]
    if below_high.size == 0 or below_low.size == 0:
        raise InsufficientDecayError("insufficient decay")
    lo = int(below_high[0])
    hi = int(below_low[0])
    if hi - lo + 1 < min_points:
        raise InsufficientDecayError("insufficient decay")
    return lo, hi


def _fit_slope(t: np.ndarray, y: np.ndarray) -> float:
    tc = t - t.mean()
    denom = float(np.sum(tc * tc))
    if denom == 0.0:
        raise InsufficientDecayError("insufficient decay")
    return float(np.sum(tc * (y - y.mean())) / denom)
