"""Scalar observables of g2(tau) curves: g2(0), first-peak width, peak train."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regression import G2Series

PEAK_EPS = 1e-3
MIN_SAMPLES_ACROSS_PEAK = 8
MIN_SERIES_LENGTH = 100


class NoPeakError(ValueError):
    pass


class UnresolvedPeakError(ValueError):
    pass


@dataclass(frozen=True)
class PeakMetrics:
    g2_zero: float
    peak_tau: float
    peak_height: float
    fwhm: float
    peak_spacing: float | None


def _arrays(series):
    if isinstance(series, G2Series):
        return np.asarray(series.tau, dtype=float), np.asarray(series.g2, dtype=float)
    tau, g2 = series
    return np.asarray(tau, dtype=float), np.asarray(g2, dtype=float)


def g2_at_zero(series) -> float:
    tau, g2 = _arrays(series)
    if len(tau) == 0 or tau[0] != 0.0:
        raise ValueError("series has no tau = 0 sample")
    return float(g2[0])


def _first_peak(g2: np.ndarray, eps: float) -> int:
    n = len(g2)
    for k in range(n - 1):
        rising = k == 0 or g2[k] >= g2[k - 1]
        if rising and g2[k] > g2[k + 1] and g2[k] > 1.0 + eps:
            return k
    raise NoPeakError("g2 never forms a peak above 1 + eps")


def _crossing(tau, g2, k_in, k_out, level):
    # linear interpolation between an inside (>= level) and outside sample
    t0, t1 = tau[k_in], tau[k_out]
    y0, y1 = g2[k_in], g2[k_out]
    return t0 + (level - y0) * (t1 - t0) / (y1 - y0)


def first_peak_fwhm(series, eps: float = PEAK_EPS) -> float:
    """Full width of the first g2 feature at half height above the baseline 1.

    The half-height level is ``1 + (peak - 1) / 2``.  When the peak sits at
    tau = 0, or the curve never drops below that level before the peak, the
    width is twice the half-width on the right-hand flank.
    """
    tau, g2 = _arrays(series)
    if len(tau) < MIN_SERIES_LENGTH:
        raise UnresolvedPeakError(f"need at least {MIN_SERIES_LENGTH} samples, got {len(tau)}")
    p = _first_peak(g2, eps)
    level = 1.0 + 0.5 * (g2[p] - 1.0)

    right = np.nonzero(g2[p + 1 :] <= level)[0]
    if len(right) == 0:
        raise UnresolvedPeakError("series ends before the first peak falls to half height")
    kr = p + 1 + right[0]
    t_right = _crossing(tau, g2, kr - 1, kr, level)

    left = np.nonzero(g2[:p] <= level)[0]
    if p == 0 or len(left) == 0:
        width = 2.0 * (t_right - tau[p])
        samples = 2 * (kr - p)
    else:
        kl = left[-1]
        t_left = _crossing(tau, g2, kl + 1, kl, level)
        width = t_right - t_left
        samples = kr - kl
    if samples < MIN_SAMPLES_ACROSS_PEAK:
        raise UnresolvedPeakError(f"only {samples} samples across the peak; refine the tau grid")
    return float(width)


def peak_positions(series, eps: float = PEAK_EPS) -> list[float]:
    """tau of every interior strict local maximum higher than 1 + eps."""
    tau, g2 = _arrays(series)
    if len(tau) == 0:
        raise ValueError("empty series")
    if len(tau) < 3:
        return []
    mid = g2[1:-1]
    mask = (mid > g2[:-2]) & (mid > g2[2:]) & (mid > 1.0 + eps)
    return [float(t) for t in tau[1:-1][mask]]


def peak_metrics(series, eps: float = PEAK_EPS) -> PeakMetrics:
    tau, g2 = _arrays(series)
    p = _first_peak(g2, eps)
    peaks = peak_positions((tau, g2), eps)
    spacing = float(np.mean(np.diff(peaks))) if len(peaks) >= 2 else None
    return PeakMetrics(
        g2_zero=g2_at_zero((tau, g2)),
        peak_tau=float(tau[p]),
        peak_height=float(g2[p]),
        fwhm=first_peak_fwhm((tau, g2), eps),
        peak_spacing=spacing,
    )
