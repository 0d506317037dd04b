"""Decay rates, periods and steady amplitudes extracted from error time series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import signal, stats

LN10 = math.log(10.0)


class NonStationaryError(ValueError):
    """The tail of a series still drifts, so no steady amplitude exists."""


@dataclass(frozen=True)
class DecayEstimate:
    rate: float
    rate_base10: float
    period: Optional[float]
    fit_window: tuple[float, float]
    r_squared: float
    n_peaks: int = 0

    @property
    def oscillatory(self) -> bool:
        return self.period is not None


def find_peaks_relative(y: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Interior local maxima standing out from their surroundings by a relative ``rel``."""
    logy = np.log(y)
    idx, _ = signal.find_peaks(logy, prominence=math.log1p(rel))
    return idx


def _linfit(t: np.ndarray, logy: np.ndarray) -> tuple[float, float, float]:
    res = stats.linregress(t, logy)
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def estimate_decay(t: Sequence[float], y: Sequence[float], window: Optional[tuple[float, float]] = None,
                   skip_fraction: float = 0.1, floor: float = 1e-11, min_samples: int = 20,
                   peak_rel: float = 1e-6) -> DecayEstimate:
    """Fit ``y ~ exp(-rate t)`` by least squares on ``log y``.

    The default window drops the first ``skip_fraction`` of the run. Samples
    after the series first drops below ``floor * max(y)`` are discarded, since
    they only carry round-off. If at least three peaks are present the line
    goes through the peaks and the period is twice their mean spacing (the
    series is a norm, so it peaks twice per period).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1D arrays of equal length")
    if window is None:
        window = (t[0] + skip_fraction * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    tw, yw = t[sel], y[sel]
    if tw.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples in the window, got {tw.size}")
    if not np.all(np.isfinite(yw)) or np.any(yw <= 0):
        raise ValueError("series values must be finite and positive")
    below = np.nonzero(yw < floor * np.max(y))[0]
    if below.size:
        tw, yw = tw[: below[0]], yw[: below[0]]
        if tw.size < min_samples:
            raise ValueError(f"series reaches the noise floor after {tw.size} samples; need {min_samples}")
    peaks = find_peaks_relative(yw, peak_rel)
    period = None
    if peaks.size >= 3:
        tp = tw[peaks]
        slope, _, r2 = _linfit(tp, np.log(yw[peaks]))
        period = 2.0 * float(np.mean(np.diff(tp)))
    else:
        slope, _, r2 = _linfit(tw, np.log(yw))
    rate = -slope
    return DecayEstimate(
        rate=rate,
        rate_base10=rate / LN10,
        period=period,
        fit_window=(float(tw[0]), float(tw[-1])),
        r_squared=r2,
        n_peaks=int(peaks.size),
    )


def fit_rate_vs_length(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Ordinary least squares ``rate = slope * L + intercept``; returns (slope, intercept, r^2)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (L, rate) pairs")
    if pts.shape[0] < 3:
        raise ValueError(f"need at least 3 points, got {pts.shape[0]}")
    res = stats.linregress(pts[:, 0], pts[:, 1])
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def steady_amplitude(t: Sequence[float], y: Sequence[float], t_min: float, signed: bool = True,
                     trend_tol: float = 0.02) -> float:
    """Amplitude of the late-time oscillation of ``y`` for ``t >= t_min``.

    For a signed signal this is half the peak-to-trough range, otherwise the
    maximum. The tail is split in halves; if their amplitudes differ by more
    than ``trend_tol`` (relative) the series is reported as non-stationary.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tail = y[t >= t_min]
    if tail.size < 4:
        raise ValueError(f"need samples past t_min={t_min}")

    def amp(v):
        return 0.5 * (v.max() - v.min()) if signed else float(v.max())

    a = amp(tail)
    half = tail.size // 2
    a1, a2 = amp(tail[:half]), amp(tail[half:])
    if a == 0.0:
        return 0.0
    if abs(a1 - a2) > trend_tol * a:
        raise NonStationaryError(
            f"tail amplitude drifts from {a1:.6g} to {a2:.6g} (tolerance {trend_tol:.0%})"
        )
    return float(a)
