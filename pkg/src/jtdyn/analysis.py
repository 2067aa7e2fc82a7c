"""Post-processing of observable series: power-law fits, conservation, engine comparison."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import ObservableSeries


class InsufficientSamplesError(ValueError):
    pass


class NonPositiveDataError(ValueError):
    pass


class MissingChannelError(KeyError):
    pass


class EmptyOverlapError(ValueError):
    pass


AUTO_BOUNDS = (1e-4, 0.1)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    coefficient: float
    r_squared: float
    window: tuple[float, float]
    n_samples: int

    def __call__(self, t):
        return self.coefficient * np.asarray(t, dtype=float) ** self.exponent


def auto_window(t: np.ndarray, y: np.ndarray, bounds=AUTO_BOUNDS) -> tuple[float, float]:
    """First contiguous run of samples with ``lo < y < hi``."""
    lo, hi = bounds
    inside = (y > lo) & (y < hi)
    idx = np.flatnonzero(inside)
    if idx.size == 0:
        raise InsufficientSamplesError(f"no samples with {lo} < y < {hi}")
    start = idx[0]
    stop = start
    while stop + 1 < y.size and inside[stop + 1]:
        stop += 1
    return float(t[start]), float(t[stop])


def fit_power_law(series: ObservableSeries, channel: str = "y", window=None, bounds=AUTO_BOUNDS,
                  min_samples: int = 10) -> PowerLawFit:
    """Least-squares line through ``(log t, log y)``.

    ``window=(t_lo, t_hi)`` selects samples by time; ``None`` picks the first
    contiguous run of samples inside ``bounds`` in ordinate.
    """
    t = series.t
    y = series[channel]
    if window is None:
        window = auto_window(t, y, bounds)
    t_lo, t_hi = window
    sel = (t >= t_lo) & (t <= t_hi) & (t > 0)
    if np.any(y[sel] <= 0):
        raise NonPositiveDataError(f"channel {channel!r} has non-positive samples inside {window}")
    if sel.sum() < min_samples:
        raise InsufficientSamplesError(f"{sel.sum()} samples in window {window}, need {min_samples}")
    lt, ly = np.log(t[sel]), np.log(y[sel])
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(np.exp(intercept)), float(r2), (float(t_lo), float(t_hi)), int(sel.sum()))


@dataclass(frozen=True)
class ConservationReport:
    norm_drift: float | None
    energy_drift: float
    jz_drift: float | None
    spin_norm_drift: float | None

    def as_dict(self) -> dict:
        return {"norm_drift": self.norm_drift, "energy_drift": self.energy_drift,
                "jz_drift": self.jz_drift, "spin_norm_drift": self.spin_norm_drift}


def conservation_report(series: ObservableSeries) -> ConservationReport:
    """Maximum drifts over the series.

    Norm and spin norm are measured against 1, energy relative to its initial
    value, ``jz`` as an absolute change from its initial value. Channels other
    than ``energy`` are optional.
    """
    if "energy" not in series:
        raise MissingChannelError("energy")
    e = series["energy"]
    scale = abs(e[0]) if e[0] != 0 else 1.0
    energy_drift = float(np.max(np.abs(e - e[0])) / scale)
    norm_drift = float(np.max(np.abs(series["norm"] - 1))) if "norm" in series else None
    jz_drift = float(np.max(np.abs(series["jz"] - series["jz"][0]))) if "jz" in series else None
    spin = float(np.max(np.abs(series["spin_norm"] - 1))) if "spin_norm" in series else None
    return ConservationReport(norm_drift, energy_drift, jz_drift, spin)


@dataclass(frozen=True)
class Comparison:
    max_abs_deviation: float
    sign_agreement: float
    correlation: float
    n_samples: int


def compare_series(a: ObservableSeries, b: ObservableSeries, channel: str = "y", window=None) -> Comparison:
    """Compare one channel of two series on the coarser series' time stamps.

    Correlation is the uncentred normalised inner product, so a signal and its
    negation give -1.
    """
    lo = max(a.t[0], b.t[0])
    hi = min(a.t[-1], b.t[-1])
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if hi < lo:
        raise EmptyOverlapError("series do not overlap in time")
    ta = a.t[(a.t >= lo) & (a.t <= hi)]
    tb = b.t[(b.t >= lo) & (b.t <= hi)]
    coarse = ta if ta.size <= tb.size else tb
    if coarse.size == 0:
        raise EmptyOverlapError("no common time stamps")
    ya = np.interp(coarse, a.t, a[channel])
    yb = np.interp(coarse, b.t, b[channel])
    dev = float(np.max(np.abs(ya - yb)))
    sign = float(np.mean(np.sign(ya) == np.sign(yb)))
    denom = np.sqrt(np.sum(ya ** 2) * np.sum(yb ** 2))
    corr = float(np.sum(ya * yb) / denom) if denom > 0 else (1.0 if dev == 0 else 0.0)
    return Comparison(dev, sign, corr, int(coarse.size))
