"""Survival curves, tail-exponent fits and moment-divergence probes.

With censoring at a common cap, the empirical survival
S(t) = #(tau > t)/n is exact for every t below the cap, so the tail
exponent can be read off a plain least-squares fit of log S against
log t over a geometric time grid.  Adjacent survival estimates are
positively correlated, so the regression stderr is nominal; acceptance
tolerances are set wide enough to absorb that.

``spitzer_exponent`` returns pi/(4 alpha): the critical moment order of
the wedge exit time for driftless (and asymptotically driftless) walks,
matching the classical Brownian value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .geometry import WedgeSpec
from .simulate import ExitSample


class WindowTooWideError(ValueError):
    """The fit window reaches times with zero empirical survival."""


class InsufficientDataError(ValueError):
    """Too few grid points or too few paths at risk for a stable fit."""


@dataclass
class SurvivalCurve:
    """Exact empirical survival S(t) = #(tau > t) / n_paths on a grid.

    All grid times lie strictly below the batch cap, where censoring
    cannot bias the estimate.
    """

    t: np.ndarray
    s: np.ndarray
    n_at_risk: np.ndarray
    n_paths: int
    t_max: int


def _tau_array(samples: Union[Sequence[ExitSample], np.ndarray]) -> Tuple[np.ndarray, int]:
    if isinstance(samples, np.ndarray):
        raise TypeError("pass ExitSample sequences, or use survival_curve_from_taus")
    taus = np.fromiter((s.tau for s in samples), dtype=np.int64, count=len(samples))
    t_maxes = {s.t_max for s in samples}
    if len(t_maxes) != 1:
        raise ValueError("samples must share a common t_max")
    return taus, t_maxes.pop()


def survival_curve_from_taus(taus: np.ndarray, grid: Sequence[int], t_max: int) -> SurvivalCurve:
    taus = np.asarray(taus, dtype=np.int64)
    if taus.size == 0:
        raise ValueError("need at least one sample")
    grid_arr = np.asarray(sorted(set(int(g) for g in grid)), dtype=np.int64)
    if grid_arr.size == 0:
        raise ValueError("grid must be nonempty")
    if grid_arr[0] < 0:
        raise ValueError("grid times must be nonnegative")
    if grid_arr[-1] >= t_max:
        raise ValueError(f"grid time {grid_arr[-1]} >= t_max {t_max}: survival is "
                         "censored there")
    sorted_taus = np.sort(taus)
    # #(tau > t) via binary search on the sorted exit times
    n_above = taus.size - np.searchsorted(sorted_taus, grid_arr, side="right")
    return SurvivalCurve(
        t=grid_arr,
        s=n_above / taus.size,
        n_at_risk=n_above.astype(np.int64),
        n_paths=int(taus.size),
        t_max=int(t_max),
    )


def survival_curve(samples: Sequence[ExitSample], grid: Sequence[int]) -> SurvivalCurve:
    taus, t_max = _tau_array(samples)
    return survival_curve_from_taus(taus, grid, t_max)


def geometric_grid(t_lo: int, t_hi: int, points_per_octave: int = 8) -> List[int]:
    """Integer time grid with ratio 2**(1/points_per_octave); both
    endpoints are always included."""
    if not (0 < t_lo < t_hi):
        raise ValueError("need 0 < t_lo < t_hi")
    ratio = 2.0 ** (1.0 / points_per_octave)
    out = [int(t_hi)]
    t = float(t_lo)
    while t <= t_hi * (1.0 + 1e-12):
        out.append(int(round(t)))
        t *= ratio
    return sorted(set(out))


@dataclass
class TailFit:
    """Fitted survival exponent: S(t) ~ C t^(-gamma_hat) over the window."""

    gamma_hat: float
    stderr: float
    r_squared: float
    window: Tuple[int, int]
    n_points: int
    n_at_risk_hi: int


MIN_AT_RISK = 50
MIN_POINTS = 5


def fit_tail_exponent(curve: SurvivalCurve, window: Tuple[int, int]) -> TailFit:
    """Least-squares slope of log S vs log t over grid points in window.

    gamma_hat = -slope.  Raises WindowTooWideError if survival hits zero
    inside the window and InsufficientDataError when fewer than
    MIN_POINTS grid points fall in the window or fewer than MIN_AT_RISK
    paths survive at its upper end.
    """
    t_lo, t_hi = int(window[0]), int(window[1])
    if not (0 < t_lo < t_hi):
        raise ValueError("need 0 < t_lo < t_hi")
    if t_hi >= curve.t_max:
        raise ValueError(f"window end {t_hi} >= t_max {curve.t_max}")
    mask = (curve.t >= t_lo) & (curve.t <= t_hi)
    t = curve.t[mask].astype(np.float64)
    s = curve.s[mask]
    n_risk = curve.n_at_risk[mask]
    if t.size < MIN_POINTS:
        raise InsufficientDataError(
            f"only {t.size} grid points inside window [{t_lo}, {t_hi}]; need {MIN_POINTS}"
        )
    if np.any(s <= 0.0):
        raise WindowTooWideError("zero survival inside the fit window; shrink t_hi")
    if int(n_risk[-1]) < MIN_AT_RISK:
        raise InsufficientDataError(
            f"{int(n_risk[-1])} paths at risk at t_hi; need {MIN_AT_RISK}"
        )
    x = np.log(t)
    y = np.log(s)
    n = x.size
    xm = x - x.mean()
    sxx = float(np.dot(xm, xm))
    slope = float(np.dot(xm, y)) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    sse = float(np.dot(resid, resid))
    sst = float(np.dot(y - y.mean(), y - y.mean()))
    stderr = math.sqrt(sse / (n - 2) / sxx) if n > 2 else math.inf
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return TailFit(
        gamma_hat=-slope,
        stderr=stderr,
        r_squared=r2,
        window=(t_lo, t_hi),
        n_points=int(n),
        n_at_risk_hi=int(n_risk[-1]),
    )


def spitzer_exponent(alpha: Union[float, WedgeSpec]) -> float:
    """The critical moment order pi / (4 alpha) of the wedge exit time."""
    if isinstance(alpha, WedgeSpec):
        return float(alpha.pi_den) / (4.0 * alpha.pi_num)
    a = float(alpha)
    if not (0 < a <= math.pi):
        raise ValueError("alpha must lie in (0, pi]")
    return math.pi / (4.0 * a)


@dataclass
class MomentProbeResult:
    s: float
    t_ladder: Tuple[int, ...]
    m_values: Tuple[float, ...]
    growth_per_doubling: Tuple[float, ...]
    classification: str  # converging | diverging | inconclusive


DIVERGING_GROWTH = 1.20   # >= 20% growth per ladder doubling
CONVERGING_DIFF = 0.02    # last two rungs within 2%


def moment_probe(
    samples: Union[Sequence[ExitSample], np.ndarray],
    s: float,
    t_ladder: Sequence[int],
) -> MomentProbeResult:
    """Classify the truncated moment m(T) = mean(min(tau, T)^s) as
    converging or diverging along an increasing ladder of caps.

    Growth ratios are normalized per doubling of T.  ``diverging`` means
    both of the top two normalized growth factors exceed 1.2;
    ``converging`` means the last two rungs agree within 2%; anything
    else is ``inconclusive``.  Thresholds are pragmatic desk-scale
    choices.
    """
    if isinstance(samples, np.ndarray):
        taus = np.asarray(samples, dtype=np.float64)
    else:
        taus = np.fromiter((x.tau for x in samples), dtype=np.float64, count=len(samples))
    ladder = [int(T) for T in t_ladder]
    if len(ladder) < 3:
        raise ValueError("need at least 3 ladder rungs")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("t_ladder must be strictly increasing")
    m_vals = [float(np.mean(np.minimum(taus, T) ** s)) for T in ladder]
    growth = []
    for (t0, t1, m0, m1) in zip(ladder, ladder[1:], m_vals, m_vals[1:]):
        octaves = math.log2(t1 / t0)
        ratio = m1 / m0 if m0 > 0 else math.inf
        growth.append(ratio ** (1.0 / octaves))
    top_two = growth[-2:]
    if all(g >= DIVERGING_GROWTH for g in top_two):
        cls = "diverging"
    elif m_vals[-2] > 0 and abs(m_vals[-1] / m_vals[-2] - 1.0) < CONVERGING_DIFF:
        cls = "converging"
    else:
        cls = "inconclusive"
    return MomentProbeResult(
        s=s, t_ladder=tuple(ladder), m_values=tuple(m_vals),
        growth_per_doubling=tuple(growth), classification=cls,
    )


# ---------------------------------------------------------------------------
# CSV writers (plot-ready)
# ---------------------------------------------------------------------------

def write_survival_csv(path, curve: SurvivalCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "S", "n_at_risk"])
        for t, s, n in zip(curve.t, curve.s, curve.n_at_risk):
            writer.writerow([int(t), repr(float(s)), int(n)])


def write_tailfit_csv(path, fit: TailFit, n_paths: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma_hat", "stderr", "r_squared", "t_lo", "t_hi", "n_paths"])
        writer.writerow([
            repr(fit.gamma_hat), repr(fit.stderr), repr(fit.r_squared),
            fit.window[0], fit.window[1], n_paths,
        ])
