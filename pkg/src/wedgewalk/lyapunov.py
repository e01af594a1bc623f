"""Lyapunov machinery: harmonic cone functions, an almost-linear wedge
function, exact conditional-moment oracles and drift-inequality checkers.

Two scalar fields do all the work.

``f_w(x) = r^w cos(w phi)`` is harmonic, positive on the wedge of
half-angle pi/(2w) and zero on its boundary.  Its one-step conditional
increment moments under a bounded-jump walk admit closed asymptotic
expansions in the drift ``mu`` and covariance ``M``; the expansions (and
nothing else) are what powers the supermartingale/submartingale checks.

``g`` is linear away from the wedge axis (``s x1 - c |x2|``) with the
apex of each level set smoothed into a circular arc; it is Lipschitz,
has gradient norm in [s/(2-s), 1] inside the wedge, and second
derivatives decaying like 1/||x||.  It drives the Lamperti-style
non-existence checks, where an outward drift of size c/||x|| makes
``g(walk)`` a submartingale.

Every checker evaluates conditional expectations *exactly* by enumerating
the finite jump support; Monte Carlo noise never enters an inequality.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .geometry import WedgeSpec, in_modified_wedge, in_wedge
from .models import ModelSpec, covariance_at, drift_at, kernel_at

Vec2 = Tuple[float, float]


# ---------------------------------------------------------------------------
# radial-power harmonic functions f_w
# ---------------------------------------------------------------------------

def _polar(x) -> Tuple[float, float]:
    x1, x2 = float(x[0]), float(x[1])
    return math.hypot(x1, x2), math.atan2(x2, x1)


def _int_coords(x) -> Optional[Tuple[int, int]]:
    x1, x2 = x[0], x[1]
    if isinstance(x1, int) and isinstance(x2, int):
        return x1, x2
    if float(x1).is_integer() and float(x2).is_integer():
        return int(x1), int(x2)
    return None


def f_eval(w: float, x) -> float:
    """r^w cos(w phi), with f(0) = 0.

    For integer w and lattice x the value is computed by exact integer
    arithmetic (real part of (x1 + i x2)^w), so algebraic identities such
    as f_2 = x1^2 - x2^2 hold bit-for-bit and the lattice Laplacian of
    f_2 vanishes exactly.
    """
    if w <= 0:
        raise ValueError("w must be positive")
    if x[0] == 0 and x[1] == 0:
        return 0.0
    if float(w).is_integer():
        ints = _int_coords(x)
        if ints is not None:
            a, b = ints
            re, im = 1, 0
            for _ in range(int(w)):
                re, im = re * a - im * b, re * b + im * a
            return float(re)
    r, phi = _polar(x)
    return r ** w * math.cos(w * phi)


def f_grad(w: float, x) -> Tuple[float, float]:
    """Gradient (w r^{w-1} cos((w-1)phi), -w r^{w-1} sin((w-1)phi))."""
    if x[0] == 0 and x[1] == 0:
        if w < 2:
            raise ValueError("gradient undefined at the origin for w < 2")
        return (0.0, 0.0)
    r, phi = _polar(x)
    factor = w * r ** (w - 1.0)
    return (factor * math.cos((w - 1.0) * phi), -factor * math.sin((w - 1.0) * phi))


def f_hessian(w: float, x) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Hessian of f_w; trace is identically zero (harmonicity).

    Mixed derivative is -w(w-1) r^{w-2} sin((w-2) phi); check against the
    cubic case f_3 = x1^3 - 3 x1 x2^2 where D1 D2 f_3 = -6 x2.
    """
    if x[0] == 0 and x[1] == 0:
        if w < 2:
            raise ValueError("hessian undefined at the origin for w < 2")
        if w == 2:
            return ((2.0, 0.0), (0.0, -2.0))
        return ((0.0, 0.0), (0.0, 0.0))
    r, phi = _polar(x)
    factor = w * (w - 1.0) * r ** (w - 2.0)
    d11 = factor * math.cos((w - 2.0) * phi)
    d12 = -factor * math.sin((w - 2.0) * phi)
    return ((d11, d12), (d12, -d11))


def eps_lower(alpha, w: float) -> float:
    """cos(w alpha), the positive lower-bound constant with
    eps * r^w <= f_w <= r^w on the wedge of half-angle alpha.

    Defined only for 0 < w < pi/(2 alpha); at and beyond the boundary the
    bound degenerates to zero and a ValueError is raised.
    """
    a = alpha.alpha if isinstance(alpha, WedgeSpec) else float(alpha)
    if not (0 < a <= math.pi):
        raise ValueError("alpha must lie in (0, pi]")
    if w <= 0 or w * a >= math.pi / 2:
        raise ValueError("requires 0 < w < pi/(2 alpha)")
    return math.cos(w * a)


def f_hat_eval(w: float, wedge: WedgeSpec, x) -> float:
    """f_w truncated to the open wedge: f_w(x) * 1{x in W(alpha)}."""
    if not in_wedge(wedge, x):
        return 0.0
    return f_eval(w, x)


@dataclass(frozen=True)
class HarmonicParams:
    """A (w, alpha, gamma) triple for powers of the cone harmonic f_w.

    ``regime`` records the pairing context: 'interior' requires
    w < pi/(2 alpha) (the wedge sandwich bound applies and f_w^gamma is
    defined on the whole wedge); 'boundary' requires w = pi/(2 alpha)
    exactly (f_w vanishes on the wedge boundary and only the truncated
    power f_hat_w^gamma is used).
    """

    w: float
    alpha: float
    gamma: float
    regime: str = "interior"

    def __post_init__(self):
        if not (0 < self.alpha <= math.pi):
            raise ValueError("alpha must lie in (0, pi]")
        if self.w <= 0:
            raise ValueError("w must be positive")
        boundary_w = math.pi / (2.0 * self.alpha)
        if self.regime == "interior":
            if not self.w < boundary_w:
                raise ValueError("interior regime requires w < pi/(2 alpha)")
        elif self.regime == "boundary":
            if self.w != boundary_w:
                raise ValueError("boundary regime requires w = pi/(2 alpha)")
        else:
            raise ValueError("regime must be 'interior' or 'boundary'")

    @property
    def eps_lower(self) -> float:
        if self.regime != "interior":
            raise ValueError("the sandwich constant exists only for w < pi/(2 alpha)")
        return eps_lower(self.alpha, self.w)


# ---------------------------------------------------------------------------
# the almost-linear function g
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GFunctionParams:
    """Cached trigonometry for g on a wedge of half-angle alpha < pi/2.

    The plane splits into: the complement of the wedge (g = 0), an outer
    region |x2| >= slope * x1 where g is linear, and an inner arc region
    where level sets are circular arcs; slope = s c / (1 + c^2).
    """

    alpha: float
    s: float = field(init=False)
    c: float = field(init=False)
    boundary_slope: float = field(init=False)

    def __post_init__(self):
        if not (0 < self.alpha < math.pi / 2):
            raise ValueError("alpha must lie in (0, pi/2)")
        s = math.sin(self.alpha)
        c = math.cos(self.alpha)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "boundary_slope", s * c / (1.0 + c * c))

    def in_open_wedge(self, x) -> bool:
        x1, x2 = float(x[0]), float(x[1])
        if x1 <= 0:
            return False
        return x1 * x1 > (self.c * self.c) * (x1 * x1 + x2 * x2)

    def in_arc_region(self, x) -> bool:
        """Inside the wedge, at or below the region-boundary ray."""
        return self.in_open_wedge(x) and abs(float(x[1])) <= self.boundary_slope * float(x[0])

    @property
    def grad_floor(self) -> float:
        """Lower bound s/(2-s) for ||grad g|| inside the wedge."""
        return self.s / (2.0 - self.s)

    @property
    def d1_floor(self) -> float:
        """Lower bound R = 2 / ((4/s) - s) for the e1 derivative."""
        return 2.0 / (4.0 / self.s - self.s)


def g_eval(p: GFunctionParams, x) -> float:
    """The almost-linear function: 0 off the wedge; s x1 - c |x2| in the
    outer region; in the arc region the larger root k of

        (4/s^2 - 1) k^2 - (4 x1 / s) k + (x1^2 + x2^2) = 0,

    i.e. the level whose circular arc passes through x.  The larger root
    is the one satisfying the minor-arc pinning
    k ((2/s) - 1) <= x1 <= k ((2/s) - s); the two branch formulas agree
    on the region-boundary ray.
    """
    x1, x2 = float(x[0]), float(x[1])
    if not p.in_open_wedge(x):
        return 0.0
    if abs(x2) > p.boundary_slope * x1:
        return p.s * x1 - p.c * abs(x2)
    s = p.s
    a = 4.0 / (s * s) - 1.0
    # discriminant/4 reduces to r^2 - (4/s^2) x2^2, positive in the region
    disc = (x1 * x1 + x2 * x2) - (4.0 / (s * s)) * x2 * x2
    return (2.0 * x1 / s + math.sqrt(disc)) / a


def g_grad(p: GFunctionParams, x) -> Tuple[float, float]:
    """Gradient of g: (s, -sign(x2) c) in the outer region; in the arc
    region (1/D) (-(2g/s - x1), x2) with D = g + (2/s)(x1 - 2g/s) < 0.

    Returns (0, 0) off the wedge.  On the region-boundary ray the arc
    formula is used (the one-sided limits coincide there).
    """
    x1, x2 = float(x[0]), float(x[1])
    if not p.in_open_wedge(x):
        return (0.0, 0.0)
    if abs(x2) > p.boundary_slope * x1:
        return (p.s, -p.c if x2 > 0 else p.c)
    g = g_eval(p, x)
    d = g + (2.0 / p.s) * (x1 - 2.0 * g / p.s)
    return (-((2.0 * g / p.s) - x1) / d, x2 / d)


# ---------------------------------------------------------------------------
# exact moment oracle and analytic expansions
# ---------------------------------------------------------------------------

def exact_increment_moment(m, h: Callable[[Vec2], float], x, p: int) -> float:
    """E[(h(walk_{t+1}) - h(walk_t))^p | walk_t = x], exactly.

    Bounded jumps make this a finite sum over the support; it is the
    noise-free reference against which every expansion and inequality is
    judged.  ``m`` needs only a ``kernel_at(x)`` method (any ModelSpec, or
    a hand-built kernel family).
    """
    if p not in (1, 2, 3):
        raise ValueError("p must be 1, 2 or 3")
    kern = m.kernel_at(x)
    hx = h(x)
    total = 0.0
    for step, prob in zip(kern.steps, kern.probs):
        diff = h((x[0] + step[0], x[1] + step[1])) - hx
        total += prob * diff ** p
    return total


def expansion_mean(w: float, x, mu, M) -> float:
    """Displayed terms of the first-moment expansion of f_w increments:

        w r^{w-1} (mu1 cos((w-1)phi) - mu2 sin((w-1)phi))
      + (1/2)(M11 - M22) w(w-1) r^{w-2} cos((w-2)phi)
      - M12 w(w-1) r^{w-2} sin((w-2)phi)

    (the M12 coefficient is the mixed derivative of f_w, see f_hessian).
    The omitted remainder is O(r^{w-3}).
    """
    r, phi = _polar(x)
    if r == 0.0:
        raise ValueError("expansion undefined at the origin")
    t1 = w * r ** (w - 1.0) * (
        mu[0] * math.cos((w - 1.0) * phi) - mu[1] * math.sin((w - 1.0) * phi)
    )
    ww = w * (w - 1.0) * r ** (w - 2.0)
    t2 = 0.5 * (M[0][0] - M[1][1]) * ww * math.cos((w - 2.0) * phi)
    t3 = -M[0][1] * ww * math.sin((w - 2.0) * phi)
    return t1 + t2 + t3


def expansion_second(w: float, x, M) -> float:
    """Displayed terms of the second-moment expansion:

        w^2 r^{2w-2} (M11 cos^2((w-1)phi) + M22 sin^2((w-1)phi))
      - M12 w^2 r^{2w-2} sin(2(w-1)phi)

    The omitted remainder is O(r^{2w-3}).
    """
    r, phi = _polar(x)
    if r == 0.0:
        raise ValueError("expansion undefined at the origin")
    a = (w - 1.0) * phi
    ww = w * w * r ** (2.0 * w - 2.0)
    return ww * (M[0][0] * math.cos(a) ** 2 + M[1][1] * math.sin(a) ** 2) \
        - M[0][1] * ww * math.sin(2.0 * a)


def expansion_gamma(w: float, gamma: float, x, mu, M) -> float:
    """Displayed terms of the first-moment expansion for f_w^gamma:

        gamma f^{gamma-1} * [mean expansion]
      + (1/2) gamma (gamma-1) f^{gamma-2} * [second-moment expansion]

    (five displayed terms in total; remainder O(f^{gamma-3} r^{3w-3})).
    At gamma = 1 this collapses to ``expansion_mean`` exactly, sharing
    the same code path.
    """
    fx = f_eval(w, x)
    if fx <= 0.0:
        raise ValueError("requires f_w(x) > 0 (x inside the wedge of half-angle pi/(2w))")
    first = gamma * fx ** (gamma - 1.0) * expansion_mean(w, x, mu, M)
    second = 0.5 * gamma * (gamma - 1.0) * fx ** (gamma - 2.0) * expansion_second(w, x, M)
    return first + second


# ---------------------------------------------------------------------------
# reports and inequality checkers
# ---------------------------------------------------------------------------

@dataclass
class LyapunovReport:
    """Pointwise comparison of the exact oracle against an expansion.

    residual = exact - analytic (sign preserved).  ``margin`` is the
    check-specific inequality slack; its required sign is documented by
    the producing checker.
    """

    point: Tuple[int, int]
    r: float
    phi: float
    exact: float
    analytic: float
    residual: float
    order: str
    margin: Optional[float] = None


@dataclass
class DriftCheckResult:
    reports: List[LyapunovReport]
    skipped: List[Tuple[float, float]]  # (r, phi) pairs that fell outside the wedge


def write_reports_csv(path, reports: Sequence[LyapunovReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "phi", "exact", "analytic", "residual", "margin"])
        for rep in reports:
            writer.writerow([
                repr(rep.r), repr(rep.phi), repr(rep.exact), repr(rep.analytic),
                repr(rep.residual), "" if rep.margin is None else repr(rep.margin),
            ])


def _grid_points(wedge: WedgeSpec, radii, angles):
    """Lattice points nearest to (r cos phi, r sin phi); out-of-wedge
    points are yielded with inside=False so callers can record skips."""
    for r in radii:
        for phi in angles:
            pt = (round(r * math.cos(phi)), round(r * math.sin(phi)))
            yield r, phi, pt, in_modified_wedge(wedge, pt)


def check_supermartingale_subcritical(
    m: ModelSpec,
    wedge: WedgeSpec,
    w: float,
    gamma: float,
    radii: Sequence[float],
    angles: Sequence[float],
) -> DriftCheckResult:
    """Verify the strict-supermartingale drift of f_w^gamma pointwise.

    For w < pi/(2 alpha) and gamma in (0, 1), small drift makes the exact
    increment mean at most -C f_w^{gamma - 2/w} with C taken as half the
    leading analytic coefficient (1/2) gamma (1-gamma) w^2 sigma^2.  Each
    report's margin is  exact + C f^{gamma-2/w};  the inequality holds at
    a point iff the margin is negative.
    """
    alpha = wedge.alpha
    if not (0 < w * alpha < math.pi / 2):
        raise ValueError("requires w < pi/(2 alpha)")
    if not (0 < gamma < 1):
        raise ValueError("requires gamma in (0, 1)")
    if m.family not in ("zero_drift", "subcritical"):
        raise ValueError("checker applies to zero_drift and subcritical families")
    sigma2 = covariance_at(m, (0, 0))[0][0]
    coeff = 0.5 * gamma * (1.0 - gamma) * w * w * sigma2
    c_half = 0.5 * coeff
    h = lambda z: f_eval(w, z) ** gamma
    reports: List[LyapunovReport] = []
    skipped: List[Tuple[float, float]] = []
    for r, phi, pt, inside in _grid_points(wedge, radii, angles):
        if not inside:
            skipped.append((r, phi))
            continue
        exact = exact_increment_moment(m, h, pt, 1)
        analytic = expansion_gamma(w, gamma, pt, drift_at(m, pt), covariance_at(m, pt))
        fx = f_eval(w, pt)
        margin = exact + c_half * fx ** (gamma - 2.0 / w)
        rr, pphi = _polar(pt)
        reports.append(LyapunovReport(
            point=pt, r=rr, phi=pphi, exact=exact, analytic=analytic,
            residual=exact - analytic, order="f^(gamma-3) r^(3w-3)", margin=margin,
        ))
    return DriftCheckResult(reports, skipped)


def check_submartingale_fhat(
    m: ModelSpec,
    wedge: WedgeSpec,
    gamma: float,
    radii: Sequence[float],
    angles: Sequence[float],
) -> DriftCheckResult:
    """Verify the submartingale drift of the truncated power
    (f_w 1{in wedge})^gamma at the exponent w = pi/(2 alpha).

    Valid for gamma > 1 and ||x|| large; the angle grid should include
    points near +-alpha, where the truncation mechanism (jumps out of the
    wedge cost at most f^gamma, which is small near the boundary) carries
    the bound.  Each report's margin is the exact increment itself; the
    inequality holds at a point iff the margin is nonnegative.  No
    analytic expansion is valid up to the boundary, so ``analytic`` is
    NaN for these reports.
    """
    if gamma <= 1:
        raise ValueError("requires gamma > 1")
    w = float(wedge.half_angle_power())
    h = lambda z: f_hat_eval(w, wedge, z) ** gamma
    reports: List[LyapunovReport] = []
    skipped: List[Tuple[float, float]] = []
    for r, phi, pt, inside in _grid_points(wedge, radii, angles):
        if not inside:
            skipped.append((r, phi))
            continue
        exact = exact_increment_moment(m, h, pt, 1)
        rr, pphi = _polar(pt)
        reports.append(LyapunovReport(
            point=pt, r=rr, phi=pphi, exact=exact, analytic=math.nan,
            residual=math.nan, order="", margin=exact,
        ))
    return DriftCheckResult(reports, skipped)


@dataclass
class LampertiRow:
    state: Tuple[int, int]
    y: float
    inc_2p0: float  # E[Y'^{2 p0} - Y^{2 p0}]
    inc_2: float    # E[Y'^2    - Y^2]
    inc_2r: float   # E[Y'^{2 r} - Y^{2 r}]


@dataclass
class LampertiReport:
    """Exact evaluation of the four Lamperti-style conditions for Y = h(walk).

    existence   : E[dY^{2p0}] <= -C Y^{2p0-2} with some C > 0
    noncon1     : E[dY^{2p0}] >= 0
    noncon2     : E[dY^2]     >= -C            (C fitted, always satisfiable)
    noncon3     : E[dY^{2r}]  <= D Y^{2r-2}    (D fitted over the sample)
    """

    p0: float
    r_exp: float
    rows: List[LampertiRow]
    existence_holds: bool
    existence_C: float
    noncon1_holds: bool
    noncon1_min: float
    noncon2_C: float
    noncon3_D: float

    @property
    def nonexistence_holds(self) -> bool:
        """All three conditions of the non-existence criterion."""
        return self.noncon1_holds and math.isfinite(self.noncon2_C) \
            and math.isfinite(self.noncon3_D)


def check_lamperti(
    m: ModelSpec,
    h: Callable[[Vec2], float],
    region: Callable[[Vec2], bool],
    p0: float,
    r_exp: float,
    states: Sequence[Tuple[int, int]],
) -> LampertiReport:
    """Evaluate the Lamperti increment conditions exactly over a sample.

    ``h`` must be nonnegative on ``region`` and evaluable on each state
    plus the jump support.  Constants are fitted as the worst case over
    the sample: existence_C = min(-inc_2p0 / y^{2p0-2}) (positive iff the
    negative-drift condition holds everywhere), noncon2_C = max(0, -min
    inc_2), noncon3_D = max(inc_2r / y^{2r-2}).
    """
    if r_exp <= 1:
        raise ValueError("requires r_exp > 1")
    rows: List[LampertiRow] = []
    for st in states:
        st = (int(st[0]), int(st[1]))
        if not region(st):
            raise ValueError(f"state {st} outside the declared region")
        y = h(st)
        if y < 0:
            raise ValueError(f"h must be nonnegative on the region; h({st}) = {y}")
        d_2p0 = exact_increment_moment(m, lambda z: h(z) ** (2.0 * p0), st, 1)
        d_2 = exact_increment_moment(m, lambda z: h(z) ** 2.0, st, 1)
        d_2r = exact_increment_moment(m, lambda z: h(z) ** (2.0 * r_exp), st, 1)
        rows.append(LampertiRow(st, y, d_2p0, d_2, d_2r))
    ex_c = min((-row.inc_2p0 / row.y ** (2.0 * p0 - 2.0)) for row in rows)
    n1_min = min(row.inc_2p0 for row in rows)
    n2_c = max(0.0, -min(row.inc_2 for row in rows))
    n3_d = max(row.inc_2r / row.y ** (2.0 * r_exp - 2.0) for row in rows)
    return LampertiReport(
        p0=p0, r_exp=r_exp, rows=rows,
        existence_holds=ex_c > 0.0, existence_C=ex_c,
        noncon1_holds=n1_min >= 0.0, noncon1_min=n1_min,
        noncon2_C=n2_c, noncon3_D=n3_d,
    )


def worst_margin(result: DriftCheckResult) -> float:
    """Largest margin over the evaluated grid (for <= 0 style checks)."""
    return max(rep.margin for rep in result.reports)


def min_margin(result: DriftCheckResult) -> float:
    """Smallest margin over the evaluated grid (for >= 0 style checks)."""
    return min(rep.margin for rep in result.reports)
