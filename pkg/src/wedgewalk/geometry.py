"""Planar lattice geometry: polar coordinates, wedges, rotated rectangles.

The central object is the open wedge with apex at the origin and axis
``e1``:

    W(alpha) = { x : e1 . x > ||x|| cos(alpha) },   alpha in (0, pi),

together with the degenerate case ``alpha = pi`` where the "wedge" is
the plane minus a thickened half-line

    H_b = { x : x1 <= 0, |x2| <= b },    W(pi) = R^2 \\ H_b.

Boundary conventions matter for exit counts, so they are fixed here once:
the wedge is open (strict inequality), the half-line H_b is closed, and
the origin is never inside a wedge with ``alpha < pi``.

Wedge angles are stored as exact rational multiples of pi.  For the
common angles whose cos^2 is rational the membership test reduces to an
exact integer comparison, which keeps lattice points on the boundary
(e.g. x1 = |x2| for the quarter-wedge) classified exactly rather than at
the mercy of floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple

Vec2 = Tuple[float, float]

# cos^2(alpha) for angles where it is rational, keyed by alpha/pi.
# Value: (numerator, denominator) of cos^2, plus the sign of cos(alpha).
_COS2_EXACT = {
    Fraction(1, 6): (3, 4, +1),
    Fraction(1, 4): (1, 2, +1),
    Fraction(1, 3): (1, 4, +1),
    Fraction(1, 2): (0, 1, 0),
    Fraction(2, 3): (1, 4, -1),
    Fraction(3, 4): (1, 2, -1),
    Fraction(5, 6): (3, 4, -1),
}


@dataclass(frozen=True)
class PolarPoint:
    """Polar coordinates (r, phi) with phi in (-pi, pi]."""

    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radius must be nonnegative")
        if not (-math.pi < self.phi <= math.pi):
            raise ValueError("phi must lie in (-pi, pi]")


def to_polar(x: Vec2) -> PolarPoint:
    """Cartesian -> polar; the angle is measured anticlockwise from +e1.

    Raises ValueError at the origin, where the angle is undefined.
    """
    x1, x2 = float(x[0]), float(x[1])
    if x1 == 0.0 and x2 == 0.0:
        raise ValueError("angle undefined at the origin")
    r = math.hypot(x1, x2)
    phi = math.atan2(x2, x1)
    if phi == -math.pi:  # signed-zero artifact: normalize to (-pi, pi]
        phi = math.pi
    return PolarPoint(r, phi)


def from_polar(p: PolarPoint) -> Vec2:
    return (p.r * math.cos(p.phi), p.r * math.sin(p.phi))


@dataclass(frozen=True)
class WedgeSpec:
    """A wedge W(alpha) with alpha = (pi_num / pi_den) * pi.

    ``halfline_thickness`` is used only when alpha = pi, where membership
    means avoiding the closed set H_b.  ``excluded_radius`` A defines the
    locally modified wedge W_A(alpha) = W(alpha) \\ B_A(0).
    """

    pi_num: int
    pi_den: int
    halfline_thickness: int = 1
    excluded_radius: float = 0.0

    def __post_init__(self):
        if self.pi_den <= 0 or self.pi_num <= 0:
            raise ValueError("alpha must be a positive rational multiple of pi")
        frac = Fraction(self.pi_num, self.pi_den)
        if frac > 1:
            raise ValueError("alpha must lie in (0, pi]")
        if frac == 1 and self.halfline_thickness < 1:
            raise ValueError("alpha = pi requires halfline_thickness >= 1")
        if self.excluded_radius < 0:
            raise ValueError("excluded_radius must be nonnegative")

    @property
    def alpha_frac(self) -> Fraction:
        return Fraction(self.pi_num, self.pi_den)

    @property
    def alpha(self) -> float:
        return float(self.alpha_frac) * math.pi

    @property
    def is_halfline(self) -> bool:
        return self.alpha_frac == 1

    @property
    def cos_alpha(self) -> float:
        return math.cos(self.alpha)

    def cos2_exact(self):
        """(p, q, sign) with cos^2(alpha) = p/q if rational, else None."""
        return _COS2_EXACT.get(self.alpha_frac)

    def half_angle_power(self) -> Fraction:
        """The exponent w = pi / (2 alpha) as an exact fraction."""
        return Fraction(self.pi_den, 2 * self.pi_num)


def _is_int(v) -> bool:
    return isinstance(v, int) or (hasattr(v, "is_integer") and float(v).is_integer())


def in_wedge(w: WedgeSpec, x: Vec2) -> bool:
    """Open-wedge membership; ignores the excluded radius.

    alpha < pi:  x . e1 > ||x|| cos(alpha)  (origin excluded).
    alpha = pi:  NOT (x1 <= 0 and |x2| <= b)  (H_b closed).
    """
    x1, x2 = x[0], x[1]
    if w.is_halfline:
        return not (x1 <= 0 and abs(x2) <= w.halfline_thickness)
    if x1 == 0 and x2 == 0:
        return False
    exact = w.cos2_exact()
    if exact is not None and _is_int(x1) and _is_int(x2):
        p, q, sign = exact
        a, b = int(x1), int(x2)
        r2 = a * a + b * b
        if sign > 0:
            return a > 0 and q * a * a > p * r2
        if sign == 0:
            return a > 0
        return a >= 0 or q * a * a < p * r2
    # float fallback; lattice points cannot sit exactly on the boundary
    # when cos^2(alpha) is irrational.  Expression order mirrors the
    # compiled kernels so both classify identically.
    c = w.cos_alpha
    c2 = c * c
    lhs = float(x1 * x1)
    rhs = c2 * float(x1 * x1 + x2 * x2)
    if c > 0:
        return x1 > 0 and lhs > rhs
    if c == 0:
        return x1 > 0
    return x1 >= 0 or lhs < rhs


def in_modified_wedge(w: WedgeSpec, x: Vec2) -> bool:
    """Membership in W_A(alpha): inside the wedge and ||x|| > A."""
    if not in_wedge(w, x):
        return False
    a = w.excluded_radius
    return x[0] * x[0] + x[1] * x[1] > a * a


# Rotated frames: lattice directions q_1..q_7 and their perpendiculars.
# q_4 = e1; even-index vectors are unit, odd-index have norm sqrt(2).
_Q = {
    1: (-1, -1),
    2: (0, -1),
    3: (1, -1),
    4: (1, 0),
    5: (1, 1),
    6: (0, 1),
    7: (-1, 1),
}
_QPERP = {
    1: _Q[3],
    2: _Q[4],
    3: _Q[5],
    4: _Q[6],
    5: _Q[7],
    6: (-1, 0),
    7: _Q[1],
}


@dataclass(frozen=True)
class RectFrame:
    """A rectangle frame aligned with axis q_i and perpendicular q_i-perp.

    Regions (all thresholds scale with ||q_i||, so integer dot products
    against the unnormalized q_i are compared with 2*N*||q_i||^2):

      S(N)  : 0 < x.q_hat < 2N||q||  and |x.q_hat_perp| < 2hN||q||
      U1(N) : x.q_hat >= 2N||q||
      U2(N) : 0 < x.q_hat < 2N||q||  and |x.q_hat_perp| >= 2hN||q||
    """

    i: int
    N: int
    h: float = 1.0
    axis: Tuple[int, int] = field(init=False)
    perp: Tuple[int, int] = field(init=False)

    def __post_init__(self):
        if self.i not in _Q:
            raise ValueError("direction index must be in 1..7")
        if self.N <= 0:
            raise ValueError("N must be positive")
        if self.h <= 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "axis", _Q[self.i])
        object.__setattr__(self, "perp", _QPERP[self.i])

    @property
    def norm2(self) -> int:
        a1, a2 = self.axis
        return a1 * a1 + a2 * a2

    def start_point(self, y: int, z: int) -> Tuple[int, int]:
        """(N+z) q_i + y q_i_perp, the canonical start of exit runs."""
        a, p = self.axis, self.perp
        return ((self.N + z) * a[0] + y * p[0], (self.N + z) * a[1] + y * p[1])


def rect_classify(f: RectFrame, x: Vec2) -> str:
    """Classify x as 'interior' (in S(N)), 'U1', 'U2', or 'other'."""
    a, p = f.axis, f.perp
    da = x[0] * a[0] + x[1] * a[1]
    dp = x[0] * p[0] + x[1] * p[1]
    thr_axis = 2 * f.N * f.norm2
    thr_perp = 2.0 * f.h * f.N * f.norm2
    if da >= thr_axis:
        return "U1"
    if da > 0:
        if abs(dp) >= thr_perp:
            return "U2"
        return "interior"
    return "other"
