"""Walk families with configurable drift regimes.

All families are perturbed simple random walks on Z^2 with support
{+e1, -e1, +e2, -e2}: the e1/-e1 probabilities are tilted by a
position-dependent perturbation eps(x) while the e2 directions stay at
1/4.  Consequences used throughout:

* the jump bound is 1 (single unit steps),
* the minimum directional probability is 1/4 - eps_cap > 0,
* second moments are untouched by the tilt, so the covariance is exactly
  diag(1/2, 1/2) everywhere; sigma^2 = 1/2,
* the mean drift is (2 eps(x), 0), pointing along +e1.

Families:

  zero_drift   eps = 0
  critical     eps = min(c / (2 ||x||), eps_cap)             -> ||x|| mu1 -> c
  subcritical  eps = min(c / (2 ||x|| ln(e + ||x||)), eps_cap) -> mu = o(1/||x||)

Clipping at eps_cap keeps every probability inside
[1/4 - eps_cap, 1/4 + eps_cap]; for the critical family the drift equals
(c/||x||, 0) exactly once ||x|| >= c / (2 eps_cap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

FAMILIES = ("zero_drift", "critical", "subcritical")

SUPPORT: Tuple[Tuple[int, int], ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))

_PROB_TOL = 1e-15


@dataclass(frozen=True)
class JumpKernel:
    """A finite-support jump distribution: parallel step/probability lists."""

    steps: Tuple[Tuple[int, int], ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.steps) != len(self.probs):
            raise ValueError("steps and probs must have equal length")
        if len(self.steps) > 8:
            raise ValueError("support size must be <= 8")
        if len(set(self.steps)) != len(self.steps):
            raise ValueError("steps must be distinct")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(math.fsum(self.probs) - 1.0) > _PROB_TOL:
            raise ValueError("probabilities must sum to 1")

    def mean(self) -> Tuple[float, float]:
        m1 = math.fsum(p * s[0] for s, p in zip(self.steps, self.probs))
        m2 = math.fsum(p * s[1] for s, p in zip(self.steps, self.probs))
        return (m1, m2)


@dataclass(frozen=True)
class ModelSpec:
    """A drift-regime family with strength c, jump bound 1.

    eps_cap < 1/4 guarantees the weak-isotropy floor
    kappa = 1/4 - eps_cap (with k = 1 and a one-step skeleton).
    """

    family: str
    c: float = 0.0
    b: int = 1
    eps_cap: float = 0.125

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.c < 0:
            raise ValueError("drift strength c must be nonnegative")
        if self.b != 1:
            raise ValueError("this walk family has unit jumps; b must be 1")
        if not (0.0 < self.eps_cap < 0.25):
            raise ValueError("eps_cap must lie in (0, 1/4)")

    @property
    def kappa(self) -> float:
        return 0.25 - self.eps_cap

    @property
    def family_code(self) -> int:
        """Integer tag used by the compiled kernels."""
        return FAMILIES.index(self.family)

    def perturbation(self, x) -> float:
        return perturbation(self, x)

    def kernel_at(self, x) -> JumpKernel:
        return kernel_at(self, x)


def perturbation(m: ModelSpec, x) -> float:
    """The e1 tilt eps(x) in [0, eps_cap]."""
    if m.family == "zero_drift":
        return 0.0
    x1, x2 = float(x[0]), float(x[1])
    r = math.sqrt(x1 * x1 + x2 * x2)
    if r == 0.0:
        return m.eps_cap
    if m.family == "critical":
        e = m.c / (2.0 * r)
    else:
        e = m.c / (2.0 * r * math.log(math.e + r))
    return min(e, m.eps_cap)


def kernel_at(m: ModelSpec, x) -> JumpKernel:
    """Jump distribution at x, in the fixed support order (e1,-e1,e2,-e2)."""
    e = perturbation(m, x)
    return JumpKernel(SUPPORT, (0.25 + e, 0.25 - e, 0.25, 0.25))


def drift_at(m: ModelSpec, x) -> Tuple[float, float]:
    """Mean one-step displacement mu(x) = (2 eps(x), 0)."""
    return (2.0 * perturbation(m, x), 0.0)


def covariance_at(m: ModelSpec, x) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Second-moment matrix of the jump; exactly diag(1/2, 1/2).

    The e1 tilt moves mass between +e1 and -e1 whose squares coincide,
    so no position or family dependence survives in second moments.
    """
    return ((0.5, 0.0), (0.0, 0.5))


@dataclass
class AssumptionViolation:
    state: Tuple[int, int]
    reason: str


@dataclass
class AssumptionReport:
    """Result of auditing a kernel family over a sample of states.

    ``worst_margin`` is min over states of (min directional probability
    minus kappa); nonnegative iff the isotropy floor holds on the sample.
    """

    ok: bool
    kappa: float
    k: int
    n0: int
    b: int
    worst_margin: float
    worst_state: Tuple[int, int]
    max_sum_error: float
    violations: List[AssumptionViolation] = field(default_factory=list)


def check_assumptions(m, states: Sequence) -> AssumptionReport:
    """Audit sum-to-one, bounded support and the directional floor.

    ``m`` needs only a ``kernel_at(x)`` method plus ``kappa``/``b``
    attributes, so hand-built adversarial kernels can be audited too.
    Violations are collected, never raised.
    """
    states = list(states)
    if not states:
        raise ValueError("states must be nonempty")
    kappa = float(getattr(m, "kappa", 0.0))
    bound = int(getattr(m, "b", 1))
    violations: List[AssumptionViolation] = []
    worst_margin = math.inf
    worst_state = tuple(states[0])
    max_sum_err = 0.0
    for st in states:
        st = (int(st[0]), int(st[1]))
        kern = m.kernel_at(st)
        sum_err = abs(math.fsum(kern.probs) - 1.0)
        max_sum_err = max(max_sum_err, sum_err)
        if sum_err > _PROB_TOL:
            violations.append(AssumptionViolation(st, f"probabilities sum to 1{sum_err:+.3e}"))
        for s in kern.steps:
            if s[0] * s[0] + s[1] * s[1] > bound * bound:
                violations.append(
                    AssumptionViolation(st, f"step {s} exceeds jump bound b={bound}")
                )
        # directional floor: each of +-e1, +-e2 must carry at least kappa
        for d in SUPPORT:
            p = 0.0
            for s, q in zip(kern.steps, kern.probs):
                if s == d:
                    p += q
            margin = p - kappa
            if margin < worst_margin:
                worst_margin = margin
                worst_state = st
            if margin < 0:
                violations.append(
                    AssumptionViolation(st, f"prob of step {d} is {p:.6g} < kappa={kappa:.6g}")
                )
    return AssumptionReport(
        ok=not violations,
        kappa=kappa,
        k=1,
        n0=1,
        b=bound,
        worst_margin=worst_margin,
        worst_state=worst_state,
        max_sum_error=max_sum_err,
        violations=violations,
    )
