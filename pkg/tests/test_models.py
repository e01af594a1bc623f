import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wedgewalk.models import (
    SUPPORT,
    AssumptionReport,
    JumpKernel,
    ModelSpec,
    check_assumptions,
    covariance_at,
    drift_at,
    kernel_at,
)

lattice_points = st.tuples(st.integers(-10000, 10000), st.integers(-10000, 10000))


class TestKernel:
    def test_zero_drift_uniform(self):
        m = ModelSpec("zero_drift")
        for x in [(0, 0), (5, -3), (1000, 1)]:
            k = kernel_at(m, x)
            assert k.steps == SUPPORT
            assert k.probs == (0.25, 0.25, 0.25, 0.25)

    def test_critical_example(self):
        m = ModelSpec("critical", c=2.0)
        k = kernel_at(m, (6, 8))  # ||x|| = 10, eps = 0.1
        assert k.probs == pytest.approx((0.35, 0.15, 0.25, 0.25), abs=1e-15)

    def test_critical_clipping(self):
        m = ModelSpec("critical", c=2.0)
        k = kernel_at(m, (4, 3))  # c/(2 ||x||) = 0.2 > 1/8 -> clipped
        assert k.probs[0] == pytest.approx(0.25 + 0.125, abs=0)
        assert k.probs[1] == pytest.approx(0.25 - 0.125, abs=0)

    def test_origin_uses_cap(self):
        for fam in ("critical", "subcritical"):
            m = ModelSpec(fam, c=2.0)
            assert m.perturbation((0, 0)) == m.eps_cap

    @given(lattice_points)
    def test_probabilities_sum_to_one(self, x):
        for fam, c in [("zero_drift", 0.0), ("critical", 3.0), ("subcritical", 5.0)]:
            k = kernel_at(ModelSpec(fam, c=c), x)
            assert abs(math.fsum(k.probs) - 1.0) <= 1e-15
            assert all(s[0] ** 2 + s[1] ** 2 <= 1 for s in k.steps)
            assert min(k.probs) >= 0.25 - 0.125

    def test_jumpkernel_validation(self):
        with pytest.raises(ValueError):
            JumpKernel(((1, 0),), (0.5,))  # does not sum to 1
        with pytest.raises(ValueError):
            JumpKernel(((1, 0), (1, 0)), (0.5, 0.5))  # duplicate steps


class TestDrift:
    def test_zero_everywhere(self):
        m = ModelSpec("zero_drift")
        assert drift_at(m, (7, -2)) == (0.0, 0.0)

    def test_critical_exact_beyond_clip(self):
        m = ModelSpec("critical", c=2.0)
        assert drift_at(m, (6, 8)) == pytest.approx((0.2, 0.0), abs=0)
        # mu = (c/||x||, 0) exactly once ||x|| >= c/(2 eps_cap) = 8
        for x in [(100, 0), (60, 80), (0, 5000)]:
            r = math.hypot(*x)
            mu = drift_at(m, x)
            assert mu[0] == pytest.approx(2.0 / r, rel=1e-15)
            assert mu[1] == 0.0

    def test_subcritical_formula(self):
        m = ModelSpec("subcritical", c=2.0)
        mu = drift_at(m, (6, 8))
        assert mu == pytest.approx((2.0 / (10.0 * math.log(math.e + 10.0)), 0.0), rel=1e-15)

    @given(lattice_points)
    def test_matches_kernel_enumeration(self, x):
        for fam, c in [("zero_drift", 0.0), ("critical", 2.0), ("subcritical", 2.0)]:
            m = ModelSpec(fam, c=c)
            assert drift_at(m, x) == pytest.approx(kernel_at(m, x).mean(), abs=1e-16)

    def test_r_mu_converges_to_c(self):
        m = ModelSpec("critical", c=2.0)
        for r in (100, 1000, 10000):
            x = (r, 0)
            mu = drift_at(m, x)
            assert abs(r * math.hypot(*mu) - 2.0) <= 1e-12 * 2.0

    def test_subcritical_r_mu_vanishes(self):
        m = ModelSpec("subcritical", c=2.0)
        vals = []
        for r in (100, 1000, 10000):
            mu = drift_at(m, (r, 0))
            vals.append(r * math.hypot(*mu))
        assert vals[0] > vals[1] > vals[2]  # monotone decreasing along the ray
        assert vals[-1] < vals[0]


class TestCovariance:
    @given(lattice_points)
    def test_exactly_isotropic(self, x):
        for fam, c in [("zero_drift", 0.0), ("critical", 8.0), ("subcritical", 2.0)]:
            M = covariance_at(ModelSpec(fam, c=c), x)
            assert M == ((0.5, 0.0), (0.0, 0.5))

    @given(lattice_points)
    def test_matches_enumeration(self, x):
        m = ModelSpec("critical", c=4.0)
        k = kernel_at(m, x)
        m11 = math.fsum(p * s[0] * s[0] for s, p in zip(k.steps, k.probs))
        m22 = math.fsum(p * s[1] * s[1] for s, p in zip(k.steps, k.probs))
        m12 = math.fsum(p * s[0] * s[1] for s, p in zip(k.steps, k.probs))
        assert (m11, m22, m12) == (0.5, 0.5, 0.0)


class TestAssumptions:
    def test_zero_drift_passes(self):
        rep = check_assumptions(ModelSpec("zero_drift"), [(1, 1), (50, -3)])
        assert rep.ok
        assert rep.kappa == 0.125
        assert (rep.k, rep.n0, rep.b) == (1, 1, 1)
        assert rep.worst_margin == pytest.approx(0.125, abs=1e-15)

    def test_critical_margin(self):
        states = [(r, 0) for r in (1, 10, 100, 1000, 10000)]
        rep = check_assumptions(ModelSpec("critical", c=2.0), states)
        assert rep.ok
        # min prob = 1/4 - eps_cap attained where clipping is active
        assert rep.worst_margin == pytest.approx(0.0, abs=1e-15)
        assert rep.worst_state == (1, 0)

    def test_adversarial_kernel_fails_with_witness(self):
        class BrokenModel:
            kappa = 0.125
            b = 1

            def kernel_at(self, x):
                return JumpKernel(SUPPORT, (0.5, 0.0, 0.25, 0.25))

        rep = check_assumptions(BrokenModel(), [(3, 4)])
        assert isinstance(rep, AssumptionReport)
        assert not rep.ok
        assert any(v.state == (3, 4) and "kappa" in v.reason for v in rep.violations)

    def test_empty_states_rejected(self):
        with pytest.raises(ValueError):
            check_assumptions(ModelSpec("zero_drift"), [])


class TestModelSpecValidation:
    def test_family(self):
        with pytest.raises(ValueError):
            ModelSpec("brownian")

    def test_ranges(self):
        with pytest.raises(ValueError):
            ModelSpec("critical", c=-1.0)
        with pytest.raises(ValueError):
            ModelSpec("critical", c=1.0, b=2)
        with pytest.raises(ValueError):
            ModelSpec("critical", c=1.0, eps_cap=0.25)
        with pytest.raises(ValueError):
            ModelSpec("critical", c=1.0, eps_cap=0.0)
