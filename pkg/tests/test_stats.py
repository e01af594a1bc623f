import math

import numpy as np
import pytest

from wedgewalk.geometry import WedgeSpec
from wedgewalk.simulate import ExitSample
from wedgewalk.stats import (
    InsufficientDataError,
    SurvivalCurve,
    WindowTooWideError,
    fit_tail_exponent,
    geometric_grid,
    moment_probe,
    spitzer_exponent,
    survival_curve,
    survival_curve_from_taus,
    write_survival_csv,
    write_tailfit_csv,
)


def make_samples(taus, t_max):
    return [ExitSample(i, int(t), int(t) >= t_max, (1, 0), t_max)
            for i, t in enumerate(taus)]


class TestSurvivalCurve:
    def test_counting_example(self):
        samples = make_samples([1, 2, 4, 8], 100)
        c = survival_curve(samples, [3])
        assert c.s[0] == 0.5
        assert c.n_at_risk[0] == 2

    def test_t_zero(self):
        samples = make_samples([0, 0, 5, 7], 100)
        c = survival_curve(samples, [0])
        assert c.s[0] == 0.5  # fraction with tau > 0

    def test_all_censored(self):
        samples = make_samples([50, 50, 50], 50)
        c = survival_curve(samples, [1, 10, 49])
        assert np.all(c.s == 1.0)

    def test_nonincreasing_and_matches_bruteforce(self):
        rng = np.random.default_rng(5)
        taus = rng.integers(0, 1000, size=18)
        samples = make_samples(taus, 1000)
        grid = [1, 5, 50, 200, 800]
        c = survival_curve(samples, grid)
        assert np.all(np.diff(c.s) <= 0)
        for t, s in zip(c.t, c.s):
            assert s == np.mean(taus > t)

    def test_grid_at_or_beyond_cap_rejected(self):
        samples = make_samples([1, 2], 100)
        with pytest.raises(ValueError):
            survival_curve(samples, [100])

    def test_mixed_caps_rejected(self):
        samples = [ExitSample(0, 1, False, (1, 0), 10),
                   ExitSample(1, 1, False, (1, 0), 20)]
        with pytest.raises(ValueError):
            survival_curve(samples, [5])


class TestGeometricGrid:
    def test_ratio_and_span(self):
        g = geometric_grid(1000, 100000)
        assert g[0] == 1000 and g[-1] == 100000
        # >= 8 points per octave ~= 26 per decade
        assert len(g) >= 8 * math.log2(100)

    def test_unique_sorted_ints(self):
        g = geometric_grid(10, 10000)
        assert g == sorted(set(g))
        assert all(isinstance(t, int) for t in g)


class TestTailFit:
    def _curve_from_power(self, scale, gamma, t_lo=10, t_hi=100000, t_max=10**9):
        t = np.array(geometric_grid(t_lo, t_hi), dtype=np.int64)
        s = scale * t.astype(float) ** (-gamma)
        return SurvivalCurve(t=t, s=s, n_at_risk=np.full(t.size, 10**6),
                             n_paths=10**6, t_max=t_max)

    def test_exact_inverse_law(self):
        c = self._curve_from_power(1.0, 1.0)
        fit = fit_tail_exponent(c, (10, 100000))
        assert abs(fit.gamma_hat - 1.0) < 1e-9
        assert fit.r_squared > 1 - 1e-12

    def test_quarter_power_with_scale(self):
        c = self._curve_from_power(0.3, 0.25)
        fit = fit_tail_exponent(c, (10, 100000))
        assert abs(fit.gamma_hat - 0.25) < 1e-9

    def test_scale_invariance_exact(self):
        c1 = self._curve_from_power(1.0, 0.5)
        c2 = self._curve_from_power(17.0, 0.5)
        f1 = fit_tail_exponent(c1, (10, 100000))
        f2 = fit_tail_exponent(c2, (10, 100000))
        assert f1.gamma_hat == pytest.approx(f2.gamma_hat, abs=1e-12)

    def test_zero_survival_rejected(self):
        t = np.array([10, 20, 40, 80, 160, 320], dtype=np.int64)
        s = np.array([0.5, 0.2, 0.1, 0.0, 0.0, 0.0])
        c = SurvivalCurve(t=t, s=s, n_at_risk=(s * 100).astype(np.int64),
                          n_paths=100, t_max=10**6)
        with pytest.raises(WindowTooWideError):
            fit_tail_exponent(c, (10, 320))

    def test_insufficient_points(self):
        t = np.array([10, 100, 1000], dtype=np.int64)
        c = SurvivalCurve(t=t, s=t.astype(float) ** -1.0,
                          n_at_risk=np.full(t.size, 10**6), n_paths=10**6,
                          t_max=10**9)
        with pytest.raises(InsufficientDataError):
            fit_tail_exponent(c, (10, 1000))

    def test_insufficient_at_risk(self):
        t = np.array(geometric_grid(10, 1000), dtype=np.int64)
        s = t.astype(float) ** -1.0
        c = SurvivalCurve(t=t, s=s, n_at_risk=np.full(t.size, 30),
                          n_paths=100, t_max=10**6)
        with pytest.raises(InsufficientDataError):
            fit_tail_exponent(c, (10, 1000))

    def test_window_must_be_below_cap(self):
        c = self._curve_from_power(1.0, 1.0, t_max=50000)
        with pytest.raises(ValueError):
            fit_tail_exponent(c, (10, 60000))


class TestSpitzer:
    def test_quarter_wedge(self):
        assert spitzer_exponent(math.pi / 4) == 1.0
        assert spitzer_exponent(WedgeSpec(1, 4)) == 1.0

    def test_half_plane(self):
        assert spitzer_exponent(math.pi / 2) == 0.5
        assert spitzer_exponent(WedgeSpec(1, 2)) == 0.5

    def test_half_line(self):
        assert spitzer_exponent(math.pi) == 0.25
        assert spitzer_exponent(WedgeSpec(1, 1)) == 0.25

    def test_domain(self):
        with pytest.raises(ValueError):
            spitzer_exponent(0.0)
        with pytest.raises(ValueError):
            spitzer_exponent(4.0)


def exact_pareto_taus(n, gamma=1.0, t0=1.0):
    """Derandomized Pareto sample via inverse CDF on midpoint uniforms:
    empirical truncated moments match the closed form to O(1/n)."""
    u = (np.arange(n) + 0.5) / n
    return t0 * u ** (-1.0 / gamma)


class TestMomentProbe:
    def test_s_zero_converges(self):
        taus = exact_pareto_taus(10**5)
        res = moment_probe(taus, 0.0, [100, 200, 400, 800])
        assert res.classification == "converging"
        assert all(m == 1.0 for m in res.m_values)

    def test_pareto_superlinear_diverges(self):
        # closed form: E[(tau ^ T)^{3/2}] = 3 sqrt(T) - 2 for gamma=1, t0=1
        taus = exact_pareto_taus(10**6)
        ladder = [2**k for k in range(5, 11)]
        res = moment_probe(taus, 1.5, ladder)
        for T, m in zip(res.t_ladder, res.m_values):
            assert m == pytest.approx(3 * math.sqrt(T) - 2, rel=5e-3)
        assert res.classification == "diverging"
        # growth per doubling approaches sqrt(2)
        assert res.growth_per_doubling[-1] == pytest.approx(math.sqrt(2), rel=0.02)

    def test_pareto_sublinear_converges(self):
        # closed form: E[(tau ^ T)^{1/2}] = 2 - 1/sqrt(T)
        taus = exact_pareto_taus(10**6)
        ladder = [2**k for k in range(8, 14)]
        res = moment_probe(taus, 0.5, ladder)
        for T, m in zip(res.t_ladder, res.m_values):
            assert m == pytest.approx(2 - 1 / math.sqrt(T), rel=5e-3)
        assert res.classification == "converging"

    def test_ladder_validation(self):
        taus = exact_pareto_taus(100)
        with pytest.raises(ValueError):
            moment_probe(taus, 1.0, [10, 10, 20])
        with pytest.raises(ValueError):
            moment_probe(taus, 1.0, [10, 20])

    def test_accepts_samples(self):
        samples = make_samples([1, 2, 4, 8, 16, 32], 100)
        res = moment_probe(samples, 0.0, [2, 4, 8])
        assert res.classification == "converging"


class TestCsvWriters:
    def test_survival_csv(self, tmp_path):
        taus = np.array([10, 20, 40, 80])
        c = survival_curve_from_taus(taus, [15, 30], 100)
        p = tmp_path / "survival.csv"
        write_survival_csv(p, c)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "t,S,n_at_risk"
        assert lines[1].split(",") == ["15", "0.75", "3"]

    def test_tailfit_csv(self, tmp_path):
        t = np.array(geometric_grid(10, 10000), dtype=np.int64)
        c = SurvivalCurve(t=t, s=t.astype(float) ** -0.5,
                          n_at_risk=np.full(t.size, 1000), n_paths=1000,
                          t_max=10**6)
        fit = fit_tail_exponent(c, (10, 10000))
        p = tmp_path / "tailfit.csv"
        write_tailfit_csv(p, fit, 1000)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "gamma_hat,stderr,r_squared,t_lo,t_hi,n_paths"
        assert float(lines[1].split(",")[0]) == pytest.approx(0.5, abs=1e-9)
