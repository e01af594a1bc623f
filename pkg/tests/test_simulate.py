import math

import numpy as np
import pytest

from wedgewalk import rng
from wedgewalk.geometry import RectFrame, WedgeSpec, in_modified_wedge
from wedgewalk.models import ModelSpec, kernel_at
from wedgewalk.simulate import (
    BatchConfig,
    ExitSample,
    boundary_scaling_experiment,
    read_samples_csv,
    rect_exit_experiment,
    run_batch,
    run_batch_arrays,
    run_exit,
    step,
    validate_exit_sample,
    write_samples_csv,
)
from wedgewalk._kernels import step_frequencies

QUARTER = WedgeSpec(1, 4)


class TestStep:
    def test_same_seed_same_step(self):
        m = ModelSpec("critical", c=2.0)
        st = rng.stream_state(42, 0)
        out1 = step(m, (6, 8), st)
        out2 = step(m, (6, 8), st)
        assert out1 == out2

    def test_unit_steps_only(self):
        m = ModelSpec("subcritical", c=2.0)
        st = rng.stream_state(7, 3)
        x = (10, 10)
        for _ in range(200):
            x2, st = step(m, x, st)
            d = (x2[0] - x[0], x2[1] - x[1])
            assert d in [(1, 0), (-1, 0), (0, 1), (0, -1)]
            x = x2

    def test_zero_drift_frequencies(self):
        # 1e6 draws at a fixed state; each support step within 4 sigma of 1/4
        m = ModelSpec("zero_drift")
        n = 10**6
        counts = step_frequencies(np.uint64(2024), 17, -3, n, m.family_code,
                                  m.c, m.eps_cap)
        sigma = math.sqrt(0.25 * 0.75 / n)
        for k in counts:
            assert abs(k / n - 0.25) < 4 * sigma

    def test_critical_frequencies_at_example_state(self):
        m = ModelSpec("critical", c=2.0)
        n = 10**6
        counts = step_frequencies(np.uint64(99), 6, 8, n, m.family_code,
                                  m.c, m.eps_cap)
        probs = kernel_at(m, (6, 8)).probs
        for k, p in zip(counts, probs):
            sigma = math.sqrt(p * (1 - p) / n)
            assert abs(k / n - p) < 4 * sigma


class TestRunExit:
    def test_start_outside_gives_zero(self):
        m = ModelSpec("zero_drift")
        s = run_exit(m, QUARTER, (-3, 0), 1000, 5)
        assert s.tau == 0 and not s.censored

    def test_reproducible(self):
        m = ModelSpec("zero_drift")
        a = run_exit(m, QUARTER, (10, 0), 10000, 123, path_id=4)
        b = run_exit(m, QUARTER, (10, 0), 10000, 123, path_id=4)
        assert a == b

    def test_censoring_flag(self):
        m = ModelSpec("critical", c=8.0)
        s = run_exit(m, QUARTER, (30, 0), 50, 77)
        # strong outward drift: almost surely still inside after 50 steps
        assert s.censored and s.tau == 50

    def test_monotone_in_excluded_radius(self):
        # same stream: enlarging the excluded ball can only stop earlier
        m = ModelSpec("zero_drift")
        w0 = WedgeSpec(1, 4, excluded_radius=0.0)
        w20 = WedgeSpec(1, 4, excluded_radius=20.0)
        for pid in range(40):
            t0 = run_exit(m, w0, (30, 0), 20000, 31337, path_id=pid).tau
            t20 = run_exit(m, w20, (30, 0), 20000, 31337, path_id=pid).tau
            assert t20 <= t0

    def test_validate_detects_tampering(self):
        m = ModelSpec("zero_drift")
        s = run_exit(m, QUARTER, (10, 0), 10000, 5, path_id=2)
        validate_exit_sample(m, QUARTER, s, 5)
        bad = ExitSample(s.path_id, s.tau + 1, s.censored, s.x0, s.t_max)
        with pytest.raises(ValueError):
            validate_exit_sample(m, QUARTER, bad, 5)


class TestRunBatch:
    CFG = BatchConfig(
        model=ModelSpec("zero_drift"), wedge=QUARTER, x0=(10, 0),
        n_paths=300, t_max=20000, master_seed=998877,
    )

    def test_worker_count_invariance(self):
        ref = run_batch(self.CFG, workers=1)
        for workers in (2, 4, 8):
            assert run_batch(self.CFG, workers=workers) == ref

    def test_sorted_by_path_id(self):
        out = run_batch(self.CFG)
        assert [s.path_id for s in out] == list(range(self.CFG.n_paths))

    def test_empty_batch(self):
        cfg = BatchConfig(model=ModelSpec("zero_drift"), wedge=QUARTER,
                          x0=(10, 0), n_paths=0, t_max=10, master_seed=1)
        assert run_batch(cfg) == []

    def test_matches_python_reference(self):
        out = run_batch(self.CFG)
        for s in out[:50]:
            ref = run_exit(self.CFG.model, self.CFG.wedge, self.CFG.x0,
                           self.CFG.t_max, self.CFG.master_seed, s.path_id)
            assert (ref.tau, ref.censored) == (s.tau, s.censored)

    def test_replay_validation(self):
        out = run_batch(self.CFG)
        for s in out[:50]:
            validate_exit_sample(self.CFG.model, self.CFG.wedge, s,
                                 self.CFG.master_seed)

    def test_halfline_batch_matches_reference(self):
        wedge = WedgeSpec(1, 1, halfline_thickness=1)
        cfg = BatchConfig(model=ModelSpec("zero_drift"), wedge=wedge,
                          x0=(5, 0), n_paths=40, t_max=5000, master_seed=31415)
        out = run_batch(cfg)
        for s in out:
            ref = run_exit(cfg.model, wedge, cfg.x0, cfg.t_max,
                           cfg.master_seed, s.path_id)
            assert (ref.tau, ref.censored) == (s.tau, s.censored)

    def test_excluded_radius_batch_matches_reference(self):
        wedge = WedgeSpec(1, 4, excluded_radius=15.0)
        cfg = BatchConfig(model=ModelSpec("subcritical", c=2.0), wedge=wedge,
                          x0=(40, 10), n_paths=40, t_max=5000, master_seed=777)
        out = run_batch(cfg)
        for s in out:
            ref = run_exit(cfg.model, wedge, cfg.x0, cfg.t_max,
                           cfg.master_seed, s.path_id)
            assert (ref.tau, ref.censored) == (s.tau, s.censored)

    def test_warns_on_outside_start(self):
        with pytest.warns(UserWarning):
            BatchConfig(model=ModelSpec("zero_drift"), wedge=QUARTER,
                        x0=(-5, 0), n_paths=1, t_max=10, master_seed=1)


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        cfg = BatchConfig(model=ModelSpec("critical", c=2.0), wedge=QUARTER,
                          x0=(12, 3), n_paths=25, t_max=500, master_seed=246)
        samples = run_batch(cfg)
        path = tmp_path / "exit_samples.csv"
        write_samples_csv(path, cfg, samples)
        cfg2, samples2 = read_samples_csv(path)
        assert cfg2 == cfg
        assert samples2 == samples

    def test_format(self, tmp_path):
        cfg = BatchConfig(model=ModelSpec("zero_drift"), wedge=QUARTER,
                          x0=(5, 0), n_paths=2, t_max=100, master_seed=1)
        samples = run_batch(cfg)
        path = tmp_path / "s.csv"
        write_samples_csv(path, cfg, samples)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1].startswith("# config:")
        assert lines[2] == "path_id,tau,censored,x0_1,x0_2,t_max"
        assert len(lines) == 5


class TestRectExperiment:
    def test_kernel_matches_python_mirror(self):
        from wedgewalk.geometry import rect_classify
        from wedgewalk.models import perturbation

        m = ModelSpec("critical", c=1.0)
        frame = RectFrame(i=4, N=8, h=1.0)
        n = 150
        res = rect_exit_experiment(m, frame, 2, 1, n, 5150)
        counts = {1: 0, 0: 0, -1: 0}
        cap = 100 * frame.N * frame.N
        for pid in range(n):
            state = rng.stream_state(5150, pid)
            x = frame.start_point(2, 1)
            outcome = -1
            t = 0
            while True:
                lab = rect_classify(frame, x)
                if lab == "U1":
                    outcome = 0
                    break
                if lab == "U2":
                    outcome = 1
                    break
                if t == cap:
                    break
                u, state = rng.next_uniform(state)
                e = perturbation(m, x)
                if u < 0.25 + e:
                    x = (x[0] + 1, x[1])
                elif u < 0.5:
                    x = (x[0] - 1, x[1])
                elif u < 0.75:
                    x = (x[0], x[1] + 1)
                else:
                    x = (x[0], x[1] - 1)
                t += 1
            counts[outcome] += 1
        assert (res.n_u2, res.n_u1, res.n_unresolved) == \
            (counts[1], counts[0], counts[-1])

    def test_start_in_u2_when_y_extreme(self):
        m = ModelSpec("zero_drift")
        frame = RectFrame(i=4, N=8, h=1.0)
        res = rect_exit_experiment(m, frame, 16, 0, 10, 1)  # |y| = 2hN
        assert res.n_u2 == 10  # start classified immediately

    def test_precondition_validation(self):
        m = ModelSpec("zero_drift")
        frame = RectFrame(i=4, N=8, h=1.0)
        with pytest.raises(ValueError):
            rect_exit_experiment(m, frame, 17, 0, 10, 1)
        with pytest.raises(ValueError):
            rect_exit_experiment(m, frame, 0, 2, 10, 1)

    def test_rotated_frame_runs(self):
        m = ModelSpec("zero_drift")
        frame = RectFrame(i=5, N=16, h=1.0)  # diagonal axis
        res = rect_exit_experiment(m, frame, 0, 0, 200, 33)
        assert res.n_u2 + res.n_u1 + res.n_unresolved == 200
        assert res.n_u2 > 0 and res.n_u1 > 0


class TestBoundaryScaling:
    def test_skips_out_of_wedge_angles(self):
        m = ModelSpec("zero_drift")
        pts = boundary_scaling_experiment(
            m, QUARTER, 50.0, [0.0, math.pi / 4], 0.05, 50, 12)
        assert not pts[0].skipped
        assert pts[1].skipped and "outside" in pts[1].note

    def test_p_hat_decreases_toward_boundary(self):
        m = ModelSpec("zero_drift")
        phis = [0.0, 0.6 * math.pi / 4, 0.9 * math.pi / 4]
        pts = boundary_scaling_experiment(m, QUARTER, 100.0, phis, 0.05,
                                          2000, 2468, workers=2)
        vals = [p.p_hat for p in pts]
        assert vals[0] > vals[1] > vals[2]

    def test_threshold_definition(self):
        # p_hat estimates P[tau > floor(eps1 r^2)]
        m = ModelSpec("zero_drift")
        pts = boundary_scaling_experiment(m, QUARTER, 30.0, [0.0], 0.05,
                                          400, 97531)
        pt = pts[0]
        assert pt.threshold == math.floor(0.05 * (pt.x0[0] ** 2 + pt.x0[1] ** 2))
        count = 0
        sub_master = rng.mix64(97531 + rng.GOLDEN)
        for pid in range(400):
            s = run_exit(m, QUARTER, pt.x0, pt.threshold, sub_master, pid)
            if s.censored:
                count += 1
        assert pt.p_hat == pytest.approx(count / 400, abs=0)
