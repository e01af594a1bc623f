"""Command-line experiment runner.

    wedgewalk run --config <path.json> --out <dir> [--workers N]

One experiment per invocation.  Every run writes ``manifest.json``
echoing the fully resolved config (defaults included) plus the tool
version; re-running with the same config and master seed reproduces the
CSV bodies byte for byte (only the manifest timestamp differs).

Exit status: 0 success; 1 runtime failure or a failed drift inequality;
2 malformed config; 3 insufficient data in a fit.

A lock file guards the output directory against concurrent runs.
Worker count resolution: --workers flag, else WEDGEWALK_WORKERS, else 1.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__, lyapunov, rng, simulate, stats
from .config import ConfigError, ExperimentConfig, parse_config
from .geometry import RectFrame
from .lyapunov import GFunctionParams
from .models import ModelSpec
from .stats import InsufficientDataError, WindowTooWideError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2
EXIT_INSUFFICIENT_DATA = 3

_LOCK_NAME = ".wedgewalk.lock"


def _resolve_workers(flag) -> int:
    if flag is not None:
        return max(1, int(flag))
    env = os.environ.get("WEDGEWALK_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-integer WEDGEWALK_WORKERS={env!r}",
                  file=sys.stderr)
    return 1


def _write_manifest(out_dir: Path, cfg: ExperimentConfig, workers: int) -> None:
    manifest = {
        "tool": "wedgewalk",
        "version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "workers": workers,
        "config": cfg.resolved(),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt_c(c: float) -> str:
    return f"{c:g}"


def _run_simulate(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    p = cfg.params
    c_values = cfg.c_sweep
    if c_values is None:
        batches = [(cfg.model, out_dir / "exit_samples.csv")]
    else:
        family = cfg.raw["model"]["family"]
        b = cfg.raw["model"]["b"]
        eps_cap = cfg.raw["model"]["eps_cap"]
        batches = [
            (ModelSpec(family=family, c=c, b=b, eps_cap=eps_cap),
             out_dir / f"exit_samples_c{_fmt_c(c)}.csv")
            for c in c_values
        ]
    for model, out_path in batches:
        bc = simulate.BatchConfig(
            model=model, wedge=cfg.wedge, x0=p["start"],
            n_paths=p["n_paths"], t_max=p["t_max"], master_seed=p["master_seed"],
        )
        samples = simulate.run_batch(bc, workers=workers)
        simulate.write_samples_csv(out_path, bc, samples)
        print(f"wrote {out_path} ({len(samples)} samples)")
    return EXIT_OK


def _run_tail_fit(cfg: ExperimentConfig, out_dir: Path, config_dir: Path) -> int:
    p = cfg.params
    samples_path = Path(p["samples_csv"])
    if not samples_path.is_absolute():
        samples_path = config_dir / samples_path
    _, samples = simulate.read_samples_csv(samples_path)
    if not samples:
        print(f"error: no samples in {samples_path}", file=sys.stderr)
        return EXIT_INSUFFICIENT_DATA
    t_lo, t_hi = p["window"]
    grid = stats.geometric_grid(t_lo, t_hi, p["points_per_octave"])
    curve = stats.survival_curve(samples, grid)
    fit = stats.fit_tail_exponent(curve, (t_lo, t_hi))
    stats.write_survival_csv(out_dir / "survival.csv", curve)
    stats.write_tailfit_csv(out_dir / "tailfit.csv", fit, curve.n_paths)
    print(f"gamma_hat={fit.gamma_hat:.4f} stderr={fit.stderr:.4f} "
          f"r2={fit.r_squared:.4f} window=[{t_lo},{t_hi}]")
    return EXIT_OK


def _lamperti_states(cfg: ExperimentConfig):
    from .geometry import in_modified_wedge
    pts = []
    for r in cfg.params["radii"]:
        for phi in cfg.params["angles"]:
            pt = (round(r * math.cos(phi)), round(r * math.sin(phi)))
            if in_modified_wedge(cfg.wedge, pt) and pt not in pts:
                pts.append(pt)
    return pts


def _run_drift_check(cfg: ExperimentConfig, out_dir: Path) -> int:
    p = cfg.params
    check = p["check"]
    report_path = out_dir / "lyapunov_report.csv"
    if check == "supermartingale":
        res = lyapunov.check_supermartingale_subcritical(
            cfg.model, cfg.wedge, p["w"], p["gamma"], p["radii"], p["angles"])
        lyapunov.write_reports_csv(report_path, res.reports)
        worst = lyapunov.worst_margin(res)
        ok = worst < 0.0
        print(f"supermartingale check: worst margin {worst:+.6g} "
              f"({'holds' if ok else 'FAILS'}; {len(res.skipped)} points skipped)")
        return EXIT_OK if ok else EXIT_FAILURE
    if check == "submartingale":
        res = lyapunov.check_submartingale_fhat(
            cfg.model, cfg.wedge, p["gamma"], p["radii"], p["angles"])
        lyapunov.write_reports_csv(report_path, res.reports)
        worst = lyapunov.min_margin(res)
        ok = worst >= 0.0
        print(f"submartingale check: min increment {worst:+.6g} "
              f"({'holds' if ok else 'FAILS'}; {len(res.skipped)} points skipped)")
        return EXIT_OK if ok else EXIT_FAILURE
    # lamperti
    if p["h"] == "g":
        gp = GFunctionParams(cfg.wedge.alpha)
        h = lambda x: lyapunov.g_eval(gp, x)
    else:  # sqrt_f2: nonnegative truncation of the quadratic cone harmonic
        h = lambda x: math.sqrt(max(lyapunov.f_eval(2.0, x), 0.0))
    from .geometry import in_modified_wedge
    region = lambda x: in_modified_wedge(cfg.wedge, x)
    states = _lamperti_states(cfg)
    rep = lyapunov.check_lamperti(cfg.model, h, region, p["p0"], p["r_exp"], states)
    with open(out_dir / "lamperti_report.csv", "w") as fh:
        fh.write("x1,x2,y,inc_2p0,inc_2,inc_2r\n")
        for row in rep.rows:
            fh.write(f"{row.state[0]},{row.state[1]},{row.y!r},"
                     f"{row.inc_2p0!r},{row.inc_2!r},{row.inc_2r!r}\n")
    if p["require"] == "noncon1":
        ok = rep.noncon1_holds
        print(f"lamperti noncon1: min increment {rep.noncon1_min:+.6g} "
              f"({'holds' if ok else 'FAILS'})")
    else:
        ok = rep.existence_holds
        print(f"lamperti existence drift: fitted C {rep.existence_C:+.6g} "
              f"({'holds' if ok else 'FAILS'})")
    return EXIT_OK if ok else EXIT_FAILURE


def _run_rect_exit(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    p = cfg.params
    rows = []
    for idx, N in enumerate(p["N_list"]):
        frame = RectFrame(i=p["i"], N=N, h=p["h"])
        sub_master = rng.mix64(p["master_seed"] + (idx + 1) * rng.GOLDEN)
        res = simulate.rect_exit_experiment(
            cfg.model, frame, p["y"], p["z"], p["n_paths"], sub_master,
            workers=workers, cap_factor=p["cap_factor"],
        )
        rows.append(res)
        print(f"N={N}: delta_hat={res.delta_hat:.4f} (stderr {res.stderr:.4f}, "
              f"unresolved {res.n_unresolved})")
    with open(out_dir / "rect_exit.csv", "w") as fh:
        fh.write("N,n_paths,n_u2,n_u1,n_unresolved,delta_hat,stderr\n")
        for r in rows:
            fh.write(f"{r.N},{r.n_paths},{r.n_u2},{r.n_u1},{r.n_unresolved},"
                     f"{r.delta_hat!r},{r.stderr!r}\n")
    return EXIT_OK


def _run_boundary_scaling(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    p = cfg.params
    pts = simulate.boundary_scaling_experiment(
        cfg.model, cfg.wedge, p["r"], p["phis"], p["eps1"], p["n_paths"],
        p["master_seed"], workers=workers,
    )
    w = float(cfg.wedge.half_angle_power())
    with open(out_dir / "boundary_scaling.csv", "w") as fh:
        fh.write("phi,cos_w_phi,x0_1,x0_2,threshold,n_paths,p_hat,stderr,skipped,note\n")
        for pt in pts:
            fh.write(f"{pt.phi!r},{math.cos(w * pt.phi)!r},{pt.x0[0]},{pt.x0[1]},"
                     f"{pt.threshold},{pt.n_paths},{pt.p_hat!r},{pt.stderr!r},"
                     f"{1 if pt.skipped else 0},{pt.note}\n")
    kept = [pt for pt in pts if not pt.skipped]
    print(f"boundary scaling: {len(kept)} angles estimated, "
          f"{len(pts) - len(kept)} skipped")
    return EXIT_OK


def _run_lyapunov_eval(cfg: ExperimentConfig, out_dir: Path) -> int:
    from .geometry import in_modified_wedge
    from .models import covariance_at, drift_at
    p = cfg.params
    w, order_p = p["w"], p["p"]
    reports = []
    skipped = 0
    for r in p["radii"]:
        for phi in p["angles"]:
            pt = (round(r * math.cos(phi)), round(r * math.sin(phi)))
            if not in_modified_wedge(cfg.wedge, pt):
                skipped += 1
                continue
            mu = drift_at(cfg.model, pt)
            M = covariance_at(cfg.model, pt)
            h = lambda z: lyapunov.f_eval(w, z)
            exact = lyapunov.exact_increment_moment(cfg.model, h, pt, order_p)
            if order_p == 1:
                analytic = lyapunov.expansion_mean(w, pt, mu, M)
                order = "r^(w-3)"
            else:
                analytic = lyapunov.expansion_second(w, pt, M)
                order = "r^(2w-3)"
            rr = math.hypot(pt[0], pt[1])
            reports.append(lyapunov.LyapunovReport(
                point=pt, r=rr, phi=math.atan2(pt[1], pt[0]), exact=exact,
                analytic=analytic, residual=exact - analytic, order=order,
            ))
    lyapunov.write_reports_csv(out_dir / "lyapunov_report.csv", reports)
    print(f"lyapunov eval: {len(reports)} points ({skipped} skipped)")
    return EXIT_OK


def run_experiment(cfg: ExperimentConfig, out_dir: Path, workers: int,
                   config_dir: Path) -> int:
    if cfg.kind == "simulate":
        return _run_simulate(cfg, out_dir, workers)
    if cfg.kind == "tail-fit":
        return _run_tail_fit(cfg, out_dir, config_dir)
    if cfg.kind == "drift-check":
        return _run_drift_check(cfg, out_dir)
    if cfg.kind == "rect-exit":
        return _run_rect_exit(cfg, out_dir, workers)
    if cfg.kind == "boundary-scaling":
        return _run_boundary_scaling(cfg, out_dir, workers)
    if cfg.kind == "lyapunov-eval":
        return _run_lyapunov_eval(cfg, out_dir)
    raise AssertionError(f"unhandled kind {cfg.kind}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wedgewalk",
        description="Non-homogeneous lattice walk experiments: wedge exit "
                    "times, drift checks, tail fits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment from a config file")
    runp.add_argument("--config", required=True, help="path to the JSON config")
    runp.add_argument("--out", required=True, help="output directory")
    runp.add_argument("--workers", type=int, default=None,
                      help="worker threads (affects speed only, never results)")
    args = parser.parse_args(argv)

    config_path = Path(args.config)
    try:
        text = config_path.read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = _resolve_workers(args.workers)

    lock_path = out_dir / _LOCK_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        print(f"error: {lock_path} exists; another run is writing to this "
              "directory (remove the lock if it is stale)", file=sys.stderr)
        return EXIT_FAILURE
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        _write_manifest(out_dir, cfg, workers)
        return run_experiment(cfg, out_dir, workers, config_path.resolve().parent)
    except (WindowTooWideError, InsufficientDataError) as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT_DATA
    except Exception as exc:  # runtime failure: report, nonzero status
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        try:
            os.unlink(lock_path)
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
