"""Walk engine: stepping, exit-time batches, and geometric experiments.

Reproducibility contract
------------------------
A path is a deterministic function of ``(master_seed, path_id)``: the
stream is derived statelessly (see ``rng``), each step consumes exactly
one uniform, and sampling is inverse-CDF over the fixed support order
(e1, -e1, e2, -e2).  ``run_batch`` therefore returns identical output
for every worker count, and any sample can be replayed through the pure
Python reference implementation for independent validation
(``validate_exit_sample``).

Batches run on compiled kernels (``_kernels``) that mirror the Python
reference arithmetic exactly; workers are threads executing disjoint
path ranges with the GIL released.

Censoring happens at a common ``t_max`` per batch so that empirical
survival below the cap needs no reweighting.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, rng
from .geometry import RectFrame, WedgeSpec, in_modified_wedge
from .models import ModelSpec, perturbation

Vec2i = Tuple[int, int]


@dataclass(frozen=True, slots=True)
class ExitSample:
    """One simulated exit time.  censored=True means tau was capped at t_max."""

    path_id: int
    tau: int
    censored: bool
    x0: Vec2i
    t_max: int


@dataclass(frozen=True)
class BatchConfig:
    model: ModelSpec
    wedge: WedgeSpec
    x0: Vec2i
    n_paths: int
    t_max: int
    master_seed: int

    def __post_init__(self):
        if self.n_paths < 0:
            raise ValueError("n_paths must be nonnegative")
        if self.t_max < 1:
            raise ValueError("t_max must be a positive integer")
        if not in_modified_wedge(self.wedge, self.x0):
            warnings.warn(
                f"start point {self.x0} lies outside the (modified) wedge; "
                "every exit time will be 0",
                stacklevel=2,
            )

    def to_json_dict(self) -> dict:
        return {
            "model": {
                "family": self.model.family,
                "c": self.model.c,
                "b": self.model.b,
                "eps_cap": self.model.eps_cap,
            },
            "wedge": {
                "alpha": {"pi_num": self.wedge.pi_num, "pi_den": self.wedge.pi_den},
                "halfline_thickness": self.wedge.halfline_thickness,
                "excluded_radius": self.wedge.excluded_radius,
            },
            "x0": [int(self.x0[0]), int(self.x0[1])],
            "n_paths": self.n_paths,
            "t_max": self.t_max,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "BatchConfig":
        mw = d["model"]
        ww = d["wedge"]
        return cls(
            model=ModelSpec(
                family=mw["family"], c=float(mw.get("c", 0.0)),
                b=int(mw.get("b", 1)), eps_cap=float(mw.get("eps_cap", 0.125)),
            ),
            wedge=WedgeSpec(
                pi_num=int(ww["alpha"]["pi_num"]), pi_den=int(ww["alpha"]["pi_den"]),
                halfline_thickness=int(ww.get("halfline_thickness", 1)),
                excluded_radius=float(ww.get("excluded_radius", 0.0)),
            ),
            x0=(int(d["x0"][0]), int(d["x0"][1])),
            n_paths=int(d["n_paths"]),
            t_max=int(d["t_max"]),
            master_seed=int(d["master_seed"]),
        )


# ---------------------------------------------------------------------------
# single-step / single-path reference implementations (pure Python)
# ---------------------------------------------------------------------------

def step(m: ModelSpec, x: Vec2i, state: rng.RngState) -> Tuple[Vec2i, rng.RngState]:
    """One walk step: inverse-CDF sampling over (e1, -e1, e2, -e2).

    Consumes exactly one uniform and advances the stream deterministically.
    """
    u, state = rng.next_uniform(state)
    e = perturbation(m, x)
    if u < 0.25 + e:
        return (x[0] + 1, x[1]), state
    if u < 0.5:
        return (x[0] - 1, x[1]), state
    if u < 0.75:
        return (x[0], x[1] + 1), state
    return (x[0], x[1] - 1), state


def run_exit(
    m: ModelSpec,
    wedge: WedgeSpec,
    x0: Vec2i,
    t_max: int,
    master_seed: int,
    path_id: int = 0,
) -> ExitSample:
    """Simulate one path until it leaves the modified wedge or hits t_max.

    tau is the first index t (including t = 0) with the state outside
    W_A(alpha).  Pure Python; the batch runner produces identical results
    through the compiled kernels.
    """
    x0 = (int(x0[0]), int(x0[1]))
    if not in_modified_wedge(wedge, x0):
        return ExitSample(path_id, 0, False, x0, t_max)
    state = rng.stream_state(master_seed, path_id)
    x = x0
    for t in range(1, t_max + 1):
        x, state = step(m, x, state)
        if not in_modified_wedge(wedge, x):
            return ExitSample(path_id, t, False, x0, t_max)
    return ExitSample(path_id, t_max, True, x0, t_max)


def validate_exit_sample(
    m: ModelSpec, wedge: WedgeSpec, sample: ExitSample, master_seed: int
) -> None:
    """Replay a sample through the reference walk and check its invariants.

    Raises ValueError on any mismatch: wrong tau/censor flag, an interior
    state outside the wedge, or an uncensored exit state inside it.
    """
    x = (int(sample.x0[0]), int(sample.x0[1]))
    if not in_modified_wedge(wedge, x):
        if sample.tau != 0 or sample.censored:
            raise ValueError(f"path {sample.path_id}: start outside wedge but tau={sample.tau}")
        return
    state = rng.stream_state(master_seed, sample.path_id)
    horizon = sample.tau if not sample.censored else sample.t_max
    for t in range(1, horizon + 1):
        x, state = step(m, x, state)
        inside = in_modified_wedge(wedge, x)
        if t < horizon and not inside:
            raise ValueError(f"path {sample.path_id}: exited at t={t} < tau={sample.tau}")
        if t == horizon:
            if sample.censored and not inside:
                raise ValueError(f"path {sample.path_id}: censored but outside at t_max")
            if not sample.censored and inside:
                raise ValueError(
                    f"path {sample.path_id}: inside wedge at claimed tau={sample.tau}"
                )


# ---------------------------------------------------------------------------
# batch runner (compiled kernels + threads)
# ---------------------------------------------------------------------------

def _wedge_kernel_params(w: WedgeSpec):
    if w.is_halfline:
        return (
            _kernels.WKIND_HALFLINE, False, 0, 1, 0.0, 0,
            int(w.halfline_thickness), float(w.excluded_radius) ** 2,
        )
    exact = w.cos2_exact()
    c = w.cos_alpha
    if exact is not None:
        p, q, sign = exact
        return (_kernels.WKIND_SECTOR, True, p, q, c * c, sign,
                0, float(w.excluded_radius) ** 2)
    sign = 1 if c > 0 else (0 if c == 0 else -1)
    return (_kernels.WKIND_SECTOR, False, 0, 1, c * c, sign,
            0, float(w.excluded_radius) ** 2)


def _chunks(n: int, workers: int):
    n_chunks = min(n, max(1, workers * 4))
    size = (n + n_chunks - 1) // n_chunks
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _run_ranges(fn, args_for_range, n: int, workers: int) -> None:
    """Run a kernel over [0, n) split into ranges, optionally threaded.

    Output arrays are indexed by path id, so results do not depend on the
    number of workers or scheduling order.
    """
    if n == 0:
        return
    if workers <= 1:
        fn(*args_for_range(0, n))
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args_for_range(lo, hi)) for lo, hi in _chunks(n, workers)]
        for fut in futures:
            fut.result()


def run_batch_arrays(cfg: BatchConfig, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Exit times and censor flags as arrays indexed by path_id."""
    n = cfg.n_paths
    tau = np.empty(n, dtype=np.int64)
    cens = np.empty(n, dtype=np.uint8)
    wk = _wedge_kernel_params(cfg.wedge)
    m = cfg.model
    master = np.uint64(cfg.master_seed & 0xFFFFFFFFFFFFFFFF)

    def args(lo, hi):
        return (
            tau, cens, lo, hi, master,
            int(cfg.x0[0]), int(cfg.x0[1]), cfg.t_max,
            m.family_code, float(m.c), float(m.eps_cap),
            *wk,
        )

    _run_ranges(_kernels.run_exit_batch, args, n, workers)
    return tau, cens


def run_batch(cfg: BatchConfig, workers: int = 1) -> List[ExitSample]:
    """Simulate cfg.n_paths independent exit times.

    Output is sorted by path_id and is a pure function of the config;
    the worker count only affects wall-clock time.
    """
    tau, cens = run_batch_arrays(cfg, workers)
    x0 = (int(cfg.x0[0]), int(cfg.x0[1]))
    return [
        ExitSample(i, int(tau[i]), bool(cens[i]), x0, cfg.t_max)
        for i in range(cfg.n_paths)
    ]


# ---------------------------------------------------------------------------
# rectangle exit experiment
# ---------------------------------------------------------------------------

@dataclass
class RectExitResult:
    """Outcome counts for first-hit of U2 (sides) vs U1 (far face)."""

    frame_i: int
    N: int
    h: float
    n_paths: int
    n_u2: int
    n_u1: int
    n_unresolved: int
    cap: int

    @property
    def delta_hat(self) -> float:
        return self.n_u2 / self.n_paths if self.n_paths else math.nan

    @property
    def stderr(self) -> float:
        if not self.n_paths:
            return math.nan
        d = self.delta_hat
        return math.sqrt(d * (1.0 - d) / self.n_paths)

    @property
    def unresolved_fraction(self) -> float:
        return self.n_unresolved / self.n_paths if self.n_paths else math.nan


def rect_exit_experiment(
    m: ModelSpec,
    frame: RectFrame,
    y: int,
    z: int,
    n_paths: int,
    master_seed: int,
    workers: int = 1,
    cap_factor: int = 100,
) -> RectExitResult:
    """Estimate the probability of leaving a rotated rectangle via its
    long sides (U2) before its far face (U1).

    Paths start at (N+z) q_i + y q_i_perp and are stepped until the first
    U1-or-U2 hit; paths resolving neither within cap_factor * N^2 steps
    are counted separately (they should be a vanishing fraction).
    """
    if abs(y) > 2 * frame.h * frame.N:
        raise ValueError("requires |y| <= 2 h N")
    if abs(z) > m.b:
        raise ValueError("requires |z| <= jump bound b")
    start = frame.start_point(y, z)
    res = np.empty(n_paths, dtype=np.int8)
    cap = cap_factor * frame.N * frame.N
    a, p = frame.axis, frame.perp
    thr_axis = 2 * frame.N * frame.norm2
    thr_perp = 2.0 * frame.h * frame.N * frame.norm2
    master = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF)

    def args(lo, hi):
        return (
            res, lo, hi, master,
            int(start[0]), int(start[1]),
            a[0], a[1], p[0], p[1], thr_axis, thr_perp, cap,
            m.family_code, float(m.c), float(m.eps_cap),
        )

    _run_ranges(_kernels.rect_exit_batch, args, n_paths, workers)
    n_u2 = int(np.count_nonzero(res == 1))
    n_u1 = int(np.count_nonzero(res == 0))
    n_un = int(np.count_nonzero(res == -1))
    return RectExitResult(
        frame_i=frame.i, N=frame.N, h=frame.h, n_paths=n_paths,
        n_u2=n_u2, n_u1=n_u1, n_unresolved=n_un, cap=cap,
    )


# ---------------------------------------------------------------------------
# boundary scaling experiment
# ---------------------------------------------------------------------------

@dataclass
class BoundaryScalingPoint:
    phi: float
    x0: Vec2i
    threshold: int          # paths must stay inside for more than this many steps
    n_paths: int
    p_hat: float
    stderr: float
    skipped: bool = False
    note: str = ""


def boundary_scaling_experiment(
    m: ModelSpec,
    wedge: WedgeSpec,
    r: float,
    phis: Sequence[float],
    eps1: float,
    n_paths: int,
    master_seed: int,
    workers: int = 1,
) -> List[BoundaryScalingPoint]:
    """Estimate P[still inside after eps1 * ||x0||^2 steps] for starts
    x0 = round(r (cos phi, sin phi)) across an angle grid.

    The estimates are meant to be correlated against cos(w phi) with
    w = pi/(2 alpha): survival probability over a diffusive time window
    scales with the boundary distance factor.  Angles whose rounded start
    falls outside the wedge are skipped with a note.  Each angle uses a
    sub-master seed derived from (master_seed, angle index).
    """
    if eps1 <= 0:
        raise ValueError("eps1 must be positive")
    out: List[BoundaryScalingPoint] = []
    for idx, phi in enumerate(phis):
        x0 = (round(r * math.cos(phi)), round(r * math.sin(phi)))
        if not in_modified_wedge(wedge, x0):
            out.append(BoundaryScalingPoint(
                phi=phi, x0=x0, threshold=0, n_paths=0,
                p_hat=math.nan, stderr=math.nan, skipped=True,
                note="rounded start outside wedge",
            ))
            continue
        r2 = x0[0] * x0[0] + x0[1] * x0[1]
        # censoring at floor(eps1 r^2) makes the censored fraction exactly
        # the empirical P[tau > eps1 r^2] (tau is integer valued)
        threshold = int(math.floor(eps1 * r2))
        if threshold < 1:
            out.append(BoundaryScalingPoint(
                phi=phi, x0=x0, threshold=threshold, n_paths=n_paths,
                p_hat=1.0, stderr=0.0, note="threshold below one step",
            ))
            continue
        sub_master = rng.mix64(master_seed + (idx + 1) * rng.GOLDEN)
        cfg = BatchConfig(
            model=m, wedge=wedge, x0=x0, n_paths=n_paths,
            t_max=threshold, master_seed=sub_master,
        )
        _, cens = run_batch_arrays(cfg, workers)
        p_hat = float(np.count_nonzero(cens)) / n_paths
        out.append(BoundaryScalingPoint(
            phi=phi, x0=x0, threshold=threshold, n_paths=n_paths,
            p_hat=p_hat, stderr=math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n_paths),
        ))
    return out


# ---------------------------------------------------------------------------
# CSV emission / ingestion
# ---------------------------------------------------------------------------

_CSV_HEADER = "path_id,tau,censored,x0_1,x0_2,t_max"


def write_samples_csv(path, cfg: BatchConfig, samples: Sequence[ExitSample]) -> None:
    """Exit-sample CSV with `#` header comments carrying the full config."""
    with open(path, "w", newline="") as fh:
        fh.write("# wedgewalk exit samples v1\n")
        fh.write("# config: " + json.dumps(cfg.to_json_dict(), sort_keys=True) + "\n")
        fh.write(_CSV_HEADER + "\n")
        for s in samples:
            fh.write(f"{s.path_id},{s.tau},{1 if s.censored else 0},"
                     f"{s.x0[0]},{s.x0[1]},{s.t_max}\n")


def read_samples_csv(path) -> Tuple[Optional[BatchConfig], List[ExitSample]]:
    """Read an exit-sample CSV; returns (config or None, samples)."""
    cfg = None
    samples: List[ExitSample] = []
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("config:"):
                    cfg = BatchConfig.from_json_dict(json.loads(body[len("config:"):]))
                continue
            if line == _CSV_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"malformed exit-sample row: {line!r}")
            samples.append(ExitSample(
                path_id=int(parts[0]), tau=int(parts[1]), censored=parts[2] == "1",
                x0=(int(parts[3]), int(parts[4])), t_max=int(parts[5]),
            ))
    return cfg, samples
