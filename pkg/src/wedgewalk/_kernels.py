"""JIT-compiled hot loops for path simulation.

These kernels mirror, instruction for instruction, the pure-Python
reference implementations in ``rng.py`` and ``simulate.py``: the same
xoroshiro128++ stream derivation from (master_seed, path_id), one 53-bit
uniform per step, the same cumulative thresholds over the fixed support
order (e1, -e1, e2, -e2), and the same wedge-membership predicates
(exact integer comparisons where cos^2(alpha) is rational).  The test
suite replays compiled paths through the Python reference to enforce
the equivalence.

All kernels release the GIL (``nogil=True``) so a thread pool can run
disjoint path ranges concurrently; every path writes only to its own
output slot, which makes batch output independent of worker count and
scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_U53_INV = 1.0 / 9007199254740992.0

# wedge kind codes
WKIND_SECTOR = 0    # alpha < pi: cos-comparison predicate
WKIND_HALFLINE = 1  # alpha = pi: complement of the thickened half-line

# model family codes match models.FAMILIES order
FAM_ZERO = 0
FAM_CRITICAL = 1
FAM_SUBCRITICAL = 2

_E = 2.718281828459045


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True, nogil=True, inline="always")
def _stream_init(master, path_id):
    base = master + (U64(2) * U64(path_id) + U64(1)) * _GOLDEN
    s0 = _mix64(base)
    s1 = _mix64(base + _GOLDEN)
    if s0 == U64(0) and s1 == U64(0):
        s0 = _GOLDEN
    return s0, s1


@njit(cache=True, nogil=True, inline="always")
def _next_uniform(s0, s1):
    out = _rotl(s0 + s1, U64(17)) + s0
    s1 = s1 ^ s0
    s0 = _rotl(s0, U64(49)) ^ s1 ^ (s1 << U64(21))
    s1 = _rotl(s1, U64(28))
    return np.float64(out >> U64(11)) * _U53_INV, s0, s1


@njit(cache=True, nogil=True, inline="always")
def _eps_at(fam, c, eps_cap, x1, x2):
    if fam == FAM_ZERO:
        return 0.0
    r = np.sqrt(np.float64(x1 * x1 + x2 * x2))
    if r == 0.0:
        return eps_cap
    if fam == FAM_CRITICAL:
        e = c / (2.0 * r)
    else:
        e = c / (2.0 * r * np.log(_E + r))
    return min(e, eps_cap)


@njit(cache=True, nogil=True, inline="always")
def _in_modified_wedge(x1, x2, wkind, exact, p, q, cos2, csign, bthick, a2):
    if wkind == WKIND_HALFLINE:
        ax2 = x2 if x2 >= 0 else -x2
        if x1 <= 0 and ax2 <= bthick:
            return False
    else:
        if x1 == 0 and x2 == 0:
            return False
        if csign > 0:
            if x1 <= 0:
                return False
            if exact:
                if q * x1 * x1 <= p * (x1 * x1 + x2 * x2):
                    return False
            else:
                if np.float64(x1 * x1) <= cos2 * np.float64(x1 * x1 + x2 * x2):
                    return False
        elif csign == 0:
            if x1 <= 0:
                return False
        else:
            if x1 < 0:
                if exact:
                    if q * x1 * x1 >= p * (x1 * x1 + x2 * x2):
                        return False
                else:
                    if np.float64(x1 * x1) >= cos2 * np.float64(x1 * x1 + x2 * x2):
                        return False
    return np.float64(x1 * x1 + x2 * x2) > a2


@njit(cache=True, nogil=True)
def run_exit_batch(
    out_tau, out_cens, lo, hi, master,
    x01, x02, t_max,
    fam, c, eps_cap,
    wkind, exact, p, q, cos2, csign, bthick, a2,
):
    """Simulate exit times for paths [lo, hi); slot i <- path i."""
    for idx in range(lo, hi):
        s0, s1 = _stream_init(master, idx)
        x1 = x01
        x2 = x02
        if not _in_modified_wedge(x1, x2, wkind, exact, p, q, cos2, csign, bthick, a2):
            out_tau[idx] = 0
            out_cens[idx] = 0
            continue
        tau = t_max
        cens = 1
        for t in range(1, t_max + 1):
            u, s0, s1 = _next_uniform(s0, s1)
            e = _eps_at(fam, c, eps_cap, x1, x2)
            if u < 0.25 + e:
                x1 += 1
            elif u < 0.5:
                x1 -= 1
            elif u < 0.75:
                x2 += 1
            else:
                x2 -= 1
            if not _in_modified_wedge(x1, x2, wkind, exact, p, q, cos2, csign, bthick, a2):
                tau = t
                cens = 0
                break
        out_tau[idx] = tau
        out_cens[idx] = cens


@njit(cache=True, nogil=True)
def rect_exit_batch(
    out_res, lo, hi, master,
    sx1, sx2,
    qa1, qa2, qp1, qp2, thr_axis, thr_perp, cap,
    fam, c, eps_cap,
):
    """First hit of U1 vs U2 in a rotated rectangle frame.

    out_res: 1 if U2 first, 0 if U1 first, -1 if neither within cap steps.
    Thresholds compare unnormalized dot products: axis >= thr_axis (U1),
    |perp| >= thr_perp while 0 < axis < thr_axis (U2).
    """
    for idx in range(lo, hi):
        s0, s1 = _stream_init(master, idx)
        x1 = sx1
        x2 = sx2
        res = -1
        for t in range(cap + 1):
            da = x1 * qa1 + x2 * qa2
            if da >= thr_axis:
                res = 0
                break
            if da > 0:
                dp = x1 * qp1 + x2 * qp2
                adp = dp if dp >= 0 else -dp
                if np.float64(adp) >= thr_perp:
                    res = 1
                    break
            if t == cap:
                break
            u, s0, s1 = _next_uniform(s0, s1)
            e = _eps_at(fam, c, eps_cap, x1, x2)
            if u < 0.25 + e:
                x1 += 1
            elif u < 0.5:
                x1 -= 1
            elif u < 0.75:
                x2 += 1
            else:
                x2 -= 1
        out_res[idx] = res


@njit(cache=True, nogil=True)
def step_frequencies(master, x1, x2, n, fam, c, eps_cap):
    """Count of each support step over n draws at a fixed state."""
    counts = np.zeros(4, dtype=np.int64)
    s0, s1 = _stream_init(master, 0)
    e = _eps_at(fam, c, eps_cap, x1, x2)
    for _ in range(n):
        u, s0, s1 = _next_uniform(s0, s1)
        if u < 0.25 + e:
            counts[0] += 1
        elif u < 0.5:
            counts[1] += 1
        elif u < 0.75:
            counts[2] += 1
        else:
            counts[3] += 1
    return counts
