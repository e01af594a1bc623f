"""Deterministic, splittable random streams for path simulation.

Every simulated path owns an independent xoroshiro128++ generator.  The
two state words are derived statelessly from ``(master_seed, path_id)``
by hashing distinct 64-bit counters with the splitmix64 finalizer, so

* any path can be reconstructed in isolation (replay, debugging),
* batch output is a pure function of the master seed, independent of
  worker count or scheduling,
* streams of different paths never share counters.

Each walk step consumes exactly one 53-bit uniform, which makes a path a
deterministic function of its stream and allows coupling arguments
(e.g. exit-time monotonicity in the excluded radius) to be tested
path-by-path.

The compiled simulation kernels reimplement the identical arithmetic on
``uint64``; cross-checks live in the test suite.
"""

from __future__ import annotations

from typing import Tuple

_MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15  # splitmix64 increment

# Scale for 53-bit uniforms: 1 / 2**53.
U53_INV = 1.0 / 9007199254740992.0

RngState = Tuple[int, int]


def mix64(z: int) -> int:
    """splitmix64 finalizer: a bijective 64-bit mixer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def stream_state(master_seed: int, path_id: int) -> RngState:
    """Initial xoroshiro128++ state for one path.

    Path ``i`` hashes counters ``2i+1`` and ``2i+2`` of the master
    stream, so the counter sets of distinct paths are disjoint.
    """
    if path_id < 0:
        raise ValueError("path_id must be nonnegative")
    base = (master_seed + ((2 * path_id + 1) * GOLDEN)) & _MASK
    s0 = mix64(base)
    s1 = mix64((base + GOLDEN) & _MASK)
    if s0 == 0 and s1 == 0:  # xoroshiro forbids the all-zero state
        s0 = GOLDEN
    return s0, s1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def next_u64(state: RngState) -> Tuple[int, RngState]:
    """Advance the stream one draw; returns (64-bit output, new state)."""
    s0, s1 = state
    out = (_rotl((s0 + s1) & _MASK, 17) + s0) & _MASK
    s1 ^= s0
    s0 = (_rotl(s0, 49) ^ s1 ^ ((s1 << 21) & _MASK)) & _MASK
    s1 = _rotl(s1, 28)
    return out, (s0, s1)


def next_uniform(state: RngState) -> Tuple[float, RngState]:
    """One uniform draw on [0, 1) with 53-bit resolution."""
    out, state = next_u64(state)
    return (out >> 11) * U53_INV, state
