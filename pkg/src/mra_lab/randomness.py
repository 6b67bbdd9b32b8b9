"""Deterministic, platform-independent random streams.

All randomness in the package is drawn from counter-based Philox streams
keyed by a master seed plus an integer path, so any sub-experiment can be
replayed in isolation.  Uniforms are built from the raw 64-bit counter
output with fixed bit arithmetic, and normals via the inverse Gaussian CDF
(a rational approximation, no libm transcendentals whose last bits vary
across platforms).  Replays are therefore bit-stable across machines and
worker layouts.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["stream", "uniform01", "normals", "indices"]

_INV_2_53 = 2.0**-53


def stream(master_seed: int, *path: int) -> np.random.Philox:
    """Philox bit generator for the sub-stream identified by ``path``.

    Distinct paths yield statistically independent streams; the same
    (seed, path) pair always yields the same stream.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Philox(ss)


def uniform01(gen: np.random.Philox, size) -> np.ndarray:
    """Uniform draws in the open interval (0, 1) with 53-bit resolution."""
    raw = gen.random_raw(size) >> np.uint64(11)
    return (raw.astype(np.float64) + 0.5) * _INV_2_53


def normals(gen: np.random.Philox, size) -> np.ndarray:
    """Standard normal draws via the inverse CDF (never +-inf)."""
    return ndtri(uniform01(gen, size))


def indices(gen: np.random.Philox, bound: int, size) -> np.ndarray:
    """Uniform integers in [0, bound) from 53-bit uniforms.

    Pure integer arithmetic; the modulo bias is below bound * 2**-53.
    """
    raw = gen.random_raw(size) >> np.uint64(11)
    return ((raw * np.uint64(bound)) >> np.uint64(53)).astype(np.int64)
