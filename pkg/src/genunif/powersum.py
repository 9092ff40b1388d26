"""Collision-based estimation of power sums F_r(p) = sum_i p_i^r.

The basic estimator draws Poi(m) samples and divides the number of ordered
r-tuples landing in the same element by m^r.  Poissonization makes the
per-element counts independent Poisson(m p_i), so the estimator is unbiased.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .core import (
    BudgetExceededError,
    Fingerprint,
    SampleSource,
    as_generator,
    poisson_draw_count,
)

__all__ = [
    "Fingerprint",
    "PowerSumEstimate",
    "Size",
    "approximate_fr",
    "estimate_fr",
    "estimate_fr_trials",
    "estimate_from_fingerprint",
    "variance_upper_bound",
    "fingerprint",
    "first_collision_time",
    "poissonized_variance",
    "threshold_statistic",
    "threshold_test_fr",
]


@dataclass(frozen=True)
class PowerSumEstimate:
    r: int
    value: float
    poisson_mean_m: float
    samples_actually_drawn: int
    collisions: float  # ordered r-wise collisions = value * m^r


class Size(str, enum.Enum):
    LARGE = "LARGE"
    SMALL = "SMALL"


def fingerprint(sample) -> Fingerprint:
    return Fingerprint.of(sample)


def _check_r(r):
    if int(r) != r or r < 1:
        raise ValueError(f"r must be an integer >= 1, got {r}")
    return int(r)


def _check_m(m):
    m = float(m)
    if not math.isfinite(m) or m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    return m


def estimate_from_fingerprint(fp: Fingerprint, r: int, m: float) -> PowerSumEstimate:
    """F-hat_r for a fingerprint taken with Poisson mean ``m``."""
    r = _check_r(r)
    m = _check_m(m)
    coll = kernels.falling_factorial_sum(fp.counts, r)
    return PowerSumEstimate(r, coll / m**r, m, fp.total, coll)


def estimate_fr(src: SampleSource, r: int, m: float, rng=None) -> PowerSumEstimate:
    """Draw Poi(m) samples from ``src`` and return the unbiased estimate of F_r."""
    r = _check_r(r)
    m = _check_m(m)
    k = poisson_draw_count(m, as_generator(rng))
    return estimate_from_fingerprint(src.draw_fingerprint(k), r, m)


def estimate_fr_trials(src: SampleSource, rs: Sequence[int], m: float, trials: int,
                       rng=None, chunk_draws: int = 1 << 22) -> np.ndarray:
    """Independent repetitions of :func:`estimate_fr` on one source, batched.

    Each trial uses its own Poi(m) block of consecutive draws; all requested
    orders ``rs`` are evaluated on the same block.  Returns shape (trials, len(rs)).
    """
    rs = [_check_r(r) for r in rs]
    m = _check_m(m)
    gen = as_generator(rng)
    ks = gen.poisson(m, size=int(trials)).astype(np.int64)
    out = np.empty((ks.size, len(rs)))
    start = 0
    while start < ks.size:
        stop = start + 1
        total = ks[start]
        while stop < ks.size and total + ks[stop] <= chunk_draws:
            total += ks[stop]
            stop += 1
        labels = src.draw_many(int(total))
        _, ids = np.unique(labels, return_inverse=True)
        n_ids = int(ids.max()) + 1 if ids.size else 1
        out[start:stop] = kernels.segment_falling_factorials(
            ids.astype(np.int64), ks[start:stop], n_ids, np.asarray(rs, np.int64))
        start = stop
    return out / np.array([m**r for r in rs])


def poissonized_variance(r: int, m: float, power_sums: Mapping[int, float]) -> float:
    """Exact variance of F-hat_r with Poisson mean m.

    Var = m^-2r sum_{t=0}^{r-1} m^(r+t) C(r,t) (r!/t!) F_(r+t), from
    Var[(X)_r] = sum_k C(r,k)^2 k! lam^(2r-k) for X ~ Poisson(lam).
    """
    r = _check_r(r)
    m = _check_m(m)
    total = 0.0
    for t in range(r):
        coef = math.comb(r, t) * math.factorial(r) // math.factorial(t)
        total += m ** (r + t) * coef * power_sums[r + t]
    return total / m ** (2 * r)


def variance_upper_bound(r: int, m: float, power_sums: Mapping[int, float]) -> float:
    """The commonly quoted form m^-2r sum_t m^(r+t) C(r,t) r^(r-t) F_(r+t).

    Coincides with :func:`poissonized_variance` in the leading t = r-1 term and
    upper-bounds it overall (r!/t! <= r^(r-t)).
    """
    r = _check_r(r)
    m = _check_m(m)
    total = 0.0
    for t in range(r):
        total += m ** (r + t) * math.comb(r, t) * r ** (r - t) * power_sums[r + t]
    return total / m ** (2 * r)


def first_collision_time(src: SampleSource, r: int, cap: int = 10**8) -> int:
    """Draw from ``src`` until some element has been seen ``r`` times.

    Returns the number of samples drawn.  Draws are pulled in growing chunks;
    whatever lies past the collision is unread, so the source is charged only
    for the samples actually used.
    """
    r = _check_r(r)
    seen = np.empty(0, np.int64)
    seen_counts = np.empty(0, np.int64)
    used = 0
    chunk = 32
    while True:
        chunk = int(min(chunk, cap - used))
        if chunk <= 0:
            raise BudgetExceededError(f"no {r}-wise collision within {cap} draws")
        labels, costs = src.take(chunk)
        merged = np.union1d(seen, labels)
        counts = np.zeros(merged.size, np.int64)
        counts[np.searchsorted(merged, seen)] = seen_counts
        ids = np.searchsorted(merged, labels)
        pos = kernels.scan_first_collision(ids, counts, r)
        if pos > 0:
            src.unread(labels[pos:], costs[pos:])
            return used + pos
        used += labels.size
        seen, seen_counts = merged, counts
        chunk *= 2


def approximate_fr(src: SampleSource, r: int, delta: float, rng=None,
                   c_stage2: float = 64.0, cap: int = 10**8) -> tuple[float, int]:
    """Estimate F_r within relative error ``delta`` (w.p. >= 19/20).

    Stage 1 waits for the first r-wise collision; its time ``w`` is a
    constant-factor proxy for 1/||p||_r.  Stage 2 runs :func:`estimate_fr` with
    m = ceil(c_stage2 * w / delta^2).  Returns (estimate, draws used).
    """
    r = _check_r(r)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    start = src.draws_made
    w = first_collision_time(src, r, cap)
    m = math.ceil(c_stage2 * w / delta**2)
    est = estimate_fr(src, r, m, rng)
    return est.value, src.draws_made - start


def threshold_statistic(src: SampleSource, r: int, m: float, c_tt: float = 10.0,
                        rng=None) -> PowerSumEstimate:
    """F-hat_r from Poi(c_tt * m) samples (the raw input to the threshold test)."""
    return estimate_fr(src, r, c_tt * _check_m(m), rng)


def threshold_test_fr(src: SampleSource, r: int, m: float, c: float, rng=None,
                      c_tt: float = 10.0) -> Size:
    """LARGE if m^r F_r >= 20c, SMALL if m^r F_r <= c/20 (each w.p. >= 19/20)."""
    if not c >= 1:
        raise ValueError("c must be >= 1")
    est = threshold_statistic(src, r, m, c_tt, rng)
    return Size.LARGE if m**r * est.value > c else Size.SMALL
