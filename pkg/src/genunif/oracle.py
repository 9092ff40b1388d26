"""Brute-force ground truth for explicit distributions.

Nothing here is used by the tester itself; these functions certify test
instances and check the inequalities the tester's analysis relies on.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .core import ExplicitMeasure


def exact_fr(dist: ExplicitMeasure, r: int) -> float:
    """sum_i p_i^r by direct summation (compensated above 10^4 elements)."""
    if int(r) != r or r < 1:
        raise ValueError("r must be an integer >= 1")
    powers = dist.masses ** int(r)
    if powers.size > 10**4:
        return math.fsum(powers.tolist())
    return float(np.sum(powers))


def power_sums(dist: ExplicitMeasure, orders) -> dict[int, float]:
    return {int(r): exact_fr(dist, r) for r in orders}


def _tv_to_top_k(p_desc: np.ndarray, k: int) -> float:
    s = p_desc.size
    inside = min(k, s)
    terms = np.abs(p_desc[:inside] - 1.0 / k).tolist()
    terms += p_desc[inside:].tolist()
    terms.append((k - inside) / k)
    return 0.5 * math.fsum(terms)


def tv_to_uniform_family(dist: ExplicitMeasure, max_extra_support: int | None = None) -> tuple[float, int]:
    """min over nonempty S of d_TV(p, u_S), and the size of a minimizing S.

    For a fixed size k the best S is the k heaviest elements (plus k - |supp|
    fresh zero-mass elements when k exceeds the support), so scanning k is
    exact.  Ties resolve to the smallest k.
    """
    p = np.sort(np.asarray(dist.masses, dtype=np.float64))[::-1]
    s = p.size
    if s == 0:
        raise ValueError("empty distribution")
    if p[0] == p[-1]:
        return 0.0, s
    extra = s if max_extra_support is None else int(max_extra_support)
    top = s + extra
    ks = np.arange(1, top + 1, dtype=np.float64)
    inv = 1.0 / ks
    prefix = np.concatenate([[0.0], np.cumsum(p)])
    inside = np.minimum(np.arange(1, top + 1), s)
    above = np.minimum(np.searchsorted(-p, -inv, side="left"), inside)
    sum_abs = (prefix[above] - above * inv) + ((inside - above) * inv - (prefix[inside] - prefix[above]))
    zeros = (ks - inside) * inv
    d = 0.5 * (sum_abs + (prefix[-1] - prefix[inside]) + zeros)
    lo = float(d.min())
    k_best = int(np.flatnonzero(d <= lo + 1e-14 * max(1.0, abs(lo)))[0]) + 1
    if extra > 0 and k_best == top:
        raise RuntimeError("uniform-family scan minimum sits on the scan boundary; raise max_extra_support")
    return _tv_to_top_k(p, k_best), k_best


def tv_to_uniform_family_exhaustive(dist: ExplicitMeasure, max_extra: int = 12) -> float:
    """Minimum of d_TV(p, u_S) over every subset T of the support joined with
    0..max_extra zero-mass elements.  Exponential; meant for support <= ~14."""
    p = np.asarray(dist.masses, dtype=np.float64)
    s = p.size
    if s > 20:
        raise ValueError("exhaustive scan limited to support <= 20")
    masks = np.arange(1 << s, dtype=np.int64)
    member = ((masks[:, None] >> np.arange(s)) & 1).astype(bool)
    size_t = member.sum(axis=1)
    best = np.inf
    for j in range(max_extra + 1):
        size = size_t + j
        ok = size > 0
        inv = np.where(ok, 1.0 / np.maximum(size, 1), 0.0)
        cost = np.where(member, np.abs(p[None, :] - inv[:, None]), p[None, :]).sum(axis=1)
        d = 0.5 * (cost + j * inv)
        best = min(best, float(d[ok].min()))
    return best


def tv_distance(p: ExplicitMeasure, q: ExplicitMeasure) -> float:
    """Total variation distance between two explicit distributions."""
    a, b = p.as_dict(), q.as_dict()
    return 0.5 * math.fsum(abs(a.get(x, 0.0) - b.get(x, 0.0)) for x in set(a) | set(b))


def tv_to_uniform_on(dist: ExplicitMeasure, support) -> float:
    """d_TV(p, u_S) for an explicit set S."""
    S = np.unique(np.asarray(list(support), dtype=np.int64))
    inv = 1.0 / S.size
    inside = np.isin(dist.labels, S)
    terms = np.abs(dist.masses[inside] - inv).tolist() + dist.masses[~inside].tolist()
    terms.append((S.size - int(inside.sum())) * inv)
    return 0.5 * math.fsum(terms)


class StructuralGap(NamedTuple):
    f3_minus_f2sq: float
    identity_residual: float


def structural_gap(dist: ExplicitMeasure) -> StructuralGap:
    """F3 - F2^2, and its disagreement with sum_i p_i (p_i - F2)^2."""
    f2 = exact_fr(dist, 2)
    f3 = exact_fr(dist, 3)
    direct = f3 - f2 * f2
    identity = math.fsum((dist.masses * (dist.masses - f2) ** 2).tolist())
    return StructuralGap(direct, abs(direct - identity))


def _far_sum(p_sorted: np.ndarray, prefix: np.ndarray, x: np.ndarray) -> np.ndarray:
    # sum_i min(p_i, |x - p_i|) = sum_{p<=x/2} p + sum_{x/2<p<=x} (x-p) + sum_{p>x} (p-x)
    total = prefix[-1]
    a = np.searchsorted(p_sorted, x / 2, side="right")
    b = np.searchsorted(p_sorted, x, side="right")
    low = prefix[a]
    mid = (b - a) * x - (prefix[b] - prefix[a])
    high = (total - prefix[b]) - (p_sorted.size - b) * x
    # a sum of nonnegative terms; clip prefix-sum rounding below zero
    return np.maximum(low + mid + high, 0.0)


def threshold_distance_min(dist: ExplicitMeasure, grid: int | None = 10**4) -> float:
    """min over x in [0, 1] of sum_i min(p_i, |x - p_i|).

    With ``grid`` set, x ranges over that many equispaced points; with
    ``grid=None`` the exact minimum is taken over the breakpoints 0, p_i, 2 p_i, 1.
    """
    p = np.sort(np.asarray(dist.masses, dtype=np.float64))
    prefix = np.concatenate([[0.0], np.cumsum(p)])
    if grid is None:
        xs = np.unique(np.clip(np.concatenate([[0.0, 1.0], p, 2 * p]), 0.0, 1.0))
    else:
        xs = np.linspace(0.0, 1.0, int(grid))
    return float(_far_sum(p, prefix, xs).min())


def _log_poisson(t: int, lam: float) -> float:
    return t * math.log(lam) - lam - math.lgamma(t + 1)


def mi_contribution(params, t_max: int = 60) -> float:
    """N * sum_{t=0}^{t_max} (P(A=t|X=0) - P(A=t|X=1))^2 / P(A=t) for one bin.

    ``params`` needs n, N, epsilon and k (see ``instances.HardInstanceParams``).
    X=0 draws the bin from the uniform-type ensemble, X=1 from the paired one;
    A is the bin's Poisson(k mu) count.  Each term is at most 4 P(A=t), so the
    sum stops once P(A=t) drops below 1e-300 past the largest Poisson mean;
    underflow at or before that mean raises ValueError.
    """
    if t_max < 3:
        raise ValueError("t_max must be >= 3")
    n, N, eps, k = float(params.n), float(params.N), float(params.epsilon), float(params.k)
    if k == 0:
        return 0.0
    e2 = 1.0 + eps * eps
    lam_p, lam_m, lam_0 = k * (1 + eps) / n, k * (1 - eps) / n, k * e2 / n
    q1, q0 = n / N, n / (N * e2)
    # t = 0 in expm1 form to keep the 1 - small differences exact
    p1 = 1.0 + q1 * (math.expm1(-lam_p) + math.expm1(-lam_m)) / 2
    p0 = 1.0 + q0 * math.expm1(-lam_0)
    diff = q1 * (math.expm1(-lam_p) + math.expm1(-lam_m)) / 2 - q0 * math.expm1(-lam_0)
    total = diff * diff / ((p0 + p1) / 2)
    log_floor = math.log(1e-300)
    for t in range(1, int(t_max) + 1):
        log_p1 = math.log(q1 / 2) + np.logaddexp(_log_poisson(t, lam_p), _log_poisson(t, lam_m)) if lam_m > 0 \
            else math.log(q1 / 2) + _log_poisson(t, lam_p)
        log_p0 = math.log(q0) + _log_poisson(t, lam_0)
        log_mix = float(np.logaddexp(log_p0, log_p1)) - math.log(2)
        if log_mix < log_floor:
            if t > lam_p:
                break
            raise ValueError(f"P(A={t}) underflows; lower t_max below {t}")
        # P0 - P1 = P1 * expm1(log P0 - log P1)
        delta = math.exp(log_p1) * math.expm1(log_p0 - log_p1)
        total += delta * delta / math.exp(log_mix)
    return N * total
