"""Experiment runner: accept rates, sample-count scaling, constant calibration
and oracle checks over corpora.  Reports are plain dicts with a fixed key order
so that ``json.dumps`` output is byte-stable for a fixed seed.
"""

from __future__ import annotations

import itertools
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import oracle
from .core import (
    Branch,
    BudgetExceededError,
    ExplicitDistribution,
    GenUnifError,
    TesterConfig,
    derive_seed,
    make_source,
)
from .gut import amplified_test, gen_uniformity_test, regime_thresholds
from .instances import (
    HardInstanceParams,
    draw_no_measure,
    draw_yes_measure,
    paired_bias,
    random_simplex,
    read_corpus,
    uniform_subset,
)
from .uniformity_known import required_samples

MODES = ("accept-rate", "scaling", "calibrate", "oracle-check")


# -- instance descriptors -------------------------------------------------------

def _args(text: str, kinds: Sequence[type], name: str, required: int) -> list:
    parts = [p for p in text.split(",") if p.strip()] if text else []
    if not required <= len(parts) <= len(kinds):
        raise ValueError(f"{name} expects {required}..{len(kinds)} arguments, got {len(parts)}")
    return [kind(float(p)) if kind is int else kind(p) for kind, p in zip(kinds, parts)]


def parse_instance(desc: str, seed: int = 0) -> ExplicitDistribution:
    """Build a distribution from ``name:args``.

    uniform:S | uniform_subset:DOMAIN,S | paired_bias:S,BIAS | simplex:S[,ALPHA]
    | yes:N_SCALE,EPS | no:N_SCALE,EPS | corpus:PATH[@MEMBER]
    """
    name, _, rest = desc.partition(":")
    name = name.strip()
    if name == "uniform":
        (s,) = _args(rest, [int], name, 1)
        return uniform_subset(s, s, seed)
    if name == "uniform_subset":
        domain, size = _args(rest, [int, int], name, 2)
        return uniform_subset(domain, size, seed)
    if name == "paired_bias":
        s, bias = _args(rest, [int, float], name, 2)
        return paired_bias(s, bias)
    if name == "simplex":
        s, *alpha = _args(rest, [int, float], name, 1)
        return random_simplex(s, seed, *alpha)
    if name in ("yes", "no"):
        n, eps = _args(rest, [int, float], name, 2)
        params = HardInstanceParams.default(n, eps)
        draw = draw_yes_measure if name == "yes" else draw_no_measure
        return draw(params, seed).normalized()
    if name == "corpus":
        path, _, member = rest.partition("@")
        members = read_corpus(path)
        if not members:
            raise ValueError(f"corpus {path} is empty")
        if not member:
            return members[0][1]
        for mname, dist in members:
            if mname == member:
                return dist
        raise ValueError(f"corpus {path} has no member {member!r}")
    raise ValueError(f"unknown instance kind {name!r}")


def ground_truth(dist: ExplicitDistribution) -> dict:
    d, k = oracle.tv_to_uniform_family(dist)
    return {
        "support_size": dist.support_size,
        "distance": d,
        "best_k": k,
        "f2": oracle.exact_fr(dist, 2),
        "f3": oracle.exact_fr(dist, 3),
    }


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(successes, trials).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


# -- accept-rate experiments ----------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    instance: str
    epsilon: float
    trials: int = 100
    cfg: TesterConfig = field(default_factory=TesterConfig)
    seed: int = 0
    mode: str = "accept-rate"
    amplified: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def trial_seeds(seed: int, trial: int) -> tuple[int, int]:
    return derive_seed(seed, "trial-source", trial), derive_seed(seed, "trial-tester", trial)


def run_trial(dist: ExplicitDistribution, epsilon: float, cfg: TesterConfig, seed: int,
              trial: int, amplified: bool = False) -> dict:
    """One tester run; errors are captured in the record rather than raised."""
    src_seed, tester_seed = trial_seeds(seed, trial)
    cfg = cfg.replace(rng_seed=tester_seed)
    record = {"trial": trial, "decision": None, "branch": None, "case": None,
              "samples_used": None, "rejected_at": None, "error": None}
    try:
        if amplified:
            v = amplified_test(lambda s: make_source(dist, s), epsilon, cfg)
        else:
            v = gen_uniformity_test(make_source(dist, src_seed), epsilon, cfg)
    except (GenUnifError, BudgetExceededError, ValueError) as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    record.update(decision=v.decision.value, branch=v.branch.value,
                  case=v.case.value if v.case else None,
                  samples_used=int(v.samples_used), rejected_at=v.rejected_at)
    return record


def _run_trial_star(args):
    return run_trial(*args)


def _map(fn: Callable, items: list, jobs: int | None) -> list:
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def summarize(records: list[dict]) -> dict:
    done = [r for r in records if r["error"] is None]
    yes = sum(r["decision"] == "YES" for r in done)
    lo, hi = wilson_interval(yes, len(done))
    samples = [r["samples_used"] for r in done]
    hist = {b.value: 0 for b in Branch}
    for r in done:
        hist[r["branch"]] += 1
    return {
        "completed": len(done),
        "errors": len(records) - len(done),
        "accept_rate": yes / len(done) if done else None,
        "wilson_95": [lo, hi],
        "mean_samples": statistics.fmean(samples) if samples else None,
        "median_samples": statistics.median(samples) if samples else None,
        "branch_histogram": hist,
    }


def run_accept_rate(spec: ExperimentSpec, jobs: int | None = 1,
                    dist: ExplicitDistribution | None = None) -> dict:
    """Run ``spec.trials`` independent tester runs and aggregate them."""
    if dist is None:
        dist = parse_instance(spec.instance, derive_seed(spec.seed, "instance"))
    items = [(dist, spec.epsilon, spec.cfg, spec.seed, t, spec.amplified) for t in range(spec.trials)]
    records = _map(_run_trial_star, items, jobs)
    return {
        "mode": spec.mode,
        "instance": spec.instance,
        "epsilon": spec.epsilon,
        "trials": spec.trials,
        "seed": spec.seed,
        "amplified": spec.amplified,
        "config": spec.cfg.as_dict(),
        "ground_truth": ground_truth(dist),
        **summarize(records),
        "verdicts": records,
    }


# -- scaling --------------------------------------------------------------------

SCALING_FIELDS = ("n", "epsilon", "mean_samples", "accept_rate", "lo", "hi")


def case3_epsilon(n: int) -> float:
    """Half the lower regime threshold at support n."""
    lo, _ = regime_thresholds(n)
    return 0.5 * lo


def predicted_case3_samples(support: int, epsilon: float, cfg: TesterConfig) -> float:
    """Leading-order Case III budget for a uniform input on ``support`` elements."""
    n = 2 * support
    return cfg.c_m1_iii * n * math.log(n) + required_samples(support, epsilon / 2, cfg.c_m2)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def run_scaling(base: ExperimentSpec, grid: Sequence[int],
                epsilon_rule: Callable[[int], float] | None = None, jobs: int | None = 1) -> dict:
    """Accept-rate runs on uniform instances over a geometric support grid.

    ``epsilon_rule(n)`` overrides ``base.epsilon`` per grid point.
    """
    grid = [int(n) for n in grid]
    if len(grid) < 3:
        raise ValueError("scaling grid needs at least 3 points")
    ratios = [b / a for a, b in zip(grid, grid[1:])]
    if min(ratios) <= 1 or max(ratios) / min(ratios) > 1.01:
        raise ValueError("scaling grid must be increasing and geometric")
    rows = []
    for n in grid:
        eps = epsilon_rule(n) if epsilon_rule else base.epsilon
        spec = ExperimentSpec(f"uniform:{n}", eps, base.trials, base.cfg,
                              derive_seed(base.seed, "scaling", n), "scaling", base.amplified)
        rep = run_accept_rate(spec, jobs)
        lo, hi = rep["wilson_95"]
        rows.append({"n": n, "epsilon": eps, "mean_samples": rep["mean_samples"],
                     "accept_rate": rep["accept_rate"], "lo": lo, "hi": hi,
                     "branches": rep["branch_histogram"]})
    slope = loglog_slope([r["n"] for r in rows], [r["mean_samples"] for r in rows])
    return {"mode": "scaling", "trials": base.trials, "seed": base.seed, "rows": rows, "slope": slope}


def scaling_csv(result: dict) -> str:
    lines = [",".join(SCALING_FIELDS)]
    for row in result["rows"]:
        lines.append(",".join(repr(row[k]) if isinstance(row[k], float) else str(row[k]) for k in SCALING_FIELDS))
    return "\n".join(lines) + "\n"


# -- calibration ----------------------------------------------------------------

# (descriptor, epsilon, expected decision): uniform and oracle-certified far
# instances for each of the three regimes.
CALIBRATION_SUITE = (
    ("uniform:100000", 0.1, "YES"),
    ("paired_bias:100000,0.3", 0.1, "NO"),
    ("uniform:3000", 0.05, "YES"),
    ("paired_bias:3000,0.12", 0.05, "NO"),
    ("uniform:300", 0.02, "YES"),
    ("paired_bias:300,0.05", 0.02, "NO"),
)


def config_grid(base: TesterConfig, axes: dict[str, Iterable]) -> list[TesterConfig]:
    """Cartesian product of overrides on top of ``base``."""
    keys = list(axes)
    return [TesterConfig.from_mapping({**base.as_dict(), **dict(zip(keys, combo))})
            for combo in itertools.product(*(list(axes[k]) for k in keys))]


def run_calibration(grid: Sequence[TesterConfig], trials: int = 30, seed: int = 0,
                    suite=CALIBRATION_SUITE, jobs: int | None = 1, max_error: float = 1 / 3) -> dict:
    """Error rate of every config on every suite instance; pick the cheapest passing config.

    A config passes when, for every instance, the Wilson 95% upper bound on its
    error rate is at most ``max_error``.
    """
    if not grid:
        raise ValueError("calibration grid is empty")
    for desc, eps, expect in suite:
        dist = parse_instance(desc, derive_seed(seed, "instance"))
        truth = oracle.tv_to_uniform_family(dist)[0]
        if (expect == "YES") != (truth == 0.0) or (expect == "NO" and truth < eps):
            raise ValueError(f"calibration instance {desc} is not certified for eps={eps} (d={truth})")
    results = []
    for idx, cfg in enumerate(grid):
        cells = []
        for desc, eps, expect in suite:
            spec = ExperimentSpec(desc, eps, trials, cfg, derive_seed(seed, "calibrate", idx), "calibrate")
            rep = run_accept_rate(spec, jobs)
            # a trial that errored counts as wrong on either side
            wrong = sum(v["decision"] != expect for v in rep["verdicts"])
            _, hi = wilson_interval(wrong, trials)
            cells.append({"instance": desc, "epsilon": eps, "expect": expect,
                          "error_rate": wrong / trials, "error_hi": hi,
                          "mean_samples": rep["mean_samples"], "passed": hi <= max_error})
        passed = all(c["passed"] for c in cells)
        cost = statistics.fmean(c["mean_samples"] or math.inf for c in cells)
        results.append({"config": cfg.as_dict(), "passed": passed, "mean_samples": cost, "cells": cells})
    passing = [r for r in results if r["passed"]]
    best = min(passing, key=lambda r: r["mean_samples"]) if passing else None
    return {
        "mode": "calibrate",
        "trials": trials,
        "seed": seed,
        "status": "ok" if best else "no config passes",
        "best": best["config"] if best else None,
        "matrix": results,
    }


# -- oracle checks --------------------------------------------------------------

GAP_TOL = 1e-12


def check_distribution(name: str, dist: ExplicitDistribution, grid: int = 10**4) -> dict:
    """Oracle invariants for one explicit distribution."""
    d, k = oracle.tv_to_uniform_family(dist)
    gap, residual = oracle.structural_gap(dist)
    f2 = oracle.exact_fr(dist, 2)
    far_grid = oracle.threshold_distance_min(dist, grid)
    far_exact = oracle.threshold_distance_min(dist, None)
    uniform = bool(dist.masses.max() == dist.masses.min())
    checks = {
        "identity_residual": residual <= GAP_TOL,
        "distance_zero_iff_uniform": (d == 0.0) == uniform,
        "gap_zero_if_uniform": (not uniform) or abs(gap) <= GAP_TOL,
        "structural_gap": uniform or gap > d * d * f2 * f2 / 64,
        "threshold_distance_grid": uniform or far_grid >= d / 2,
    }
    return {
        "name": name,
        "support_size": dist.support_size,
        "distance": d,
        "best_k": k,
        "f2": f2,
        "gap": gap,
        "identity_residual": residual,
        "threshold_distance_grid_min": far_grid,
        "threshold_distance_exact_min": far_exact,
        "checks": checks,
        "passed": all(checks.values()),
    }


def run_oracle_check(corpus) -> dict:
    """Evaluate the oracle invariants on every member of a corpus path or member list."""
    members = read_corpus(corpus) if not isinstance(corpus, list) else corpus
    rows = [check_distribution(name, dist) for name, dist in members]
    warnings = [] if rows else ["empty corpus: nothing checked"]
    return {
        "mode": "oracle-check",
        "members": len(rows),
        "passed": all(r["passed"] for r in rows),
        "warnings": warnings,
        "results": rows,
    }
