"""Generalized uniformity tester with unknown domain.

A first collision-based estimate of F_2 fixes the effective support scale n;
epsilon relative to n^(-1/4) then selects one of three regimes:

* large eps: compare F_3 against F_2^2 (equal exactly for uniform distributions),
  after sanity checks on F_3, F_4 and F_5;
* medium eps: learn a support set S from O(n) draws and run a known-support
  uniformity test on the conditional distribution (p|S);
* small eps: learn S from O(n log n) draws, then test uniformity over S directly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    Branch,
    ConfigError,
    Decision,
    SampleSource,
    TesterConfig,
    Verdict,
    conditional_source,
    derive_seed,
    make_rng,
    poisson_draw_count,
)
from .powersum import approximate_fr, estimate_fr, threshold_test_fr, Size
from .uniformity_known import KnownSupportTest, collision_test, required_samples, test_uniform


@dataclass
class RunState:
    """Intermediate quantities of one tester run."""

    gamma2_hat: float = 0.0
    n: int = 0
    gamma3_hat: float | None = None
    m: int | None = None
    c4: float | None = None
    c5: float | None = None
    case: Branch | None = None
    trace: list[tuple[str, float]] = field(default_factory=list)
    phase_draws: dict[str, int] = field(default_factory=dict)

    def note(self, key: str, value: float) -> None:
        self.trace.append((key, float(value)))


def regime_thresholds(n: int) -> tuple[float, float]:
    """(lower, upper) = (n^-1/4 / ln n, n^-1/4); lower is inf at n = 1."""
    upper = n ** -0.25
    ln_n = math.log(n)
    return (upper / ln_n if ln_n > 0 else math.inf), upper


def select_branch(n: int, epsilon: float) -> Branch:
    lower, upper = regime_thresholds(n)
    if epsilon >= upper:
        return Branch.CASE_I
    if epsilon >= lower:
        return Branch.CASE_II
    return Branch.CASE_III


def heavy_hitter_cap(n: int, cfg: TesterConfig) -> float:
    return max(cfg.heavy_hitter_mult * math.log(n), 10.0)


def p_of_s_fraction(src: SampleSource, S, samples: int = 200) -> float:
    """Fraction of ``samples`` fresh draws that land in S."""
    labels = src.draw_many(int(samples))
    return float(np.isin(labels, np.asarray(S)).mean())


def p_of_s_check(src: SampleSource, S, budget: int = 200, threshold: float = 0.4) -> bool:
    """Pass iff at least ``threshold`` of ``budget`` fresh draws land in S."""
    if len(S) == 0:
        raise ValueError("S must be nonempty")
    return p_of_s_fraction(src, S, budget) >= threshold


class _Phases:
    """Charges the source's draw delta to a named phase."""

    def __init__(self, src: SampleSource, state: RunState):
        self.src, self.state = src, state

    def run(self, name: str, fn: Callable, *args, **kwargs):
        before = self.src.draws_made
        try:
            return fn(*args, **kwargs)
        finally:
            used = self.src.draws_made - before
            self.state.phase_draws[name] = self.state.phase_draws.get(name, 0) + used


def screen_support(src: SampleSource, n: int, cfg: TesterConfig, rng, state: RunState | None = None,
                   phases: _Phases | None = None) -> tuple[np.ndarray, str | None]:
    """Learn S from Poi(c_m1_ii n) draws and apply the heavy-hitter, size and mass checks.

    Returns (S, name of the failed check or None).
    """
    state = state if state is not None else RunState(n=n)
    phases = phases or _Phases(src, state)
    m1 = max(1, math.ceil(cfg.c_m1_ii * n))
    fp = phases.run("support", lambda: src.draw_fingerprint(poisson_draw_count(m1, rng)))
    S = fp.labels
    state.note("m1", m1)
    state.note("support_size", S.size)
    top = int(fp.counts.max()) if fp.distinct else 0
    state.note("max_count", top)
    if top > heavy_hitter_cap(n, cfg):
        return S, "heavy-hitter"
    if S.size < cfg.min_support_frac * n or S.size == 0:
        return S, "support-size"
    frac = phases.run("mass-check", p_of_s_fraction, src, S, cfg.p_of_s_samples)
    state.note("p_of_s_fraction", frac)
    if frac < cfg.p_of_s_threshold:
        return S, "support-mass"
    return S, None


def gen_uniformity_test(src: SampleSource, epsilon: float, cfg: TesterConfig | None = None) -> Verdict:
    """YES if the sampled distribution looks uniform over some subset, NO if eps-far."""
    cfg = cfg or TesterConfig()
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    start = src.draws_made
    state = RunState()
    phases = _Phases(src, state)
    seed = cfg.rng_seed

    def verdict(decision: Decision, rejected_at: str | None = None) -> Verdict:
        branch = Branch.EARLY_REJECT if rejected_at else state.case
        return Verdict(decision, branch, src.draws_made - start, state.trace, state.case,
                       state.phase_draws, rejected_at)

    g2, _ = phases.run("gamma2", approximate_fr, src, 2, 0.5, make_rng(seed, "gamma2"),
                       cfg.c_stage2, cfg.stage1_cap)
    state.gamma2_hat = g2
    state.note("gamma2", g2)
    if g2 <= 0:
        # no pairwise collision in stage 2: nothing to calibrate n against
        return verdict(Decision.NO, "gamma2")
    n = math.ceil(2 / g2)
    state.n = n
    state.note("n", n)
    state.case = select_branch(n, epsilon)
    lower, upper = regime_thresholds(n)
    state.note("eps_upper", upper)
    state.note("eps_lower", lower)

    if state.case is Branch.CASE_I:
        g3, _ = phases.run("gamma3", approximate_fr, src, 3, 0.5, make_rng(seed, "gamma3"),
                           cfg.c_stage2, cfg.stage1_cap)
        state.gamma3_hat = g3
        state.note("gamma3", g3)
        if g3 >= 8 / n**2 or g3 <= 1 / (8 * n**2):
            return verdict(Decision.NO, "gamma3")
        m = math.ceil(cfg.c_m * n ** (2 / 3) / epsilon ** (4 / 3))
        state.m = m
        state.note("m", m)
        state.c4 = cfg.c4_a + cfg.c4_b * m**4 / n**3
        state.note("c4", state.c4)
        big4 = phases.run("f4", threshold_test_fr, src, 4, m, 20 * state.c4, make_rng(seed, "f4"), cfg.c_tt)
        if big4 is Size.LARGE:
            return verdict(Decision.NO, "f4")
        state.c5 = cfg.c5_a + cfg.c5_b * m**5 / n**4
        state.note("c5", state.c5)
        big5 = phases.run("f5", threshold_test_fr, src, 5, m, 20 * state.c5, make_rng(seed, "f5"), cfg.c_tt)
        if big5 is Size.LARGE:
            return verdict(Decision.NO, "f5")
        f2 = phases.run("f2", estimate_fr, src, 2, m, make_rng(seed, "f2")).value
        f3 = phases.run("f3", estimate_fr, src, 3, m, make_rng(seed, "f3")).value
        stat = f3 - f2 * f2
        threshold = epsilon**2 / (300 * n**2)
        state.note("f2_hat", f2)
        state.note("f3_hat", f3)
        state.note("statistic", stat)
        state.note("threshold", threshold)
        return verdict(Decision.YES if stat <= threshold else Decision.NO)

    if state.case is Branch.CASE_II:
        S, failed = screen_support(src, n, cfg, make_rng(seed, "support"), state, phases)
        if failed:
            return verdict(Decision.NO, failed)
        cond = conditional_source(src, S, cfg.rejection_cap)
        test = KnownSupportTest(S, epsilon / 10)
        decision = phases.run("uniformity", test_uniform, cond, test, cfg.c_m2)
        return verdict(decision)

    # Case III
    m1 = max(1, math.ceil(cfg.c_m1_iii * n * math.log(n)))
    state.note("m1", m1)
    fp1 = phases.run("support", lambda: src.draw_fingerprint(poisson_draw_count(m1, make_rng(seed, "support"))))
    S = fp1.labels
    state.note("support_size", S.size)
    m2 = required_samples(S.size, epsilon / 2, cfg.c_m2)
    state.note("m2", m2)
    fp2 = phases.run("uniformity", src.draw_fingerprint, m2)
    if not np.isin(fp2.labels, S).all():
        return verdict(Decision.NO, "outside-support")
    return verdict(collision_test(fp2, S.size, epsilon / 2))


gen_uniformity_test.__test__ = False


def round_seeds(cfg: TesterConfig) -> list[tuple[int, int]]:
    """(source seed, tester seed) for each amplification round."""
    return [(derive_seed(cfg.rng_seed, "round-source", i), derive_seed(cfg.rng_seed, "round-tester", i))
            for i in range(int(cfg.amplification_rounds))]


def amplified_test(src_factory: Callable[[int], SampleSource], epsilon: float,
                   cfg: TesterConfig | None = None) -> Verdict:
    """Majority vote over ``cfg.amplification_rounds`` runs on independent sources.

    ``src_factory(seed)`` must return a fresh source seeded with ``seed``.
    """
    cfg = cfg or TesterConfig()
    if int(cfg.amplification_rounds) % 2 == 0:
        raise ConfigError("amplification_rounds must be odd")
    rounds = []
    for src_seed, tester_seed in round_seeds(cfg):
        rounds.append(gen_uniformity_test(src_factory(src_seed), epsilon, cfg.replace(rng_seed=tester_seed)))
    yes = sum(v.accepted for v in rounds)
    decision = Decision.YES if 2 * yes > len(rounds) else Decision.NO
    agreeing = [v for v in rounds if v.decision is decision]
    branch = Counter(v.branch for v in agreeing).most_common(1)[0][0]
    case = Counter(v.case for v in rounds).most_common(1)[0][0]
    return Verdict(
        decision, branch, sum(v.samples_used for v in rounds),
        trace=[("yes_votes", float(yes)), ("rounds", float(len(rounds)))],
        case=case,
        phase_draws={f"round{i}": v.samples_used for i, v in enumerate(rounds)},
        rounds=rounds,
    )
