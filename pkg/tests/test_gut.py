import math
from collections import Counter

import numpy as np
import pytest

from genunif import gut
from genunif.core import (
    Branch,
    ConfigError,
    Decision,
    ExplicitDistribution,
    TesterConfig,
    Verdict,
    make_rng,
    make_source,
)
from genunif.gut import (
    amplified_test,
    gen_uniformity_test,
    p_of_s_check,
    regime_thresholds,
    round_seeds,
    screen_support,
    select_branch,
)
from genunif.instances import paired_bias, random_simplex, uniform_subset
from genunif.oracle import tv_to_uniform_family, tv_to_uniform_on
from genunif.powersum import approximate_fr

from frozen_values import MAJORITY_9_OF_TWO_THIRDS, P_OF_S_PASS_AT_0_3, P_OF_S_PASS_AT_HALF


def run(dist, eps, seed, cfg=None):
    cfg = (cfg or TesterConfig()).replace(rng_seed=seed)
    return gen_uniformity_test(make_source(dist, seed), eps, cfg)


def trace_value(v, key):
    return dict(v.trace)[key]


def test_branch_thresholds():
    lo, hi = regime_thresholds(10**4)
    assert hi == pytest.approx(0.1) and lo == pytest.approx(0.1 / math.log(10**4))
    assert select_branch(10**4, 0.1) is Branch.CASE_I
    assert select_branch(10**4, 0.0999) is Branch.CASE_II
    assert select_branch(10**4, lo) is Branch.CASE_II
    assert select_branch(10**4, lo * 0.999) is Branch.CASE_III
    assert regime_thresholds(1)[0] == math.inf
    assert select_branch(1, 0.5) is Branch.CASE_III


@pytest.mark.parametrize("dist, eps, case", [
    (uniform_subset(10**5, 10**5), 0.1, Branch.CASE_I),
    (paired_bias(3000, 0.12), 0.05, Branch.CASE_II),
    (uniform_subset(300, 300), 0.02, Branch.CASE_III),
    (ExplicitDistribution.from_mapping({3: 1.0}), 0.5, Branch.CASE_III),
])
def test_trace_consistency(dist, eps, case):
    v = run(dist, eps, 1)
    n = int(trace_value(v, "n"))
    assert n == math.ceil(2 / trace_value(v, "gamma2"))
    assert v.case is case is select_branch(n, eps)
    assert v.samples_used == sum(v.phase_draws.values())


def test_samples_used_is_source_delta():
    src = make_source(uniform_subset(3000, 3000), 4)
    src.draw_many(123)
    v = gen_uniformity_test(src, 0.05, TesterConfig(rng_seed=4))
    assert v.samples_used == src.draws_made - 123


def test_point_mass_is_uniform():
    pm = ExplicitDistribution.from_mapping({1: 1.0})
    assert all(run(pm, eps, s).accepted for s in range(10) for eps in (0.05, 0.5))
    # at eps = 0.9 the large-eps branch runs; with n = 2 it accepts, while
    # n = 3 (gamma2 just under 1) trips the gamma3 sanity check at 8/n^2
    for s in range(40):
        v = run(pm, 0.9, s)
        if trace_value(v, "n") == 2:
            assert v.accepted
        else:
            assert v.rejected_at in (None, "gamma3", "f4", "f5")


def test_rejects_bad_epsilon():
    for eps in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            run(uniform_subset(10, 10), eps, 0)


def test_deterministic_given_seeds():
    d = random_simplex(500, seed=2)
    a, b = run(d, 0.1, 7).to_dict(), run(d, 0.1, 7).to_dict()
    assert a == b


def test_case_one_uniform_accepts():
    verdicts = [run(uniform_subset(1000, 1000), 0.25, s) for s in range(200)]
    assert all(v.case is Branch.CASE_I for v in verdicts)
    assert sum(v.accepted for v in verdicts) >= 200 * 2 / 3


def test_case_one_far_rejects():
    p = paired_bias(1000, 0.4)
    assert tv_to_uniform_family(p)[0] >= 0.17
    verdicts = [run(p, 0.17, s) for s in range(200)]
    assert Counter(v.case for v in verdicts) == {Branch.CASE_I: 200}
    assert sum(not v.accepted for v in verdicts) >= 200 * 2 / 3


def test_heavier_paired_bias_rejects():
    # 0.15-far, not 0.25-far; rejected all the same
    verdicts = [run(paired_bias(1000, 0.6), 0.25, s) for s in range(200)]
    assert sum(not v.accepted for v in verdicts) >= 200 * 2 / 3


@pytest.mark.parametrize("eps, case", [(0.01, Branch.CASE_II), (0.001, Branch.CASE_III)])
def test_large_uniform_accepts(eps, case):
    d = uniform_subset(10**6, 10**6)
    verdicts = [run(d, eps, s) for s in range(50)]
    assert all(v.case is case for v in verdicts)
    assert sum(v.accepted for v in verdicts) >= 50 * 2 / 3


def test_case_three_outside_support_rejects():
    # most mass on 30 elements, a thin tail of 20000 elements the support
    # phase mostly misses
    w = np.r_[np.full(30, 0.97 / 30), np.full(20_000, 0.03 / 20_000)]
    p = ExplicitDistribution.from_weights(w)
    verdicts = [run(p, 0.01, s) for s in range(20)]
    assert all(v.case is Branch.CASE_III for v in verdicts)
    assert Counter(v.rejected_at for v in verdicts)["outside-support"] >= 15


def test_p_of_s_examples():
    d = ExplicitDistribution.from_weights(np.ones(10))
    assert all(p_of_s_check(make_source(d, s), range(10)) for s in range(50))
    assert not any(p_of_s_check(make_source(d, s), [99]) for s in range(50))
    half = np.mean([p_of_s_check(make_source(d, s), range(5)) for s in range(1000)])
    assert half >= 0.9 and P_OF_S_PASS_AT_HALF >= 0.9
    assert P_OF_S_PASS_AT_0_3 < 1 / 50
    with pytest.raises(ValueError):
        p_of_s_check(make_source(d, 0), [])


def test_single_round_amplification_is_single_run():
    d = uniform_subset(3000, 3000)
    cfg = TesterConfig(amplification_rounds=1, rng_seed=5)
    amp = amplified_test(lambda s: make_source(d, s), 0.05, cfg)
    (src_seed, tester_seed), = round_seeds(cfg)
    single = gen_uniformity_test(make_source(d, src_seed), 0.05, cfg.replace(rng_seed=tester_seed))
    assert amp.decision is single.decision and amp.samples_used == single.samples_used
    assert amp.rounds[0].to_dict() == single.to_dict()


def test_even_rounds_rejected():
    with pytest.raises(ConfigError):
        TesterConfig(amplification_rounds=8)


def test_majority_of_nine(monkeypatch):
    assert MAJORITY_9_OF_TWO_THIRDS >= 0.85

    def coin(src, eps, cfg):
        yes = make_rng(cfg.rng_seed).random() < 2 / 3
        return Verdict(Decision.YES if yes else Decision.NO, Branch.CASE_I, 0, case=Branch.CASE_I)

    monkeypatch.setattr(gut, "gen_uniformity_test", coin)
    wins = sum(amplified_test(lambda s: None, 0.1, TesterConfig(rng_seed=t)).accepted for t in range(4000))
    assert abs(wins / 4000 - MAJORITY_9_OF_TWO_THIRDS) < 4 * math.sqrt(0.86 * 0.14 / 4000)


@pytest.mark.parametrize("dist, eps", [
    (paired_bias(3000, 0.12), 0.05),
    (random_simplex(3000, seed=11), 0.05),
])
def test_restriction_stays_far(dist, eps):
    d, _ = tv_to_uniform_family(dist)
    assert d >= eps
    cfg = TesterConfig()
    checked = far = 0
    for t in range(100):
        src = make_source(dist, t)
        g2, _ = approximate_fr(src, 2, 0.5, make_rng(t, "g2"))
        n = math.ceil(2 / g2)
        if select_branch(n, eps) is not Branch.CASE_II:
            continue
        S, failed = screen_support(src, n, cfg, make_rng(t, "support"))
        if failed:
            continue
        checked += 1
        far += tv_to_uniform_on(dist.conditional(S.tolist()), S) >= eps / 10
    assert checked >= 50
    assert far >= 0.9 * checked
