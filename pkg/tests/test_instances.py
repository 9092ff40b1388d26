import math

import numpy as np
import pytest
import sympy as sp

from genunif.core import ExplicitMeasure
from genunif.instances import (
    CorpusFormatError,
    HardInstanceParams,
    draw_no_measure,
    draw_yes_measure,
    paired_bias,
    poisson_process_sample,
    random_simplex,
    read_corpus,
    standard_corpus,
    uniform_subset,
    write_corpus,
)
from genunif.oracle import tv_to_uniform_family, tv_to_uniform_on

PARAMS = HardInstanceParams.default(10**4, 0.1)


def test_uniform_subset_examples():
    assert np.all(uniform_subset(10, 10).masses == 0.1)
    assert uniform_subset(10, 1).support_size == 1
    d = uniform_subset(100, 37, seed=4)
    assert d.support_size == 37 and np.all(d.masses == 1 / 37)
    assert tv_to_uniform_family(d)[0] == 0.0
    assert np.array_equal(uniform_subset(100, 37, seed=4).labels, d.labels)
    with pytest.raises(ValueError):
        uniform_subset(5, 6)


def test_paired_bias_examples():
    p = paired_bias(2, 0.5)
    assert p.masses.tolist() == [0.75, 0.25]
    assert tv_to_uniform_on(p, [0, 1]) == pytest.approx(0.25)
    assert tv_to_uniform_family(paired_bias(10, 0.0))[0] == 0.0
    with pytest.raises(ValueError):
        paired_bias(5, 0.1)


def test_paired_bias_distance_peaks_below_a_quarter():
    # the family's distance to uniform-over-subset tops out at 3 - 2 sqrt(2)
    best = max(tv_to_uniform_family(paired_bias(2000, b))[0] for b in np.linspace(0.05, 0.95, 91))
    assert best == pytest.approx(3 - 2 * math.sqrt(2), abs=2e-3)
    assert tv_to_uniform_family(paired_bias(1000, 0.6))[0] == pytest.approx(0.15)


def test_random_simplex_is_valid():
    p = random_simplex(50, seed=1)
    assert p.support_size == 50 and abs(p.total_mass - 1) < 1e-12


def test_params_regime():
    PARAMS.check_regime()  # the eps = 0.1, n = 1e4 benchmark sits on both endpoints
    with pytest.raises(ValueError):
        HardInstanceParams(100, 10, 0.1).check_regime()
    with pytest.raises(ValueError):
        HardInstanceParams.default(10**4, 0.2).check_regime()
    with pytest.raises(ValueError):
        HardInstanceParams(10, 10, 1.5)


def test_yes_measure_single_level_and_mass():
    totals, sizes = [], []
    e2 = 1 + PARAMS.epsilon**2
    for seed in range(500):
        mu = draw_yes_measure(PARAMS, seed)
        assert np.unique(mu.masses).size <= 1
        totals.append(mu.total_mass)
        sizes.append(mu.support_size)
        if seed < 50:
            assert tv_to_uniform_family(mu.normalized())[0] == 0.0
    assert 0.9 <= np.mean(totals) <= 1.1
    assert all(0.8 * PARAMS.n / e2 <= s <= 1.2 * PARAMS.n / e2 for s in sizes)
    assert np.all(draw_yes_measure(PARAMS, 7).labels < PARAMS.N)


def test_no_measure_levels():
    high_frac = []
    for seed in range(500):
        mu = draw_no_measure(PARAMS, seed)
        high_frac.append(np.mean(mu.masses > 1 / PARAMS.n))
    assert 0.45 <= min(high_frac) and max(high_frac) <= 0.55


def test_ensemble_moments_match_symbolically():
    eps, n, N = sp.symbols("epsilon n N", positive=True)
    w_yes = n / (N * (1 + eps**2))
    level_yes = (1 + eps**2) / n
    m1_yes, m2_yes = w_yes * level_yes, w_yes * level_yes**2
    m1_no = n / (2 * N) * ((1 + eps) / n + (1 - eps) / n)
    m2_no = n / (2 * N) * (((1 + eps) / n) ** 2 + ((1 - eps) / n) ** 2)
    assert sp.simplify(m1_yes - m1_no) == 0 and sp.simplify(m1_yes - 1 / N) == 0
    assert sp.simplify(m2_yes - m2_no) == 0 and sp.simplify(m2_yes - (1 + eps**2) / (n * N)) == 0


def test_poisson_process_examples():
    assert poisson_process_sample(ExplicitMeasure([], []), 3.0, 0).total == 0
    rng = np.random.default_rng(0)
    one = ExplicitMeasure([5], [1.0])
    counts = [poisson_process_sample(one, 5.0, rng).total for _ in range(100_000)]
    assert 4.93 <= np.mean(counts) <= 5.07
    mu = draw_yes_measure(PARAMS, 1)
    totals = [poisson_process_sample(mu, 10.0, rng).total for _ in range(2000)]
    lam = 10.0 * mu.total_mass
    assert abs(np.mean(totals) - lam) < 4 * math.sqrt(lam / 2000)
    assert np.var(totals) == pytest.approx(lam, rel=0.15)
    with pytest.raises(ValueError):
        poisson_process_sample(one, 0.0, 0)


def test_corpus_round_trip(tmp_path):
    members = standard_corpus()
    path = write_corpus(tmp_path / "c.tsv", members)
    back = read_corpus(path)
    assert [n for n, _ in back] == [n for n, _ in members]
    for (_, a), (_, b) in zip(members, back):
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_allclose(a.masses, b.masses, rtol=1e-15)
    (tmp_path / "d").mkdir()
    (tmp_path / "d" / "single.tsv").write_text("1\t0.5\n2\t0.5\n")
    write_corpus(tmp_path / "d" / "more.tsv", members[:2])
    assert [n for n, _ in read_corpus(tmp_path / "d")] == [members[0][0], members[1][0], "single"]


@pytest.mark.parametrize("text, line", [
    ("1\t0.5\n2 0.5\n", ":2:"),
    ("1\t0.5\nx\t0.5\n", ":2:"),
    ("# a\n1\t0.7\n", ":1:"),
    ("# a\n# b\n1\t1.0\n", ":1:"),
    ("1\t-1\n", ":1:"),
])
def test_corpus_errors_carry_line_numbers(tmp_path, text, line):
    f = tmp_path / "bad.tsv"
    f.write_text(text)
    with pytest.raises(CorpusFormatError, match=line):
        read_corpus(f)
