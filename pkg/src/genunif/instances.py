"""Test distributions: uniform-over-subset, paired-bias, random simplex points,
and the two matched-moment ensembles of sparse measures used for lower bounds.

Also reads and writes the corpus format (``label<TAB>mass`` lines; ``# name``
lines separate members of a multi-member file).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import (
    LABEL_DTYPE,
    ExplicitDistribution,
    ExplicitMeasure,
    Fingerprint,
    GenUnifError,
    as_generator,
    make_rng,
)


@dataclass(frozen=True)
class HardInstanceParams:
    """Scale n, ambient bin count N, distance epsilon and Poisson intensity k."""

    n: int
    N: int
    epsilon: float
    k: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("n and N must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    @classmethod
    def default(cls, n: int, epsilon: float, k: float = 0.0) -> "HardInstanceParams":
        """Smallest ambient size the generators accept: N = ceil(20 n / eps^2)."""
        return cls(int(n), math.ceil(20 * n / epsilon**2), float(epsilon), float(k))

    def check_regime(self, tol: float = 1e-12) -> None:
        """Raise unless N >= 20 n/eps^2 and n^(-1/4) <= eps <= 1/10.

        The endpoints are admitted: the standard benchmark point eps = 0.1,
        n = 10^4 sits exactly on both.
        """
        if self.N < 20 * self.n / self.epsilon**2 * (1 - tol):
            raise ValueError(f"N = {self.N} is below 20 n / eps^2")
        lo = self.n ** -0.25
        if not lo * (1 - tol) <= self.epsilon <= 0.1 * (1 + tol):
            raise ValueError(f"epsilon = {self.epsilon} outside [n^-1/4, 1/10] = [{lo:.4g}, 0.1]")


def uniform_subset(domain_size: int, subset_size: int, seed: int = 0) -> ExplicitDistribution:
    """Uniform distribution on a seeded random subset of labels 0..domain_size-1."""
    if not 1 <= subset_size <= domain_size:
        raise ValueError("need 1 <= subset_size <= domain_size")
    rng = make_rng(seed, "uniform-subset", domain_size, subset_size)
    labels = np.sort(rng.choice(domain_size, size=subset_size, replace=False)).astype(LABEL_DTYPE)
    return ExplicitDistribution(labels, np.full(subset_size, 1.0 / subset_size))


def paired_bias(support_size: int, bias: float) -> ExplicitDistribution:
    """Labels 0..s-1: the first half at (1+bias)/s, the second at (1-bias)/s."""
    if support_size < 2 or support_size % 2:
        raise ValueError("support_size must be a positive even number")
    if not 0 <= bias < 1:
        raise ValueError("bias must lie in [0, 1)")
    half = support_size // 2
    masses = np.r_[np.full(half, (1 + bias) / support_size), np.full(half, (1 - bias) / support_size)]
    return ExplicitDistribution(np.arange(support_size, dtype=LABEL_DTYPE), masses)


def random_simplex(support_size: int, seed: int = 0, alpha: float = 1.0) -> ExplicitDistribution:
    """Dirichlet(alpha, ..., alpha) point on support_size labels."""
    rng = make_rng(seed, "simplex", support_size)
    w = rng.dirichlet(np.full(support_size, float(alpha)))
    if not np.all(w > 0):
        # tiny alpha can underflow; keep the labels that carry mass
        keep = w > 0
        return ExplicitDistribution.from_weights(w[keep], np.flatnonzero(keep))
    return ExplicitDistribution.from_weights(w)


def _sparse_bins(N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    # uniform sample of `count` distinct bins out of N without touching all N
    if count == 0:
        return np.empty(0, LABEL_DTYPE)
    if count * 4 > N:
        return np.sort(rng.choice(N, size=count, replace=False)).astype(LABEL_DTYPE)
    picked = np.unique(rng.integers(0, N, size=count + count // 8 + 16))
    while picked.size < count:
        picked = np.unique(np.r_[picked, rng.integers(0, N, size=count - picked.size + 16)])
    return np.sort(rng.choice(picked, size=count, replace=False)).astype(LABEL_DTYPE)


def draw_yes_measure(params: HardInstanceParams, seed: int) -> ExplicitMeasure:
    """Every bin independently carries (1+eps^2)/n w.p. n/(N(1+eps^2)), else nothing."""
    params.check_regime()
    rng = make_rng(seed, "yes-measure")
    e2 = 1 + params.epsilon**2
    count = int(rng.binomial(params.N, params.n / (params.N * e2)))
    bins = _sparse_bins(params.N, count, rng)
    return ExplicitMeasure(bins, np.full(count, e2 / params.n))


def draw_no_measure(params: HardInstanceParams, seed: int) -> ExplicitMeasure:
    """Every bin independently carries (1+eps)/n or (1-eps)/n, each w.p. n/(2N)."""
    params.check_regime()
    rng = make_rng(seed, "no-measure")
    n, N, eps = params.n, params.N, params.epsilon
    high, low, _ = rng.multinomial(N, [n / (2 * N), n / (2 * N), 1 - n / N])
    bins = _sparse_bins(N, int(high + low), rng)
    levels = np.r_[np.full(high, (1 + eps) / n), np.full(low, (1 - eps) / n)]
    # bins come out sorted, so shuffle which of them get the high level
    return ExplicitMeasure(bins, rng.permutation(levels))


def poisson_process_sample(measure: ExplicitMeasure, k: float, seed) -> Fingerprint:
    """Bin i independently receives Poisson(k * mu_i) points."""
    if not k > 0:
        raise ValueError("k must be positive")
    rng = as_generator(seed) if isinstance(seed, np.random.Generator) else make_rng(seed, "poisson-process")
    counts = rng.poisson(k * measure.masses)
    nz = counts > 0
    return Fingerprint(measure.labels[nz], counts[nz])


# -- corpus files ---------------------------------------------------------------

class CorpusFormatError(GenUnifError, ValueError):
    """A corpus file line could not be parsed."""


def format_distribution(dist: ExplicitMeasure) -> str:
    return "".join(f"{lab}\t{mass!r}\n" for lab, mass in zip(dist.labels.tolist(), dist.masses.tolist()))


def write_corpus(path: str | Path, members: Iterable[tuple[str, ExplicitMeasure]]) -> Path:
    """Write named members to one file, each introduced by a ``# name`` line."""
    path = Path(path)
    chunks = []
    for name, dist in members:
        if "\n" in name:
            raise ValueError("member names must be single-line")
        chunks.append(f"# {name}\n{format_distribution(dist)}")
    path.write_text("".join(chunks))
    return path


def _finish(path, name, labels, masses, first_line):
    if not labels:
        raise CorpusFormatError(f"{path}:{first_line}: member {name!r} has no entries")
    total = math.fsum(masses)
    if abs(total - 1.0) > 1e-9:
        raise CorpusFormatError(f"{path}:{first_line}: member {name!r} masses sum to {total!r}")
    try:
        return ExplicitDistribution.from_weights(masses, labels)
    except ValueError as exc:
        raise CorpusFormatError(f"{path}:{first_line}: member {name!r}: {exc}") from None


def read_corpus_file(path: str | Path) -> list[tuple[str, ExplicitDistribution]]:
    """Parse one corpus file; masses must sum to 1 within 1e-9 per member."""
    path = Path(path)
    members = []
    name, labels, masses, start = path.stem, [], [], 1
    seen_header = False
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if labels:
                members.append((name, _finish(path, name, labels, masses, start)))
            elif seen_header:
                raise CorpusFormatError(f"{path}:{start}: member {name!r} has no entries")
            name, labels, masses, start = line[1:].strip() or f"{path.stem}-{lineno}", [], [], lineno
            seen_header = True
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise CorpusFormatError(f"{path}:{lineno}: expected 'label<TAB>mass', got {raw!r}")
        try:
            lab, mass = int(parts[0]), float(parts[1])
        except ValueError:
            raise CorpusFormatError(f"{path}:{lineno}: unparseable entry {raw!r}") from None
        if not (math.isfinite(mass) and mass >= 0):
            raise CorpusFormatError(f"{path}:{lineno}: mass must be finite and nonnegative")
        labels.append(lab)
        masses.append(mass)
    if labels:
        members.append((name, _finish(path, name, labels, masses, start)))
    elif seen_header:
        raise CorpusFormatError(f"{path}:{start}: member {name!r} has no entries")
    return members


def read_corpus(path: str | Path) -> list[tuple[str, ExplicitDistribution]]:
    """A corpus file, or every ``*.tsv`` file in a directory (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        out = []
        for f in sorted(path.glob("*.tsv")):
            out.extend(read_corpus_file(f))
        return out
    if not path.exists():
        raise FileNotFoundError(path)
    return read_corpus_file(path)


def standard_corpus(seed: int = 0) -> list[tuple[str, ExplicitDistribution]]:
    """Uniform-subset, paired-bias and random simplex members for oracle checks."""
    members = []
    for domain, size in [(10, 10), (10, 1), (100, 37), (2000, 1500)]:
        members.append((f"uniform_subset-{domain}-{size}", uniform_subset(domain, size, seed)))
    for s, b in [(2, 0.5), (64, 0.4), (1000, 0.6), (1000, 0.2)]:
        members.append((f"paired_bias-{s}-{b}", paired_bias(s, b)))
    for i, s in enumerate([5, 12, 50, 200, 1000]):
        members.append((f"simplex-{s}", random_simplex(s, seed=seed * 1000 + i)))
    return members
