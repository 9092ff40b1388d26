"""Collision tester for uniformity over an explicitly known finite support."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import LABEL_DTYPE, ContractViolationError, Decision, Fingerprint, SampleSource

DEFAULT_C_U = 8.0


@dataclass(frozen=True, eq=False)
class KnownSupportTest:
    support: np.ndarray
    epsilon: float
    confidence_fail: float = 1 / 20

    def __post_init__(self):
        s = np.unique(np.asarray(list(self.support) if not isinstance(self.support, np.ndarray)
                                 else self.support, dtype=LABEL_DTYPE))
        if s.size == 0:
            raise ValueError("support must be nonempty")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        s.setflags(write=False)
        object.__setattr__(self, "support", s)

    @property
    def size(self) -> int:
        return int(self.support.size)


def required_samples(support_size: int, epsilon: float, c_u: float = DEFAULT_C_U) -> int:
    """ceil(c_u * sqrt(|S|) / eps^2)."""
    if support_size < 1:
        raise ValueError("support_size must be >= 1")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.ceil(c_u * math.sqrt(support_size) / epsilon**2)


def collision_statistic(fp: Fingerprint) -> tuple[float, int]:
    """(unordered pairwise collisions, sample size)."""
    return kernels.falling_factorial_sum(fp.counts, 2) / 2, fp.total


def collision_test(fp: Fingerprint, support_size: int, epsilon: float) -> Decision:
    """Accept iff C / C(m, 2) <= (1 + 2 eps^2) / |S|."""
    coll, m = collision_statistic(fp)
    if support_size == 1 or m < 2:
        return Decision.YES
    rate = coll / (m * (m - 1) / 2)
    return Decision.YES if rate <= (1 + 2 * epsilon**2) / support_size else Decision.NO


def check_support(labels: np.ndarray, support: np.ndarray) -> None:
    outside = ~np.isin(labels, support)
    if outside.any():
        raise ContractViolationError(f"sample label {int(labels[outside][0])} lies outside the known support")


def test_uniform(src: SampleSource, test: KnownSupportTest, c_u: float = DEFAULT_C_U) -> Decision:
    """Draw required_samples(|S|, eps) samples and run the collision test."""
    m = required_samples(test.size, test.epsilon, c_u)
    fp = src.draw_fingerprint(m)
    check_support(fp.labels, test.support)
    return collision_test(fp, test.size, test.epsilon)


test_uniform.__test__ = False  # keep pytest from collecting it
