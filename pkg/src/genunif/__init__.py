"""Generalized uniformity testing from samples over an unknown discrete domain."""

from .core import (
    Branch,
    BudgetExceededError,
    ConfigError,
    ContractViolationError,
    Decision,
    ExplicitDistribution,
    ExplicitMeasure,
    Fingerprint,
    GenUnifError,
    SampleSource,
    TesterConfig,
    Verdict,
    conditional_source,
    make_source,
    poisson_draw_count,
)
from .gut import amplified_test, gen_uniformity_test, p_of_s_check
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Branch",
    "BudgetExceededError",
    "ConfigError",
    "ContractViolationError",
    "Decision",
    "ExplicitDistribution",
    "ExplicitMeasure",
    "Fingerprint",
    "GenUnifError",
    "SampleSource",
    "TesterConfig",
    "Verdict",
    "amplified_test",
    "conditional_source",
    "gen_uniformity_test",
    "make_source",
    "p_of_s_check",
    "poisson_draw_count",
]
