"""Domain types: explicit distributions, sample sources, verdicts and tester config.

Element labels are opaque int64 identifiers.  Sources count every draw they
hand out (``draws_made``); draws can be handed back with :meth:`SampleSource.unread`
when a caller scanned ahead of what it needed, which keeps the count exact.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import kernels

LABEL_DTYPE = np.int64
DEFAULT_REJECTION_CAP = 10**6


class GenUnifError(Exception):
    """Base class for library errors."""


class BudgetExceededError(GenUnifError):
    """A draw cap was hit (rejection sampling or collision waiting)."""


class ContractViolationError(GenUnifError, ValueError):
    """A source produced a label outside the promised support."""


class ConfigError(GenUnifError, ValueError):
    """Invalid tester configuration."""


# -- randomness ---------------------------------------------------------------

def _stream_key(stream: Iterable[object]) -> tuple[int, ...]:
    key = []
    for part in stream:
        if isinstance(part, str):
            # stable across processes, unlike hash()
            key.append(int.from_bytes(part.encode("utf-8")[:8].ljust(8, b"\0"), "little"))
            key.append(len(part))
        else:
            key.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    return tuple(key)


def make_rng(seed: int, *stream: object) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` components select an independent substream."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=_stream_key(stream))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *stream: object) -> int:
    """Deterministic 64-bit child seed."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=_stream_key(stream))
    return int(ss.generate_state(1, np.uint64)[0])


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return make_rng(rng)


def poisson_draw_count(lam: float, rng: np.random.Generator) -> int:
    """One Poisson(lam) variate."""
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0:
        raise ValueError(f"Poisson mean must be positive and finite, got {lam}")
    return int(rng.poisson(lam))


# -- explicit distributions -----------------------------------------------------

def _as_label_array(labels) -> np.ndarray:
    arr = np.asarray(labels, dtype=LABEL_DTYPE).reshape(-1)
    return arr


@dataclass(frozen=True, eq=False)
class ExplicitMeasure:
    """Finite nonnegative measure on int64 labels; zero-mass labels are not stored."""

    labels: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=LABEL_DTYPE).reshape(-1)
        masses = np.array(self.masses, dtype=np.float64).reshape(-1)
        if labels.shape != masses.shape:
            raise ValueError("labels and masses differ in length")
        if masses.size and not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite")
        if np.any(masses <= 0):
            raise ValueError("masses must be strictly positive (omit zero-mass labels)")
        if np.unique(labels).size != labels.size:
            raise ValueError("duplicate labels")
        labels.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_mapping(cls, masses: Mapping[int, float]):
        items = [(int(k), float(v)) for k, v in masses.items() if v != 0]
        labels = np.array([k for k, _ in items], dtype=LABEL_DTYPE)
        values = np.array([v for _, v in items], dtype=np.float64)
        return cls(labels, values)

    @property
    def support_size(self) -> int:
        return int(self.labels.size)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses.tolist())

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.labels.tolist(), self.masses.tolist()))

    def normalized(self) -> "ExplicitDistribution":
        total = self.total_mass
        if total <= 0:
            raise ValueError("cannot normalize an empty measure")
        return ExplicitDistribution(self.labels, self.masses / total)

    def __len__(self):
        return self.support_size


@dataclass(frozen=True, eq=False)
class ExplicitDistribution(ExplicitMeasure):
    """Probability mass function: positive masses summing to 1 within 1e-12."""

    def __post_init__(self):
        super().__post_init__()
        if self.labels.size == 0:
            raise ValueError("empty distribution")
        total = math.fsum(self.masses.tolist())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {total!r}, not 1")

    @classmethod
    def from_weights(cls, weights, labels=None):
        """Normalize nonnegative weights; zero weights are dropped."""
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if labels is None:
            labels = np.arange(w.size, dtype=LABEL_DTYPE)
        labels = _as_label_array(labels)
        keep = w > 0
        w, labels = w[keep], labels[keep]
        return cls(labels, w / math.fsum(w.tolist()))

    def normalized(self) -> "ExplicitDistribution":
        return self

    @cached_property
    def _sampling_masses(self) -> np.ndarray:
        # exact renormalization so multinomial's sum check never trips
        p = self.masses / self.masses.sum()
        return p

    @cached_property
    def alias_tables(self) -> tuple[np.ndarray, np.ndarray]:
        return kernels.build_alias(self._sampling_masses)

    def mass_of(self, labels: Iterable[int]) -> float:
        want = np.asarray(list(labels), dtype=LABEL_DTYPE)
        return math.fsum(self.masses[np.isin(self.labels, want)].tolist())

    def conditional(self, allowed: Iterable[int]) -> "ExplicitDistribution":
        """The conditional distribution (p|S)."""
        want = np.asarray(list(allowed), dtype=LABEL_DTYPE)
        keep = np.isin(self.labels, want)
        if not keep.any():
            raise ValueError("conditioning set has zero mass")
        return ExplicitDistribution.from_weights(self.masses[keep], self.labels[keep])


# -- fingerprints ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Fingerprint:
    """Occurrence counts per distinct label of a sample."""

    labels: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        labels = _as_label_array(self.labels)
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if labels.shape != counts.shape:
            raise ValueError("labels and counts differ in length")
        if np.any(counts < 1):
            raise ValueError("fingerprint counts must be >= 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def empty(cls) -> "Fingerprint":
        return cls(np.empty(0, LABEL_DTYPE), np.empty(0, np.int64))

    @classmethod
    def of(cls, sample) -> "Fingerprint":
        arr = _as_label_array(sample)
        if arr.size == 0:
            return cls.empty()
        labels, counts = np.unique(arr, return_counts=True)
        return cls(labels, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def distinct(self) -> int:
        return int(self.labels.size)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.labels.tolist(), self.counts.tolist()))

    def merge(self, other: "Fingerprint") -> "Fingerprint":
        if other.distinct == 0:
            return self
        if self.distinct == 0:
            return other
        labels = np.concatenate([self.labels, other.labels])
        counts = np.concatenate([self.counts, other.counts])
        uniq, inv = np.unique(labels, return_inverse=True)
        return Fingerprint(uniq, np.bincount(inv, weights=counts).astype(np.int64))

    def __len__(self):
        return self.distinct


# -- sample sources -------------------------------------------------------------

_EMPTY_LABELS = np.empty(0, LABEL_DTYPE)
_EMPTY_COSTS = np.empty(0, np.int64)


class SampleSource:
    """Sample access to an unknown distribution.

    Subclasses implement :meth:`_fresh` (and optionally :meth:`_fresh_fingerprint`).
    Each draw carries a cost: the number of draws it consumed from the root
    distribution (1 for direct sources, more for rejection samplers), and
    ``draws_made`` is the total cost of everything handed out and not unread.
    """

    def __init__(self):
        self._draws = 0
        self._pending_labels = _EMPTY_LABELS
        self._pending_costs = _EMPTY_COSTS

    @property
    def draws_made(self) -> int:
        return self._draws

    # subclass hooks
    def _fresh(self, k: int) -> tuple[np.ndarray, np.ndarray | None]:
        raise NotImplementedError

    def _fresh_fingerprint(self, k: int) -> tuple[Fingerprint, int]:
        labels, costs = self._fresh(k)
        cost = k if costs is None else int(costs.sum())
        return Fingerprint.of(labels), cost

    # public API
    def take(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``k`` labels in order, returning them with their per-draw costs."""
        k = int(k)
        if k < 0:
            raise ValueError("k must be nonnegative")
        npend = min(k, self._pending_labels.size)
        labels = self._pending_labels[:npend]
        costs = self._pending_costs[:npend]
        self._pending_labels = self._pending_labels[npend:]
        self._pending_costs = self._pending_costs[npend:]
        if k > npend:
            fresh, fresh_costs = self._fresh(k - npend)
            if fresh_costs is None:
                fresh_costs = np.ones(fresh.size, np.int64)
            labels = np.concatenate([labels, fresh]) if npend else fresh
            costs = np.concatenate([costs, fresh_costs]) if npend else fresh_costs
        self._draws += int(costs.sum())
        return labels, costs

    def unread(self, labels: np.ndarray, costs: np.ndarray) -> None:
        """Return draws (most recent last) so the next draws yield them again."""
        labels = _as_label_array(labels)
        costs = np.asarray(costs, np.int64)
        if labels.size == 0:
            return
        self._pending_labels = np.concatenate([labels, self._pending_labels])
        self._pending_costs = np.concatenate([costs, self._pending_costs])
        self._draws -= int(costs.sum())

    def draw(self) -> int:
        return int(self.take(1)[0][0])

    def draw_many(self, k: int) -> np.ndarray:
        return self.take(k)[0]

    def draw_fingerprint(self, k: int) -> Fingerprint:
        """Fingerprint of the next ``k`` draws."""
        k = int(k)
        if k < 0:
            raise ValueError("k must be nonnegative")
        npend = min(k, self._pending_labels.size)
        fp = Fingerprint.empty()
        if npend:
            labels, _ = self.take(npend)
            fp = Fingerprint.of(labels)
        if k > npend:
            fresh, cost = self._fresh_fingerprint(k - npend)
            self._draws += cost
            fp = fp.merge(fresh)
        return fp


class ExplicitSource(SampleSource):
    """I.i.d. draws from an :class:`ExplicitDistribution` via alias tables."""

    def __init__(self, dist: ExplicitDistribution, seed: int):
        super().__init__()
        if dist.support_size == 0:
            raise ValueError("empty distribution")
        self.dist = dist
        self.seed = int(seed)
        self._rng = make_rng(seed, "explicit-source")
        self._prob, self._alias = dist.alias_tables

    def _fresh(self, k):
        u = self._rng.random(k)
        idx = kernels.alias_lookup(self._prob, self._alias, u)
        return self.dist.labels[idx], None

    def _fresh_fingerprint(self, k):
        size = self.dist.support_size
        if k <= size:
            idx = kernels.alias_lookup(self._prob, self._alias, self._rng.random(k))
            counts = np.bincount(idx, minlength=size)
        else:
            # same law as k alias draws; O(support) instead of O(k)
            counts = self._rng.multinomial(k, self.dist._sampling_masses)
        nz = np.flatnonzero(counts)
        return Fingerprint(self.dist.labels[nz], counts[nz]), k


class ConditionalSource(SampleSource):
    """Rejection sampler for (p|S) on top of another source."""

    def __init__(self, src: SampleSource, allowed, cap_per_yield: int = DEFAULT_REJECTION_CAP):
        super().__init__()
        allowed = np.unique(_as_label_array(list(allowed) if not isinstance(allowed, np.ndarray) else allowed))
        if allowed.size == 0:
            raise ValueError("allowed set must be nonempty")
        self.src = src
        self.allowed = allowed
        self.cap_per_yield = int(cap_per_yield)
        self._rate = 1.0

    def _member(self, labels):
        return np.isin(labels, self.allowed, assume_unique=False)

    def _fresh(self, k):
        out, out_costs = [], []
        need = k
        carry = 0  # underlying cost accumulated since the last accepted draw
        spent = 0
        budget = self.cap_per_yield * k
        while need > 0:
            batch = int(min(max(need, math.ceil(1.2 * need / max(self._rate, 1e-9))), 1 << 24))
            batch = max(1, min(batch, budget - spent))
            labels, costs = self.src.take(batch)
            hits = np.flatnonzero(self._member(labels))
            if hits.size >= need:
                cut = int(hits[need - 1]) + 1
                self.src.unread(labels[cut:], costs[cut:])
                labels, costs, hits = labels[:cut], costs[:cut], hits[:need]
            spent += int(costs.sum())
            self._rate = max(hits.size / labels.size, 1e-9) if labels.size else self._rate
            if hits.size:
                cum = np.cumsum(costs)
                hit_cum = cum[hits]
                yc = np.diff(np.r_[0, hit_cum])
                yc[0] += carry
                carry = int(cum[-1] - hit_cum[-1])
                out.append(labels[hits])
                out_costs.append(yc)
                need -= hits.size
            else:
                carry += int(costs.sum())
            if need > 0 and spent >= budget:
                raise BudgetExceededError(
                    f"rejection sampling used {spent} draws without {k} members "
                    f"(cap {self.cap_per_yield} per yield); conditioning set has ~zero mass")
        return np.concatenate(out), np.concatenate(out_costs)

    def _fresh_fingerprint(self, k):
        fp = Fingerprint.empty()
        cost = 0
        need = k
        rounds = 0
        # underlying fingerprints of exactly `need` draws never overshoot the k-th member
        while need >= 64 and rounds < 64:
            if cost > self.cap_per_yield * k:
                raise BudgetExceededError("rejection sampling cap exceeded")
            before = self.src.draws_made
            batch = self.src.draw_fingerprint(need)
            cost += self.src.draws_made - before
            keep = self._member(batch.labels)
            if keep.any():
                part = Fingerprint(batch.labels[keep], batch.counts[keep])
                fp = fp.merge(part)
                need -= part.total
            rounds += 1
        if need:
            labels, costs = self._fresh(need)
            cost += int(costs.sum())
            fp = fp.merge(Fingerprint.of(labels))
        return fp, cost


def make_source(dist: ExplicitDistribution, seed: int) -> ExplicitSource:
    return ExplicitSource(dist, seed)


def conditional_source(src: SampleSource, allowed, cap_per_yield: int = DEFAULT_REJECTION_CAP) -> ConditionalSource:
    return ConditionalSource(src, allowed, cap_per_yield)


# -- tester configuration and verdicts ------------------------------------------

class Decision(str, enum.Enum):
    YES = "YES"
    NO = "NO"


class Branch(str, enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    CASE_III = "CaseIII"
    EARLY_REJECT = "EarlyReject"


@dataclass(frozen=True)
class TesterConfig:
    """Every constant the tester needs, pinned.

    ``c_m2`` is the multiplier of the known-support tester's sample count
    (ceil(c_m2 * sqrt(|S|) / eps^2)).
    """

    c_m: float = 2e8
    c4_a: float = 4.0
    c4_b: float = 4.0
    c5_a: float = 4.0
    c5_b: float = 4.0
    c_m1_ii: float = 4.0
    c_m1_iii: float = 6.0
    c_m2: float = 8.0
    heavy_hitter_mult: float = 6.0
    amplification_rounds: int = 9
    rng_seed: int = 0
    c_stage2: float = 64.0
    c_tt: float = 10.0
    min_support_frac: float = 0.25
    p_of_s_samples: int = 200
    p_of_s_threshold: float = 0.4
    rejection_cap: int = DEFAULT_REJECTION_CAP
    stage1_cap: int = 10**8

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name == "rng_seed":
                continue
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{f.name} must be a positive number, got {value!r}")
        if int(self.amplification_rounds) != self.amplification_rounds or self.amplification_rounds % 2 == 0:
            raise ConfigError("amplification_rounds must be an odd positive integer")
        if not 0 < self.p_of_s_threshold < 1 or not 0 < self.min_support_frac <= 1:
            raise ConfigError("fractions must lie in (0, 1]")

    def replace(self, **changes) -> "TesterConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "TesterConfig":
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        parsed = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ConfigError(f"unknown config key {key!r}")
            parsed[key] = int(float(raw)) if kinds[key] == "int" else float(raw)
        return cls(**parsed)

    @classmethod
    def from_file(cls, path: str | Path) -> "TesterConfig":
        """Read ``key=value`` lines; ``#`` starts a comment."""
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
        return cls.from_mapping(values)


TesterConfig.__test__ = False  # name starts with "Test"; keep pytest from collecting it


@dataclass
class Verdict:
    """Outcome of one tester run plus its telemetry.

    ``branch`` is the regime that produced the answer, or ``EARLY_REJECT`` when a
    sanity check said NO before the final test; ``case`` always names the regime.
    """

    decision: Decision
    branch: Branch
    samples_used: int
    trace: list[tuple[str, float]] = field(default_factory=list)
    case: Branch | None = None
    phase_draws: dict[str, int] = field(default_factory=dict)
    rejected_at: str | None = None
    rounds: list["Verdict"] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.YES

    def to_dict(self) -> dict:
        out = {
            "decision": self.decision.value,
            "branch": self.branch.value,
            "case": self.case.value if self.case else None,
            "samples_used": self.samples_used,
            "rejected_at": self.rejected_at,
            "phase_draws": dict(self.phase_draws),
            "trace": [[k, v] for k, v in self.trace],
        }
        if self.rounds:
            out["rounds"] = [r.to_dict() for r in self.rounds]
        return out
