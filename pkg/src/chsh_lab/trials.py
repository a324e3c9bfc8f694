"""Trial data model and trial-generating strategies.

A trial is one run of a two-detector correlation experiment: each detector
gets a binary setting (detector 1: "a" or "a'"; detector 2: "b" or "b'"),
drawn by fair independent coins, and reports an outcome in {-1, +1}. A
strategy decides the outcomes:

* ``DeterministicStrategy`` — fixed response per setting (16 possible).
* ``FiniteLocalModel`` — mixture over finitely many hidden values, each
  responding through a product of per-detector conditionals (the locality
  factorization holds per hidden value by construction).
* ``MemoryPolicy`` — adversary that sets the per-trial success probability
  of the game statistic C as a function of the C-history.
* ``MemoryLocalModel`` — a finite local model chosen per C-history.
* ``QuantumSampler`` — i.i.d. sampler matching the four singlet-state
  correlators (|E| = sqrt(2)/2 with one sign flipped).

``simulate`` turns any strategy into a reproducible trial log: identical
(strategy, n, seed) gives a bit-identical log on every backend.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from itertools import product
from typing import Union

import numpy as np

from ._backend import kernels

SETTINGS_1 = ("a", "a'")
SETTINGS_2 = ("b", "b'")
OUTCOMES = (-1, 1)

SQRT2 = math.sqrt(2.0)
#: Correlators maximizing the CHSH combination, order (ab, a'b, ab', a'b').
QUANTUM_CORRELATIONS = (SQRT2 / 2, -SQRT2 / 2, SQRT2 / 2, SQRT2 / 2)
#: Per-trial success probability P(C=+1) implied by QUANTUM_CORRELATIONS.
QUANTUM_SUCCESS_PROBABILITY = (2.0 + SQRT2) / 4.0
#: Largest P(C=+1) attainable by any local strategy, memory or not.
LOCAL_SUCCESS_CAP = 0.75

#: Where count-based policies switch from a materialized probability table
#: (kernel path) to a per-trial Python loop. Both paths give identical logs.
_COUNT_TABLE_LIMIT = 4096

_MEMORY_TABLE_MAX_HORIZON = 20


@dataclass(frozen=True, slots=True)
class TrialRecord:
    """One trial: 1-based index, both settings, both outcomes."""

    index: int
    a: str
    b: str
    d1: int
    d2: int

    def product(self) -> int:
        return self.d1 * self.d2


def validate_record(index: int, a: str, b: str, d1: int, d2: int) -> None:
    """Raise ValueError naming the first invalid field."""
    if not isinstance(index, int) or isinstance(index, bool) or index < 1:
        raise ValueError(f"field 'i': trial index must be a positive integer, got {index!r}")
    if a not in SETTINGS_1:
        raise ValueError(f"field 'a': invalid setting label {a!r} (expected 'a' or \"a'\")")
    if b not in SETTINGS_2:
        raise ValueError(f"field 'b': invalid setting label {b!r} (expected 'b' or \"b'\")")
    if d1 not in OUTCOMES or isinstance(d1, bool):
        raise ValueError(f"field 'd1': outcome must be -1 or 1, got {d1!r}")
    if d2 not in OUTCOMES or isinstance(d2, bool):
        raise ValueError(f"field 'd2': outcome must be -1 or 1, got {d2!r}")


@dataclass(frozen=True, slots=True)
class DeterministicStrategy:
    """Fixed outcome per setting: r1_* for detector 1, r2_* for detector 2."""

    r1_a: int
    r1_a_prime: int
    r2_b: int
    r2_b_prime: int

    def __post_init__(self):
        for name in ("r1_a", "r1_a_prime", "r2_b", "r2_b_prime"):
            if getattr(self, name) not in OUTCOMES:
                raise ValueError(f"{name} must be -1 or 1")

    def response1(self, setting: str) -> int:
        return self.r1_a if setting == "a" else self.r1_a_prime

    def response2(self, setting: str) -> int:
        return self.r2_b if setting == "b" else self.r2_b_prime

    @property
    def k_chsh(self) -> int:
        """E_ab - E_a'b + E_ab' + E_a'b' for this responder (always +-2)."""
        return (self.r1_a * self.r2_b
                - self.r1_a_prime * self.r2_b
                + self.r1_a * self.r2_b_prime
                + self.r1_a_prime * self.r2_b_prime)

    @property
    def success_probability(self) -> float:
        """P(C=+1) under fair settings: (1 + K/4) / 2."""
        return (1.0 + self.k_chsh / 4.0) / 2.0


def enumerate_deterministic_strategies() -> list[DeterministicStrategy]:
    """All 16 deterministic responders, all-(+1) first.

    Iteration order: (r1_a, r1_a_prime, r2_b, r2_b_prime) over (+1, -1)
    in most-significant-first order.
    """
    return [DeterministicStrategy(*resp) for resp in product((1, -1), repeat=4)]


@dataclass(frozen=True, slots=True)
class LocalComponent:
    """One hidden value: its weight and per-detector +1 probabilities.

    ``p1`` = (P(d1=+1 | setting a), P(d1=+1 | setting a')), same for ``p2``
    with b / b'. The joint conditional is the product p1 * p2, which is the
    locality factorization.
    """

    weight: float
    p1: tuple[float, float]
    p2: tuple[float, float]

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("component weight must be >= 0")
        for p in (*self.p1, *self.p2):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"conditional probability {p} outside [0, 1]")

    def correlator(self, a_code: int, b_code: int) -> float:
        """E(d1*d2 | this value, settings) = (2p1-1)(2p2-1)."""
        return (2.0 * self.p1[a_code] - 1.0) * (2.0 * self.p2[b_code] - 1.0)

    @property
    def k_chsh(self) -> float:
        return (self.correlator(0, 0) - self.correlator(1, 0)
                + self.correlator(0, 1) + self.correlator(1, 1))

    @property
    def success_probability(self) -> float:
        """P(C=+1 | this value) under fair settings."""
        total = 0.0
        for a_code, b_code in ((0, 0), (0, 1), (1, 1)):
            total += (1.0 + self.correlator(a_code, b_code)) / 2.0
        total += (1.0 - self.correlator(1, 0)) / 2.0
        return total / 4.0


class FiniteLocalModel:
    """Mixture of LocalComponents; weights must sum to 1 within 1e-12."""

    __slots__ = ("components",)

    def __init__(self, components):
        components = tuple(
            c if isinstance(c, LocalComponent) else LocalComponent(*c)
            for c in components
        )
        if not components:
            raise ValueError("finite local model needs at least one component")
        total = math.fsum(c.weight for c in components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {total!r}, not 1")
        self.components = components

    @classmethod
    def from_deterministic(cls, strategy: DeterministicStrategy) -> "FiniteLocalModel":
        to_p = {1: 1.0, -1: 0.0}
        return cls([LocalComponent(
            1.0,
            (to_p[strategy.r1_a], to_p[strategy.r1_a_prime]),
            (to_p[strategy.r2_b], to_p[strategy.r2_b_prime]),
        )])

    def correlator(self, setting1: str, setting2: str) -> float:
        a_code = SETTINGS_1.index(setting1)
        b_code = SETTINGS_2.index(setting2)
        return math.fsum(c.weight * c.correlator(a_code, b_code) for c in self.components)

    @property
    def k_chsh(self) -> float:
        """Convex combination of the per-value CHSH values."""
        return math.fsum(c.weight * c.k_chsh for c in self.components)

    @property
    def success_probability(self) -> float:
        """P(C=+1) under fair settings, computed from the conditionals."""
        return math.fsum(c.weight * c.success_probability for c in self.components)

    def _kernel_args(self):
        weights = np.array([c.weight for c in self.components], dtype=np.float64)
        cumw = np.cumsum(weights)
        p1 = np.array([c.p1 for c in self.components], dtype=np.float64)
        p2 = np.array([c.p2 for c in self.components], dtype=np.float64)
        return cumw, p1, p2


def history_key(history: tuple[int, ...]) -> str:
    """C-history tuple (+1/-1 values) as a +/- string; "" for no history."""
    return "".join("+" if c == 1 else "-" for c in history)


def history_from_key(key: str) -> tuple[int, ...]:
    if any(ch not in "+-" for ch in key):
        raise ValueError(f"invalid history key {key!r} (use '+' and '-')")
    return tuple(1 if ch == "+" else -1 for ch in key)


class MemoryPolicy:
    """Success-probability schedule P(C=+1 | C-history) for an adversary.

    The conditional may depend on the entire C-history; settings and the
    outcome split are then filled in by the simulator (d1 uniform, d2
    matching the required product). Probabilities live in [0, 1] so that
    inadmissible fixtures (conditionals above the local cap of 3/4) can be
    constructed and handed to the verifier, which reports cap violations.

    Kinds: "constant", "count" (function of trial index and success count),
    "table" (explicit history map, horizon <= 20), "callable".
    """

    __slots__ = ("kind", "horizon", "_p", "_fn", "_table")

    def __init__(self, kind, horizon, p=None, fn=None, table=None):
        self.kind = kind
        self.horizon = horizon
        self._p = p
        self._fn = fn
        self._table = table

    @classmethod
    def constant(cls, p: float) -> "MemoryPolicy":
        _check_prob(p)
        return cls("constant", None, p=p)

    @classmethod
    def from_count_fn(cls, fn: Callable[[int, int], float],
                      horizon: int | None = None) -> "MemoryPolicy":
        """fn(i, k) = success probability at 0-based trial i after k successes."""
        return cls("count", horizon, fn=fn)

    @classmethod
    def from_callable(cls, fn: Callable[[tuple[int, ...]], float],
                      horizon: int | None = None) -> "MemoryPolicy":
        return cls("callable", horizon, fn=fn)

    @classmethod
    def from_table(cls, table: Mapping[str, float],
                   horizon: int | None = None) -> "MemoryPolicy":
        """Explicit map from history keys ("", "+", "-", "++", ...) to probabilities.

        The table must cover every history of length < horizon. If horizon
        is omitted it is inferred as (longest key length) + 1.
        """
        clean: dict[str, float] = {}
        for key, p in table.items():
            history_from_key(key)  # validates characters
            _check_prob(p)
            clean[key] = float(p)
        if horizon is None:
            horizon = max((len(k) for k in clean), default=0) + 1
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if horizon > _MEMORY_TABLE_MAX_HORIZON:
            raise ValueError(
                f"table policies support horizon <= {_MEMORY_TABLE_MAX_HORIZON}")
        for length in range(horizon):
            have = sum(1 for k in clean if len(k) == length)
            if have != (1 << length):
                raise ValueError(
                    f"table covers {have} of {1 << length} histories of length {length}")
        return cls("table", horizon, table=clean)

    def prob_success(self, history: tuple[int, ...]) -> float:
        """P(C=+1 | history). history holds the previous C values in order."""
        if self.horizon is not None and len(history) >= self.horizon:
            raise ValueError(f"history of length {len(history)} beyond "
                             f"horizon {self.horizon}")
        if self.kind == "constant":
            return self._p
        if self.kind == "count":
            p = float(self._fn(len(history), sum(1 for c in history if c == 1)))
        elif self.kind == "table":
            return self._table[history_key(history)]
        else:
            p = float(self._fn(history))
        _check_prob(p)
        return p

    def heap_table(self, n: int) -> np.ndarray:
        """Probabilities for all histories of length < n, heap-ordered.

        Entry for the length-L history with success bits ``bits`` (most
        recent trial in the least significant bit) sits at (1<<L)-1+bits.
        """
        if n > _MEMORY_TABLE_MAX_HORIZON:
            raise ValueError(f"history table limited to n <= {_MEMORY_TABLE_MAX_HORIZON}")
        if self.horizon is not None and n > self.horizon:
            raise ValueError(f"n={n} beyond policy horizon {self.horizon}")
        out = np.empty((1 << n) - 1, dtype=np.float64)
        if self.kind == "constant":
            out.fill(self._p)
            return out
        if self.kind == "count":
            for level in range(n):
                base = (1 << level) - 1
                # probability depends only on popcount at this level
                by_count = [float(self._fn(level, k)) for k in range(level + 1)]
                for p in by_count:
                    _check_prob(p)
                for bits in range(1 << level):
                    out[base + bits] = by_count[bits.bit_count()]
            return out
        for level in range(n):
            base = (1 << level) - 1
            for bits in range(1 << level):
                history = _bits_to_history(bits, level)
                out[base + bits] = self.prob_success(history)
        return out

    def count_table(self, n: int) -> np.ndarray:
        """(n, n+1) array: entry [i, k] = success probability, count kinds only."""
        if self.kind == "constant":
            return np.full((n, n + 1), self._p, dtype=np.float64)
        if self.kind != "count":
            raise ValueError(f"count_table unavailable for kind {self.kind!r}")
        out = np.zeros((n, n + 1), dtype=np.float64)
        for i in range(n):
            for k in range(i + 1):
                p = float(self._fn(i, k))
                _check_prob(p)
                out[i, k] = p
        return out

    @property
    def count_based(self) -> bool:
        return self.kind in ("constant", "count")

    def cap_violations(self, n: int, cap: float = LOCAL_SUCCESS_CAP,
                       tol: float = 1e-12, max_report: int = 10):
        """Histories of length < n whose conditional exceeds cap + tol.

        Returns (count, examples) where examples is a capped list of
        (history key, probability) pairs.
        """
        count = 0
        examples: list[tuple[str, float]] = []
        if self.kind == "constant":
            if self._p > cap + tol:
                return 1, [("any", self._p)]
            return 0, []
        if self.kind == "count":
            for i in range(n):
                for k in range(i + 1):
                    p = float(self._fn(i, k))
                    if p > cap + tol:
                        count += 1
                        if len(examples) < max_report:
                            examples.append((f"trial {i}, {k} successes", p))
            return count, examples
        if n > _MEMORY_TABLE_MAX_HORIZON:
            raise ValueError(f"cap scan limited to n <= {_MEMORY_TABLE_MAX_HORIZON}")
        limit = n if self.horizon is None else min(n, self.horizon)
        for level in range(limit):
            for bits in range(1 << level):
                history = _bits_to_history(bits, level)
                p = self.prob_success(history)
                if p > cap + tol:
                    count += 1
                    if len(examples) < max_report:
                        examples.append((history_key(history), p))
        return count, examples


def _bits_to_history(bits: int, length: int) -> tuple[int, ...]:
    # bit (length-1-t) holds trial t's success; most recent trial is bit 0
    return tuple(1 if (bits >> (length - 1 - t)) & 1 else -1
                 for t in range(length))


class MemoryLocalModel:
    """A finite local model selected per C-history (memory-dependent LHVT).

    ``model_for(history)`` returns the FiniteLocalModel governing the next
    trial after the given C-history. Stays local on every trial; only the
    mixture may react to the past.
    """

    __slots__ = ("model_for", "horizon")

    def __init__(self, model_for: Callable[[tuple[int, ...]], FiniteLocalModel],
                 horizon: int | None = None):
        self.model_for = model_for
        self.horizon = horizon

    @classmethod
    def from_table(cls, table: Mapping[str, FiniteLocalModel],
                   horizon: int | None = None) -> "MemoryLocalModel":
        clean = {key: model for key, model in table.items()}
        if horizon is None:
            horizon = max((len(k) for k in clean), default=0) + 1
        def lookup(history: tuple[int, ...]) -> FiniteLocalModel:
            return clean[history_key(history)]
        lookup.table = clean  # type: ignore[attr-defined]  # for reachability scans
        return cls(lookup, horizon)

    def conditional_success_probability(self, history: tuple[int, ...]) -> float:
        return self.model_for(history).success_probability


@dataclass(frozen=True)
class QuantumSampler:
    """I.i.d. sampler for given setting-pair correlators.

    ``correlations`` is ordered (E_ab, E_a'b, E_ab', E_a'b'); the default
    is the CHSH-maximizing table. ``rng_seed`` is an optional default seed
    used when ``simulate`` is called without one.
    """

    correlations: tuple[float, float, float, float] = QUANTUM_CORRELATIONS
    rng_seed: int | None = None

    def __post_init__(self):
        if len(self.correlations) != 4:
            raise ValueError("need exactly four correlators (ab, a'b, ab', a'b')")
        for e in self.correlations:
            if not -1.0 <= e <= 1.0:
                raise ValueError(f"correlator {e} outside [-1, 1]")

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple[str, str], float],
                     rng_seed: int | None = None) -> "QuantumSampler":
        corr = tuple(mapping[(s1, s2)] for s1, s2 in
                     (("a", "b"), ("a'", "b"), ("a", "b'"), ("a'", "b'")))
        return cls(corr, rng_seed)

    def correlation(self, setting1: str, setting2: str) -> float:
        a_code = SETTINGS_1.index(setting1)
        b_code = SETTINGS_2.index(setting2)
        return self.correlations[(0, 2, 1, 3)[2 * a_code + b_code]]

    @property
    def k_chsh(self) -> float:
        e_ab, e_apb, e_abp, e_apbp = self.correlations
        return e_ab - e_apb + e_abp + e_apbp

    @property
    def success_probability(self) -> float:
        """P(C=+1) under fair settings: (1 + K/4) / 2."""
        return (1.0 + self.k_chsh / 4.0) / 2.0


def quantum_conditional_draw(settings: tuple[str, str], rng: np.random.Generator,
                             sampler: QuantumSampler | None = None) -> tuple[int, int]:
    """Draw (d1, d2) for one trial at the given settings.

    d1 is uniform on +-1; d2 equals d1 with probability (1+E)/2 where E is
    the correlator for the settings, so E(d1*d2) = E with uniform marginals.
    Consumes exactly two uniforms from rng, in the order (d1, agreement).
    """
    sampler = sampler if sampler is not None else QuantumSampler()
    e = sampler.correlation(*settings)
    d1 = 1 if rng.random() < 0.5 else -1
    p_same = (1.0 + e) / 2.0
    d2 = d1 if rng.random() < p_same else -d1
    return d1, d2


Strategy = Union[DeterministicStrategy, FiniteLocalModel, MemoryPolicy,
                 MemoryLocalModel, QuantumSampler]


def simulate(strategy: Strategy, n: int, seed: int | None = None) -> list[TrialRecord]:
    """Generate n trials; settings are fair independent coins every trial.

    Reproducibility: the PCG64 stream for ``seed`` is consumed as one
    (n, columns) uniform block, row per trial, with fixed column order per
    strategy kind:

    * deterministic: (a, b)
    * quantum: (a, b, d1, agreement)
    * finite local / memory local: (a, b, hidden value, d1, d2)
    * memory policy: (a, b, d1, success)

    Identical (strategy, n, seed) therefore yields a bit-identical log,
    on both the compiled and pure-Python backends.
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"need at least one trial, got n={n!r}")
    if seed is None:
        seed = getattr(strategy, "rng_seed", None)
    if seed is None:
        raise ValueError("a seed is required (none given and strategy has no rng_seed)")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")

    rng = np.random.default_rng(seed)

    if isinstance(strategy, DeterministicStrategy):
        u = rng.random((n, 2))
        arrays = kernels.sim_deterministic(u, strategy.r1_a, strategy.r1_a_prime,
                                           strategy.r2_b, strategy.r2_b_prime)
    elif isinstance(strategy, QuantumSampler):
        u = rng.random((n, 4))
        arrays = kernels.sim_quantum(u, *strategy.correlations)
    elif isinstance(strategy, FiniteLocalModel):
        u = rng.random((n, 5))
        arrays = kernels.sim_finite_local(u, *strategy._kernel_args())
    elif isinstance(strategy, MemoryPolicy):
        if strategy.horizon is not None and strategy.horizon < n:
            raise ValueError(f"policy horizon {strategy.horizon} < n={n}")
        u = rng.random((n, 4))
        arrays = _simulate_memory(strategy, u)
    elif isinstance(strategy, MemoryLocalModel):
        if strategy.horizon is not None and strategy.horizon < n:
            raise ValueError(f"model horizon {strategy.horizon} < n={n}")
        u = rng.random((n, 5))
        arrays = _simulate_memory_local(strategy, u)
    else:
        raise TypeError(f"unknown strategy type {type(strategy).__name__}")

    a_codes, b_codes, d1, d2 = arrays
    return [
        TrialRecord(i + 1, SETTINGS_1[ac], SETTINGS_2[bc], v1, v2)
        for i, (ac, bc, v1, v2) in enumerate(
            zip(a_codes.tolist(), b_codes.tolist(), d1.tolist(), d2.tolist()))
    ]


def _simulate_memory(policy: MemoryPolicy, u: np.ndarray):
    n = u.shape[0]
    if policy.kind == "constant":
        a_codes = (u[:, 0] >= 0.5).astype(np.uint8)
        b_codes = (u[:, 1] >= 0.5).astype(np.uint8)
        d1 = np.where(u[:, 2] < 0.5, 1, -1).astype(np.int8)
        c = np.where(u[:, 3] < policy._p, 1, -1).astype(np.int8)
        flip = (a_codes == 1) & (b_codes == 0)
        prod = np.where(flip, -c, c)
        return a_codes, b_codes, d1, (prod * d1).astype(np.int8)
    if policy.kind == "table":
        return kernels.sim_memory_table(u, policy.heap_table(n))
    if policy.kind == "count" and n <= _COUNT_TABLE_LIMIT:
        return kernels.sim_memory_count(u, policy.count_table(n))
    # general sequential fallback: callable policies, or huge count policies
    a_out, b_out, d1_out, d2_out = [], [], [], []
    history: list[int] = []
    for ua, ub, ud1, uc in u.tolist():
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        p = policy.prob_success(tuple(history))
        success = 1 if uc < p else 0
        history.append(1 if success else -1)
        c = 1 if success else -1
        prod = -c if (ac == 1 and bc == 0) else c
        v1 = 1 if ud1 < 0.5 else -1
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(v1)
        d2_out.append(prod * v1)
    return (np.asarray(a_out, dtype=np.uint8), np.asarray(b_out, dtype=np.uint8),
            np.asarray(d1_out, dtype=np.int8), np.asarray(d2_out, dtype=np.int8))


def _simulate_memory_local(model: MemoryLocalModel, u: np.ndarray):
    a_out, b_out, d1_out, d2_out = [], [], [], []
    history: list[int] = []
    for ua, ub, ul, ud1, ud2 in u.tolist():
        local = model.model_for(tuple(history))
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        acc = 0.0
        lam = None
        for comp in local.components[:-1]:
            acc += comp.weight
            if ul < acc:
                lam = comp
                break
        if lam is None:
            lam = local.components[-1]
        v1 = 1 if ud1 < lam.p1[ac] else -1
        v2 = 1 if ud2 < lam.p2[bc] else -1
        prod = v1 * v2
        c = -prod if (ac == 1 and bc == 0) else prod
        history.append(c)
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(v1)
        d2_out.append(v2)
    return (np.asarray(a_out, dtype=np.uint8), np.asarray(b_out, dtype=np.uint8),
            np.asarray(d1_out, dtype=np.int8), np.asarray(d2_out, dtype=np.int8))


def strategy_to_json(strategy: Strategy) -> dict:
    """JSON document with a "kind" discriminator; inverse of strategy_from_json.

    Count-function and callable memory policies, and memory local models,
    have no portable JSON form and are rejected.
    """
    if isinstance(strategy, DeterministicStrategy):
        return {
            "kind": "deterministic",
            "r1": {"a": strategy.r1_a, "a'": strategy.r1_a_prime},
            "r2": {"b": strategy.r2_b, "b'": strategy.r2_b_prime},
        }
    if isinstance(strategy, FiniteLocalModel):
        return {
            "kind": "finite_local",
            "components": [
                {"weight": c.weight,
                 "p1": {"a": c.p1[0], "a'": c.p1[1]},
                 "p2": {"b": c.p2[0], "b'": c.p2[1]}}
                for c in strategy.components
            ],
        }
    if isinstance(strategy, MemoryPolicy):
        if strategy.kind == "constant":
            return {"kind": "memory_policy", "constant": strategy._p}
        if strategy.kind == "table":
            return {"kind": "memory_policy", "table": dict(strategy._table),
                    "horizon": strategy.horizon}
        raise ValueError(f"memory policy kind {strategy.kind!r} is not serializable")
    if isinstance(strategy, QuantumSampler):
        e_ab, e_apb, e_abp, e_apbp = strategy.correlations
        doc = {
            "kind": "quantum",
            "correlations": {"a": {"b": e_ab, "b'": e_abp},
                             "a'": {"b": e_apb, "b'": e_apbp}},
        }
        if strategy.rng_seed is not None:
            doc["rng_seed"] = strategy.rng_seed
        return doc
    raise TypeError(f"cannot serialize strategy type {type(strategy).__name__}")


def strategy_from_json(doc: Mapping) -> Strategy:
    """Parse a strategy document produced by strategy_to_json."""
    kind = doc.get("kind")
    if kind == "deterministic":
        r1, r2 = doc["r1"], doc["r2"]
        return DeterministicStrategy(int(r1["a"]), int(r1["a'"]),
                                     int(r2["b"]), int(r2["b'"]))
    if kind == "finite_local":
        return FiniteLocalModel([
            LocalComponent(float(c["weight"]),
                           (float(c["p1"]["a"]), float(c["p1"]["a'"])),
                           (float(c["p2"]["b"]), float(c["p2"]["b'"])))
            for c in doc["components"]
        ])
    if kind == "memory_policy":
        if "constant" in doc:
            return MemoryPolicy.constant(float(doc["constant"]))
        if "table" in doc:
            return MemoryPolicy.from_table(doc["table"], doc.get("horizon"))
        raise ValueError("memory_policy document needs 'constant' or 'table'")
    if kind == "quantum":
        corr = doc.get("correlations")
        if corr is None:
            return QuantumSampler(rng_seed=doc.get("rng_seed"))
        table = {
            ("a", "b"): float(corr["a"]["b"]),
            ("a'", "b"): float(corr["a'"]["b"]),
            ("a", "b'"): float(corr["a"]["b'"]),
            ("a'", "b'"): float(corr["a'"]["b'"]),
        }
        return QuantumSampler.from_mapping(table, doc.get("rng_seed"))
    raise ValueError(f"unknown strategy kind {kind!r}")


def _check_prob(p) -> None:
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
