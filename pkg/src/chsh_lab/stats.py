"""Test statistics for trial logs: exact tails, bounds, power, estimates.

The per-trial score C is the outcome product d1*d2, negated exactly on the
setting pair (a', b). Local models (with or without memory) cannot push
P(C=+1) above 3/4 on any trial, so the observed success count is
stochastically dominated by Binomial(n, 3/4) and exact binomial tails give
valid p-values. The quantum correlators put every trial at
P(C=+1) = (2+sqrt(2))/4 ~ 0.8536, which fixes the power of the test.

Extreme tails (down to 1e-142 and below) are computed in log space via
log-gamma term evaluation with compensated smallest-first summation; every
tail is reported both linearly and as log10.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction

from ._jsonfmt import sig_figs
from .trials import (
    LOCAL_SUCCESS_CAP,
    QUANTUM_SUCCESS_PROBABILITY,
    SETTINGS_1,
    SETTINGS_2,
    SQRT2,
    TrialRecord,
)

#: Decision threshold at which the quantum prediction centers c_bar.
QUANTUM_MEAN = SQRT2 / 2

_LN10 = math.log(10.0)

#: Calibration diagnostics flag deviations beyond this many standard errors.
CALIBRATION_SIGMA = 5.0


class MissingSettingPairError(ValueError):
    """A required setting pair never occurs in the log."""


def c_value(a: str, b: str, d1: int, d2: int) -> int:
    """Per-trial score: d1*d2, negated exactly on the pair (a', b)."""
    prod = d1 * d2
    return -prod if (a == "a'" and b == "b") else prod


def c_statistic(trial: TrialRecord) -> int:
    return c_value(trial.a, trial.b, trial.d1, trial.d2)


@dataclass(frozen=True, slots=True)
class TailQuery:
    """Upper-tail request P(B_{n,p} >= k)."""

    n: int
    k: int
    p: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.k, int) or not 0 <= self.k <= self.n:
            raise ValueError(f"k must be an integer in [0, {self.n}], got {self.k!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p!r}")


@dataclass(frozen=True, slots=True)
class TailProbability:
    """A probability with its exact log10 companion.

    ``value`` underflows to 0.0 below ~1e-308; ``log10`` stays exact.
    """

    value: float
    log10: float

    @classmethod
    def from_log(cls, log_e: float) -> "TailProbability":
        if log_e == -math.inf:
            return cls(0.0, -math.inf)
        return cls(math.exp(log_e), log_e / _LN10)

    def __float__(self) -> float:
        return self.value


def _log_upper_tail(n: int, k: int, p: float) -> float:
    """log P(B_{n,p} >= k) via log-gamma terms, summed smallest-first."""
    if k <= 0:
        return 0.0
    if k > n:
        return -math.inf
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return 0.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    lg_n = math.lgamma(n + 1)
    terms = [
        lg_n - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * log_p + (n - j) * log_q
        for j in range(k, n + 1)
    ]
    peak = max(terms)
    total = math.fsum(sorted(math.exp(t - peak) for t in terms))
    # a probability: term-level log-gamma noise may push the sum a few ulp
    # past 1 when the tail covers nearly all mass
    return min(0.0, peak + math.log(total))


def binomial_upper_tail(query: TailQuery, strict: bool = False) -> TailProbability:
    """P(B_{n,p} >= k), or P(B_{n,p} > k) when strict.

    Relative error <= 1e-9 over the full range, including tails near
    1e-142 (log-gamma terms are accurate to ~1e-11 even at n = 10^4 and
    the summation is compensated).
    """
    k = query.k + 1 if strict else query.k
    return TailProbability.from_log(_log_upper_tail(query.n, k, query.p))


def rejection_threshold(n: int, z: float) -> int:
    """Smallest success count k with c_bar > z, i.e. with 2k - n > n*z.

    The real threshold n(z+1)/2 is generically non-integer; when it lands
    on an integer (within 1e-9) the strict inequality bumps it by one.
    """
    t = n * (z + 1.0) / 2.0
    nearest = round(t)
    if abs(t - nearest) < 1e-9:
        return int(nearest) + 1
    return math.floor(t) + 1


def chsh_pvalue(n: int, z: float) -> TailProbability:
    """Significance level of "reject when c_bar > z" against all local models.

    Equals P(B_{n,3/4} > n(z+1)/2): the memoryless boundary model attains
    the supremum over the whole null class, memory included.
    """
    _check_n(n)
    if not -1.0 < z <= 1.0:
        raise ValueError(f"z must lie in (-1, 1], got {z!r}")
    k_star = rejection_threshold(n, z)
    if k_star > n:
        return TailProbability(0.0, -math.inf)
    return binomial_upper_tail(TailQuery(n, k_star, LOCAL_SUCCESS_CAP))


def observed_pvalue(n: int, successes: int) -> TailProbability:
    """p-value of an observed success count: P(B_{n,3/4} >= successes).

    Inclusive tail ("as or more extreme than observed"); the limit of
    chsh_pvalue as the cut z rises to the observed c_bar.
    """
    _check_n(n)
    if not isinstance(successes, int) or not 0 <= successes <= n:
        raise ValueError(f"successes must be an integer in [0, {n}], got {successes!r}")
    return binomial_upper_tail(TailQuery(n, successes, LOCAL_SUCCESS_CAP)) \
        if successes > 0 else TailProbability(1.0, 0.0)


def azuma_hoeffding_bound(n: int, z: float = QUANTUM_MEAN) -> TailProbability:
    """Martingale-style closed-form bound on the p-value at cut z.

    For z = sqrt(2)/2 this is B**n with
    B = (1/(2-sqrt2))**((2-sqrt2)/4) * (3/(2+sqrt2))**((2+sqrt2)/4),
    easier to evaluate than the exact binomial tail but roughly two orders
    of magnitude looser at large n. General z uses the equivalent relative
    entropy form exp(-n*KL((1+z)/2 || 3/4)), clamped to 1 when the cut
    falls at or below the null mean.
    """
    _check_n(n)
    if not -1.0 <= z <= 1.0:
        raise ValueError(f"z must lie in [-1, 1], got {z!r}")
    q = (1.0 + z) / 2.0
    p = LOCAL_SUCCESS_CAP
    if q <= p:
        return TailProbability(1.0, 0.0)
    if q >= 1.0:
        kl = -math.log(p)
    else:
        kl = q * math.log(q / p) + (1.0 - q) * math.log((1.0 - q) / (1.0 - p))
    return TailProbability.from_log(-n * kl)


def power_beta(n: int, z: float) -> TailProbability:
    """Type-II error beta = P(c_bar <= z) under the quantum alternative.

    Equals P(B_{n,q} < n(z+1)/2) with q = (2+sqrt(2))/4; computed through
    the complementary tail so tiny beta keeps full log-space precision.
    The power of the test is 1 - beta.
    """
    _check_n(n)
    t = n * (z + 1.0) / 2.0
    nearest = round(t)
    k_below = int(nearest) if abs(t - nearest) < 1e-9 else math.floor(t) + 1
    if k_below <= 0:
        return TailProbability(0.0, -math.inf)
    if k_below > n:
        return TailProbability(1.0, 0.0)
    # P(B_{n,q} <= k_below - 1) = P(n - B >= n - k_below + 1), n - B ~ B_{n,1-q}
    q = QUANTUM_SUCCESS_PROBABILITY
    return binomial_upper_tail(TailQuery(n, n - k_below + 1, 1.0 - q))


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / SQRT2)


@dataclass(frozen=True, slots=True)
class NormalApproximations:
    """CLT-based approximations; kept separate because the exact tails are
    the quantities of record (the central limit does not hold uniformly in
    the tail for fixed z as n grows)."""

    alpha: float
    beta: float
    is_approximation: bool = True


def normal_approximations(n: int, z: float) -> NormalApproximations:
    """alpha ~ 1 - Phi((2z-1)sqrt(n)/sqrt(3)), beta ~ Phi((2z-sqrt2)sqrt(n)/sqrt2)."""
    _check_n(n)
    sqrt_n = math.sqrt(n)
    alpha = 1.0 - normal_cdf((2.0 * z - 1.0) * sqrt_n / math.sqrt(3.0))
    beta = normal_cdf((2.0 * z - SQRT2) * sqrt_n / SQRT2)
    return NormalApproximations(alpha, beta)


def bernoulli_moments(p: float) -> tuple[float, float]:
    """Mean and variance of a +-1 score with success probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p!r}")
    return 2.0 * p - 1.0, 4.0 * p * (1.0 - p)


@dataclass(frozen=True, slots=True)
class PairStats:
    count: int
    sum_products: int
    mean: float


@dataclass(frozen=True, slots=True)
class KChshEstimate:
    """Empirical CHSH combination with its per-pair breakdown.

    ``c_based_value`` is 4*(mean of C); it equals ``value`` exactly whenever
    the four setting-pair counts are balanced (both are computed through
    exact rational arithmetic before conversion to float).
    """

    value: float
    c_based_value: float
    balanced: bool
    pairs: dict[str, PairStats] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "c_based_value": self.c_based_value,
            "balanced_setting_counts": self.balanced,
            "pairs": {
                key: {"count": s.count, "sum_products": s.sum_products, "mean": s.mean}
                for key, s in self.pairs.items()
            },
        }


_PAIR_SIGNS = {("a", "b"): 1, ("a'", "b"): -1, ("a", "b'"): 1, ("a'", "b'"): 1}


def k_chsh_estimate(trials: Iterable[TrialRecord]) -> KChshEstimate:
    """Sample estimate E_ab - E_a'b + E_ab' + E_a'b' from a trial log.

    Raises MissingSettingPairError naming the first setting pair with no
    trials; all four sample correlators are needed.
    """
    counts: dict[tuple[str, str], int] = {pair: 0 for pair in _PAIR_SIGNS}
    sums: dict[tuple[str, str], int] = {pair: 0 for pair in _PAIR_SIGNS}
    n = 0
    c_total = 0
    for trial in trials:
        pair = (trial.a, trial.b)
        prod = trial.d1 * trial.d2
        counts[pair] += 1
        sums[pair] += prod
        c_total += -prod if pair == ("a'", "b") else prod
        n += 1
    return _k_chsh_from_counts(counts, sums, n, c_total)


def _k_chsh_from_counts(counts, sums, n, c_total) -> KChshEstimate:
    for pair, sign in _PAIR_SIGNS.items():
        if counts[pair] == 0:
            raise MissingSettingPairError(
                f"no trials with settings ({pair[0]}, {pair[1]})")
    value = Fraction(0)
    for pair, sign in _PAIR_SIGNS.items():
        value += sign * Fraction(sums[pair], counts[pair])
    c_based = 4 * Fraction(c_total, n)
    balanced = len({counts[pair] for pair in _PAIR_SIGNS}) == 1
    pairs = {
        f"{pair[0]},{pair[1]}": PairStats(counts[pair], sums[pair],
                                          sums[pair] / counts[pair])
        for pair in _PAIR_SIGNS
    }
    return KChshEstimate(float(value), float(c_based), balanced, pairs)


@dataclass(frozen=True, slots=True)
class CalibrationCheck:
    observed_frequency: float
    expected: float
    sigma: float
    deviation_sigmas: float
    within_tolerance: bool


@dataclass(frozen=True, slots=True)
class SettingCalibration:
    """Fair-coin diagnostics: marginal setting frequencies against 1/2 and
    pair frequencies against 1/4, flagged beyond CALIBRATION_SIGMA."""

    marginals: dict[str, CalibrationCheck]
    pairs: dict[str, CalibrationCheck]
    ok: bool

    def to_dict(self) -> dict:
        def entry(c: CalibrationCheck) -> dict:
            return {
                "observed_frequency": c.observed_frequency,
                "expected": c.expected,
                "sigma": c.sigma,
                "deviation_sigmas": c.deviation_sigmas,
                "within_tolerance": c.within_tolerance,
            }
        return {
            "marginals": {k: entry(v) for k, v in self.marginals.items()},
            "pairs": {k: entry(v) for k, v in self.pairs.items()},
            "ok": self.ok,
        }


def _calibration(counts: dict, count_a: int, count_b: int, n: int) -> SettingCalibration:
    def check(observed: int, expected: float) -> CalibrationCheck:
        freq = observed / n
        sigma = math.sqrt(expected * (1.0 - expected) / n)
        dev = abs(freq - expected) / sigma if sigma > 0 else 0.0
        return CalibrationCheck(freq, expected, sigma, dev, dev <= CALIBRATION_SIGMA)

    marginals = {
        "A=a": check(count_a, 0.5),
        "B=b": check(count_b, 0.5),
    }
    pairs = {
        f"{pair[0]},{pair[1]}": check(counts[pair], 0.25) for pair in _PAIR_SIGNS
    }
    ok = all(c.within_tolerance for c in marginals.values()) and \
        all(c.within_tolerance for c in pairs.values())
    return SettingCalibration(marginals, pairs, ok)


@dataclass(frozen=True, slots=True)
class AnalysisReport:
    """Everything the test needs from one trial log.

    The p-value is the inclusive tail at the observed success count; the
    closed-form bound and the normal alpha are evaluated at z = c_bar, so
    p_value <= ah_bound always holds.
    """

    n: int
    success_count: int
    c_bar: float
    p_value: float
    p_value_log10: float
    ah_bound: float
    ah_bound_log10: float
    normal_alpha: float
    k_chsh: KChshEstimate
    setting_calibration: SettingCalibration
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "success_count": self.success_count,
            "c_bar": self.c_bar,
            "p_value": self.p_value,
            "p_value_log10": self.p_value_log10,
            "ah_bound": self.ah_bound,
            "ah_bound_log10": self.ah_bound_log10,
            "normal_alpha": self.normal_alpha,
            "normal_is_approximation": True,
            "k_chsh": self.k_chsh.to_dict(),
            "setting_calibration": self.setting_calibration.to_dict(),
            "seed": self.seed,
            "display": {
                "c_bar": sig_figs(self.c_bar),
                "p_value": sig_figs(self.p_value),
                "p_value_log10": sig_figs(self.p_value_log10),
                "ah_bound": sig_figs(self.ah_bound),
                "normal_alpha": sig_figs(self.normal_alpha),
                "k_chsh": sig_figs(self.k_chsh.value),
            },
        }


def analyze(trials: Iterable[TrialRecord], seed: int | None = None) -> AnalysisReport:
    """Single-pass analysis of a trial log (works on any iterable/stream)."""
    counts = {pair: 0 for pair in _PAIR_SIGNS}
    sums = {pair: 0 for pair in _PAIR_SIGNS}
    n = 0
    successes = 0
    c_total = 0
    count_a = 0
    count_b = 0
    for trial in trials:
        pair = (trial.a, trial.b)
        prod = trial.d1 * trial.d2
        c = -prod if pair == ("a'", "b") else prod
        counts[pair] += 1
        sums[pair] += prod
        c_total += c
        successes += c == 1
        count_a += trial.a == "a"
        count_b += trial.b == "b"
        n += 1
    if n == 0:
        raise ValueError("empty trial log")
    c_bar = (2 * successes - n) / n
    p_val = observed_pvalue(n, successes)
    ah = azuma_hoeffding_bound(n, z=c_bar)
    normal = normal_approximations(n, c_bar)
    estimate = _k_chsh_from_counts(counts, sums, n, c_total)
    calibration = _calibration(counts, count_a, count_b, n)
    return AnalysisReport(
        n=n,
        success_count=successes,
        c_bar=c_bar,
        p_value=p_val.value,
        p_value_log10=p_val.log10,
        ah_bound=ah.value,
        ah_bound_log10=ah.log10,
        normal_alpha=normal.alpha,
        k_chsh=estimate,
        setting_calibration=calibration,
        seed=seed,
    )


def _check_n(n: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
