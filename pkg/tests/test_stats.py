"""Statistics: exact tails vs independent oracles, closed-form bounds,
power, estimators, and the analysis report."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chsh_lab import (
    QUANTUM_MEAN,
    QUANTUM_SUCCESS_PROBABILITY,
    MissingSettingPairError,
    QuantumSampler,
    TailQuery,
    TrialRecord,
    analyze,
    azuma_hoeffding_bound,
    bernoulli_moments,
    binomial_upper_tail,
    c_statistic,
    chsh_pvalue,
    k_chsh_estimate,
    normal_approximations,
    observed_pvalue,
    power_beta,
    rejection_threshold,
    simulate,
)
from conftest import tail_fraction, tail_fsum

SQ2 = math.sqrt(2.0)


class TestCStatistic:
    def test_unflipped_pair(self):
        assert c_statistic(TrialRecord(1, "a", "b", 1, 1)) == 1

    def test_flipped_pair(self):
        assert c_statistic(TrialRecord(1, "a'", "b", 1, 1)) == -1

    def test_product_plus_no_flip(self):
        assert c_statistic(TrialRecord(1, "a'", "b'", -1, -1)) == 1

    def test_flip_exactly_on_a_prime_b(self):
        for a in ("a", "a'"):
            for b in ("b", "b'"):
                for d1 in (-1, 1):
                    for d2 in (-1, 1):
                        c = c_statistic(TrialRecord(1, a, b, d1, d2))
                        expected = d1 * d2 * (-1 if (a, b) == ("a'", "b") else 1)
                        assert c == expected


class TestBinomialUpperTail:
    def test_against_exact_rational_oracle(self):
        for n in (1, 2, 5, 10, 17, 30):
            for p in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
                for k in range(n + 1):
                    exact = float(tail_fraction(n, k, p))
                    got = binomial_upper_tail(TailQuery(n, k, float(p))).value
                    assert got == pytest.approx(exact, rel=1e-9)

    def test_against_fsum_oracle_quantum_p(self):
        q = QUANTUM_SUCCESS_PROBABILITY
        for n in (3, 10, 25):
            for k in range(n + 1):
                assert binomial_upper_tail(TailQuery(n, k, q)).value == pytest.approx(
                    tail_fsum(n, k, q), rel=1e-9)

    def test_known_small_values(self):
        assert binomial_upper_tail(TailQuery(2, 1, 0.75)).value == pytest.approx(15 / 16)
        assert binomial_upper_tail(TailQuery(10, 9, 0.75)).value == pytest.approx(
            float(Fraction(255879, 1048576)), rel=1e-12)

    def test_full_support(self):
        t = binomial_upper_tail(TailQuery(7, 0, 0.3))
        assert t.value == 1.0 and t.log10 == 0.0

    def test_strict(self):
        q = TailQuery(10, 8, 0.75)
        assert binomial_upper_tail(q, strict=True).value == pytest.approx(
            binomial_upper_tail(TailQuery(10, 9, 0.75)).value)
        top = TailQuery(10, 10, 0.75)
        assert binomial_upper_tail(top, strict=True).value == 0.0

    def test_degenerate_p(self):
        assert binomial_upper_tail(TailQuery(5, 3, 0.0)).value == 0.0
        assert binomial_upper_tail(TailQuery(5, 3, 1.0)).value == 1.0

    def test_extreme_tail_against_mpmath(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 60
        n, k, p = 10_000, 8536, 0.75
        exact = mpmath.betainc(k, n - k + 1, 0, p, regularized=True)
        got = binomial_upper_tail(TailQuery(n, k, p))
        assert got.value == pytest.approx(float(exact), rel=1e-9)
        assert got.log10 == pytest.approx(float(mpmath.log10(exact)), rel=1e-12)

    def test_monotone_in_k_and_p(self):
        for n in (4, 12, 23):
            for p in (0.25, 0.5, 0.75):
                tails = [binomial_upper_tail(TailQuery(n, k, p)).value
                         for k in range(n + 1)]
                assert all(a >= b for a, b in zip(tails, tails[1:]))
            for k in range(n + 1):
                by_p = [binomial_upper_tail(TailQuery(n, k, p)).value
                        for p in (0.1, 0.25, 0.5, 0.75, 0.9)]
                assert all(a <= b + 1e-15 for a, b in zip(by_p, by_p[1:]))

    @settings(max_examples=150, deadline=None)
    @given(n=st.integers(1, 60), k_frac=st.floats(0.0, 1.0),
           p=st.floats(0.01, 0.99))
    def test_matches_fsum_oracle_property(self, n, k_frac, p):
        k = round(k_frac * n)
        got = binomial_upper_tail(TailQuery(n, k, p)).value
        assert got == pytest.approx(tail_fsum(n, k, p), rel=1e-9)
        assert 0.0 <= got <= 1.0


class TestChshPvalue:
    def test_table_values_4sf(self):
        assert f"{chsh_pvalue(10, QUANTUM_MEAN).value:#.4g}" == "0.2440"
        assert f"{chsh_pvalue(100, QUANTUM_MEAN).value:#.4g}" == "0.005421"
        assert chsh_pvalue(1000, QUANTUM_MEAN).value == pytest.approx(6.34e-16, rel=5e-3)
        assert chsh_pvalue(10_000, QUANTUM_MEAN).value == pytest.approx(
            8.58e-142, rel=5e-3)

    def test_fifty_trials_suffice(self):
        assert chsh_pvalue(50, QUANTUM_MEAN).value < 0.05
        assert chsh_pvalue(49, QUANTUM_MEAN).value > 0.05  # 50 is sharp

    def test_threshold_counts(self):
        assert rejection_threshold(10, QUANTUM_MEAN) == 9
        assert rejection_threshold(100, QUANTUM_MEAN) == 86
        assert rejection_threshold(1, QUANTUM_MEAN) == 1
        # integer threshold keeps the strict inequality
        assert rejection_threshold(10, 0.6) == 9  # 10*(1.6)/2 = 8 exactly -> k=9
        assert rejection_threshold(10, 0.5) == 8  # 7.5 -> 8

    def test_single_trial(self):
        assert chsh_pvalue(1, QUANTUM_MEAN).value == pytest.approx(0.75)

    def test_z_validation(self):
        with pytest.raises(ValueError):
            chsh_pvalue(10, -1.0)
        with pytest.raises(ValueError):
            chsh_pvalue(10, 1.2)
        assert chsh_pvalue(10, 1.0).value == 0.0

    def test_monotone_in_z(self):
        values = [chsh_pvalue(100, z).value
                  for z in (0.1, 0.3, 0.5, 0.6, QUANTUM_MEAN, 0.9, 1.0)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_decade_points_decrease_and_sit_below_bound(self):
        decades = [1, 10, 100, 1000, 10_000]
        pvals = [chsh_pvalue(n, QUANTUM_MEAN).value for n in decades]
        assert all(a > b for a, b in zip(pvals, pvals[1:]))
        for n, p in zip(decades, pvals):
            assert p <= azuma_hoeffding_bound(n).value

    def test_bound_gap_two_orders_at_large_n(self):
        for n in (1000, 10_000):
            ratio = (azuma_hoeffding_bound(n).log10
                     - chsh_pvalue(n, QUANTUM_MEAN).log10)
            assert 1.0 < ratio < 3.0


class TestAzumaHoeffding:
    # closed-form oracle, written out independently
    B = (1 / (2 - SQ2)) ** ((2 - SQ2) / 4) * (3 / (2 + SQ2)) ** ((2 + SQ2) / 4)

    def test_closed_form_agreement(self):
        for n in (1, 10, 100, 1000):
            assert azuma_hoeffding_bound(n).value == pytest.approx(
                self.B ** n, rel=1e-12)

    def test_single_trial_value(self):
        # closed form evaluated once: 0.96843434727...
        assert azuma_hoeffding_bound(1).value == pytest.approx(
            0.9684343472761884, rel=1e-12)

    def test_table_values(self):
        assert f"{azuma_hoeffding_bound(10).value:#.4g}" == "0.7256"
        assert azuma_hoeffding_bound(100).value == pytest.approx(0.0405, rel=5e-3)
        assert azuma_hoeffding_bound(1000).value == pytest.approx(1.18e-14, rel=5e-3)
        assert azuma_hoeffding_bound(10_000).value == pytest.approx(5.03e-140, rel=5e-3)

    def test_log10_consistent(self):
        b = azuma_hoeffding_bound(10_000)
        assert b.log10 == pytest.approx(10_000 * math.log10(self.B), rel=1e-12)

    def test_clamped_at_or_below_null_mean(self):
        assert azuma_hoeffding_bound(100, z=0.5).value == 1.0
        assert azuma_hoeffding_bound(100, z=0.0).value == 1.0
        assert azuma_hoeffding_bound(100, z=0.6).value < 1.0


class TestPowerBeta:
    def test_threshold_below_support(self):
        assert power_beta(10, -1.0).value == 0.0

    def test_single_trial_top(self):
        assert power_beta(1, 1.0).value == pytest.approx(
            1 - QUANTUM_SUCCESS_PROBABILITY)

    def test_matches_direct_summation(self):
        q = QUANTUM_SUCCESS_PROBABILITY
        # beta(10, sqrt2/2) = P(B_{10,q} <= 8)
        expected = 1.0 - tail_fsum(10, 9, q)
        got = power_beta(10, QUANTUM_MEAN).value
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(0.44256618695662053, rel=1e-12)

    def test_beta_shrinks_with_n_below_quantum_mean(self):
        values = [power_beta(n, 0.6).value for n in (10, 100, 1000)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_tiny_beta_keeps_log_precision(self):
        b = power_beta(10_000, 0.5)
        assert b.value < 1e-100
        assert math.isfinite(b.log10)


class TestNormalApproximations:
    def test_boundary_mean(self):
        assert normal_approximations(37, 0.5).alpha == pytest.approx(0.5)

    def test_alternative_mean(self):
        assert normal_approximations(37, QUANTUM_MEAN).beta == pytest.approx(0.5)

    def test_against_scipy(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        n, z = 100, QUANTUM_MEAN
        approx = normal_approximations(n, z)
        assert approx.alpha == pytest.approx(
            float(scipy_stats.norm.sf((2 * z - 1) * math.sqrt(n) / math.sqrt(3))),
            rel=1e-10)
        assert approx.beta == pytest.approx(
            float(scipy_stats.norm.cdf((2 * z - SQ2) * math.sqrt(n) / SQ2)),
            rel=1e-10)
        assert approx.is_approximation


class TestBernoulliMoments:
    def test_boundary(self):
        assert bernoulli_moments(0.75) == (0.5, 0.75)

    def test_quantum(self):
        mean, var = bernoulli_moments(QUANTUM_SUCCESS_PROBABILITY)
        assert mean == pytest.approx(SQ2 / 2, rel=1e-15)
        assert var == pytest.approx(0.5, rel=1e-15)

    def test_symmetric(self):
        assert bernoulli_moments(0.5) == (0.0, 1.0)

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            bernoulli_moments(1.5)


def _record(i, a, b, d1, d2):
    return TrialRecord(i, a, b, d1, d2)


class TestKChshEstimate:
    def test_constant_products(self):
        trials = [
            _record(1, "a", "b", 1, 1), _record(2, "a'", "b", -1, -1),
            _record(3, "a", "b'", 1, 1), _record(4, "a'", "b'", -1, -1),
        ]
        est = k_chsh_estimate(trials)
        assert est.value == 1 - 1 + 1 + 1 == 2

    def test_crafted_maximum(self):
        trials = [
            _record(1, "a", "b", 1, 1),      # product +1
            _record(2, "a'", "b", 1, -1),    # product -1
            _record(3, "a", "b'", -1, -1),   # product +1
            _record(4, "a'", "b'", 1, 1),    # product +1
        ]
        est = k_chsh_estimate(trials)
        assert est.value == 1 - (-1) + 1 + 1 == 4
        assert est.balanced
        assert est.c_based_value == 4.0

    def test_quantum_log_near_2_sqrt2(self, quantum_log_10k):
        est = k_chsh_estimate(quantum_log_10k)
        # four correlators, each with sd ~ sqrt((1-1/2)/2500) ~ 0.014
        assert est.value == pytest.approx(2 * SQ2, abs=0.1)

    def test_missing_pair_named(self):
        trials = [_record(1, "a", "b", 1, 1), _record(2, "a", "b'", 1, 1),
                  _record(3, "a'", "b'", 1, 1)]
        with pytest.raises(MissingSettingPairError, match=r"\(a', b\)"):
            k_chsh_estimate(trials)

    def test_balanced_logs_agree_exactly(self):
        import random
        rnd = random.Random(42)
        for _ in range(25):
            m = rnd.randrange(1, 6)
            trials = []
            i = 1
            for a, b in (("a", "b"), ("a'", "b"), ("a", "b'"), ("a'", "b'")):
                for _ in range(m):
                    d1 = rnd.choice((-1, 1))
                    d2 = rnd.choice((-1, 1))
                    trials.append(_record(i, a, b, d1, d2))
                    i += 1
            est = k_chsh_estimate(trials)
            assert est.balanced
            assert est.value == est.c_based_value  # exact, not approx


class TestAnalyze:
    def _ten_trials_nine_successes(self):
        t = [
            _record(1, "a", "b", 1, 1), _record(2, "a", "b", 1, 1),
            _record(3, "a", "b", 1, 1),
            _record(4, "a", "b'", 1, 1), _record(5, "a", "b'", -1, -1),
            _record(6, "a'", "b'", 1, 1), _record(7, "a'", "b'", -1, -1),
            _record(8, "a'", "b", 1, -1), _record(9, "a'", "b", -1, 1),
            _record(10, "a", "b", 1, -1),  # the single failure
        ]
        return t

    def test_ten_trial_pvalue(self):
        report = analyze(self._ten_trials_nine_successes())
        assert report.n == 10 and report.success_count == 9
        assert f"{report.p_value:#.4g}" == "0.2440"
        assert report.c_bar == pytest.approx(0.8)

    def test_empty_log_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            analyze([])

    def test_all_failure_pvalue_is_one(self):
        trials = [
            _record(1, "a", "b", 1, -1), _record(2, "a", "b'", 1, -1),
            _record(3, "a'", "b'", -1, 1), _record(4, "a'", "b", 1, 1),
        ]
        report = analyze(trials)
        assert report.success_count == 0
        assert report.p_value == 1.0
        assert report.c_bar == -1.0

    def test_pvalue_below_bound_at_cbar(self, quantum_log_10k):
        for log in (self._ten_trials_nine_successes(), quantum_log_10k[:1000]):
            report = analyze(log)
            assert -1.0 <= report.c_bar <= 1.0
            assert report.p_value <= report.ah_bound + 1e-15

    def test_observed_semantics_match_chsh_pvalue_at_canonical_cut(self):
        # at z = sqrt2/2 the strict threshold lands between integers, so the
        # level of the test equals the p-value of the boundary observation
        assert chsh_pvalue(10, QUANTUM_MEAN).value == pytest.approx(
            observed_pvalue(10, 9).value, rel=1e-14)

    def test_calibration_on_quantum_log(self, quantum_log_10k):
        report = analyze(quantum_log_10k)
        assert report.setting_calibration.ok
        assert set(report.setting_calibration.pairs) == {
            "a,b", "a',b", "a,b'", "a',b'"}

    def test_seed_recorded(self):
        log = simulate(QuantumSampler(), 50, seed=7)
        assert analyze(log, seed=7).seed == 7

    def test_report_serializes(self, quantum_log_10k):
        import json
        from chsh_lab._jsonfmt import dumps
        report = analyze(quantum_log_10k[:100])
        doc = json.loads(dumps(report.to_dict(), indent=2))
        assert doc["n"] == 100
        assert "p_value_log10" in doc
        assert doc["display"]["p_value"] == f"{report.p_value:#.4g}"

    def test_streaming_iterable(self, quantum_log_10k):
        assert analyze(iter(quantum_log_10k)).n == len(quantum_log_10k)
