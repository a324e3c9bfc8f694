"""Verifier: CHSH bound sweeps, exact count DP, dominance, conditional cap,
settings independence."""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from chsh_lab import (
    LOCAL_SUCCESS_CAP,
    QUANTUM_SUCCESS_PROBABILITY,
    DeterministicStrategy,
    FiniteLocalModel,
    LocalComponent,
    MemoryLocalModel,
    MemoryPolicy,
    SettingsDistribution,
    conditional_bound_check,
    exact_count_distribution,
    lambda_dependent_settings_fixture,
    lambda_independence_check,
    quantum_constant_policy,
    random_local_model,
    random_memory_local_model,
    random_memory_policy,
    total_dependence_policy,
    verify_chsh_over_local_models,
    verify_dominance,
)
from chsh_lab.verify import (
    run_chsh_suite,
    run_conditional_cap_suite,
    run_dominance_suite,
    run_lambda_independence_suite,
)
from conftest import tail_fraction, tail_fsum


class TestChshBound:
    def test_deterministic_sweep_sharp(self):
        report = verify_chsh_over_local_models(samples=0, seed=0)
        assert report.passed
        assert report.deterministic_max_abs_k == 2
        assert sorted(set(report.deterministic_k_values)) == [-2, 2]

    def test_uniform_noise_model(self):
        m = FiniteLocalModel([LocalComponent(1.0, (0.5, 0.5), (0.5, 0.5))])
        assert m.k_chsh == 0.0

    def test_random_mixtures_bounded(self):
        report = verify_chsh_over_local_models(samples=300, seed=5)
        assert report.passed
        assert report.models_max_abs_k <= 2.0 + 1e-12
        assert report.models_max_success_probability <= LOCAL_SUCCESS_CAP + 1e-12
        assert report.max_convexity_gap <= 1e-12

    def test_convexity_independent_route(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            model = random_local_model(rng)
            # recompute K via the mixture correlators, term by term
            k_mix = math.fsum([
                model.correlator("a", "b"), -model.correlator("a'", "b"),
                model.correlator("a", "b'"), model.correlator("a'", "b'")])
            assert model.k_chsh == pytest.approx(k_mix, abs=1e-12)

    def test_deterministic_conditional_identity(self):
        from chsh_lab import enumerate_deterministic_strategies
        for s in enumerate_deterministic_strategies():
            p = (1 + s.k_chsh / 4) / 2
            assert s.success_probability == p
            assert p in (0.25, 0.75)


class TestExactCountDistribution:
    def test_constant_policy_matches_binomial_exactly(self):
        for n in (1, 3, 7, 12):
            dist = exact_count_distribution(MemoryPolicy.constant(0.75), n)
            for k in range(n + 1):
                exact = float(math.comb(n, k) * Fraction(3, 4)**k * Fraction(1, 4)**(n - k))
                assert abs(dist.probs[k] - exact) <= 1e-12

    def test_constant_quantum_p_matches_binomial(self):
        q = QUANTUM_SUCCESS_PROBABILITY
        dist = exact_count_distribution(MemoryPolicy.constant(q), 10)
        for k in range(11):
            direct = math.comb(10, k) * q**k * (1 - q)**(10 - k)
            assert dist.probs[k] == pytest.approx(direct, rel=1e-12)

    def test_constant_zero_point_mass(self):
        dist = exact_count_distribution(MemoryPolicy.constant(0.0), 6)
        assert dist.probs[0] == 1.0
        assert all(p == 0.0 for p in dist.probs[1:])

    def test_hand_dp_fixture(self):
        # success: then 3/4 again; failure: never again
        policy = MemoryPolicy.from_table({"": 0.75, "+": 0.75, "-": 0.0})
        dist = exact_count_distribution(policy, 2)
        assert dist.probs == (4 / 16, 3 / 16, 9 / 16)

    def test_tree_and_count_routes_agree(self):
        fn = lambda i, k: min(0.75, 0.1 + 0.07 * i + 0.05 * k)  # noqa: E731
        count_route = exact_count_distribution(MemoryPolicy.from_count_fn(fn), 10)

        def by_history(h):
            return fn(len(h), sum(1 for c in h if c == 1))
        tree_route = exact_count_distribution(
            MemoryPolicy.from_callable(by_history), 10)
        for a, b in zip(count_route.probs, tree_route.probs):
            assert abs(a - b) <= 1e-12

    def test_rejects_beyond_limits(self):
        with pytest.raises(ValueError, match="20"):
            exact_count_distribution(MemoryPolicy.constant(0.5), 21)
        policy = MemoryPolicy.from_table({"": 0.5, "+": 0.5, "-": 0.5})
        with pytest.raises(ValueError, match="horizon"):
            exact_count_distribution(policy, 3)
        with pytest.raises(ValueError):
            exact_count_distribution(MemoryPolicy.constant(0.5), 0)

    def test_probabilities_normalized(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            policy = random_memory_policy(rng, horizon=8)
            dist = exact_count_distribution(policy, 8)
            assert abs(math.fsum(dist.probs) - 1.0) <= 1e-12
            assert all(p >= 0 for p in dist.probs)


class TestDominance:
    def test_boundary_policy_margin_zero_everywhere(self):
        verdict = verify_dominance(MemoryPolicy.constant(LOCAL_SUCCESS_CAP), 12)
        assert verdict.holds
        assert max(abs(m) for m in verdict.margins) <= 1e-12
        assert verdict.cap_violation_count == 0

    def test_random_admissible_policies_dominate(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            policy = random_memory_policy(rng, horizon=10)
            verdict = verify_dominance(policy, 10)
            assert verdict.holds, verdict.margin
            assert verdict.cap_violation_count == 0

    def test_quantum_policy_fails_at_20(self):
        verdict = verify_dominance(quantum_constant_policy(), 20)
        assert not verdict.holds
        assert verdict.cap_violation_count > 0
        assert verdict.margin < -1e-6

    def test_quantum_policy_margin_matches_tails(self):
        # worst slack is exactly the binomial-tail gap at the worst k
        verdict = verify_dominance(quantum_constant_policy(), 20)
        k = verdict.worst_k
        gap = tail_fsum(20, k, 0.75) - tail_fsum(20, k, QUANTUM_SUCCESS_PROBABILITY)
        assert verdict.margin == pytest.approx(gap, rel=1e-9)

    def test_total_dependence_reported_not_asserted(self):
        policy = total_dependence_policy()
        verdict = verify_dominance(policy, 10)
        # the copy step has conditional probability 1 > 3/4: must be reported
        assert verdict.cap_violation_count > 0
        assert any(p > LOCAL_SUCCESS_CAP for _, p in verdict.cap_violations)
        assert not verdict.holds
        # P(all n succeed) = 3/4 independent of n
        d5 = exact_count_distribution(policy, 5)
        d10 = exact_count_distribution(policy, 10)
        assert d5.probs[5] == 0.75
        assert d10.probs[10] == 0.75

    def test_dominance_margin_against_rational_oracle(self):
        policy = MemoryPolicy.from_table({"": 0.5, "+": 0.75, "-": 0.25})
        verdict = verify_dominance(policy, 2)
        # exact tails: P(>=1) = 1/2 + 1/2*1/4 = 5/8; P(>=2) = 1/2*3/4 = 3/8
        t_binom = [Fraction(1), tail_fraction(2, 1, Fraction(3, 4)),
                   tail_fraction(2, 2, Fraction(3, 4))]
        t_policy = [Fraction(1), Fraction(5, 8), Fraction(3, 8)]
        margins = [float(b - p) for b, p in zip(t_binom, t_policy)]
        for got, exact in zip(verdict.margins, margins):
            assert got == pytest.approx(exact, abs=1e-12)
        assert verdict.holds


class TestConditionalBound:
    def test_memoryless_boundary_model(self):
        sharp = FiniteLocalModel.from_deterministic(DeterministicStrategy(1, 1, 1, 1))
        model = MemoryLocalModel(lambda h: sharp)
        report = conditional_bound_check(model, 8)
        assert report.passed
        assert report.max_probability == 0.75
        assert report.histories_checked == (1 << 8) - 1

    def test_switching_between_deterministic_responders(self):
        win = FiniteLocalModel.from_deterministic(DeterministicStrategy(1, 1, 1, 1))
        lose = FiniteLocalModel.from_deterministic(DeterministicStrategy(1, 1, 1, -1))
        model = MemoryLocalModel(
            lambda h: win if (not h or h[-1] == 1) else lose)
        report = conditional_bound_check(model, 6)
        assert report.passed
        assert report.max_probability == 0.75  # conditionals in {1/4, 3/4}

    def test_random_memory_local_models(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            model = random_memory_local_model(rng, horizon=8)
            report = conditional_bound_check(model, 8)
            assert report.passed
            assert report.max_probability <= LOCAL_SUCCESS_CAP + 1e-12

    def test_quantum_policy_fixture_fails(self):
        report = conditional_bound_check(quantum_constant_policy(), 6)
        assert not report.passed
        assert report.violations[0][1] == pytest.approx(QUANTUM_SUCCESS_PROBABILITY)

    def test_unreachable_entries_warn(self):
        policy = MemoryPolicy.from_table({"": 1.0, "+": 0.5, "-": 0.5})
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = conditional_bound_check(policy, 2)
        assert report.unreachable_entries == 1  # "-" is cut off by p=1
        assert any("unreachable" in str(w.message) for w in caught)
        # the reachable entries still pass/fail on their own merits
        assert not report.passed  # p("") = 1.0 > 3/4

    def test_horizon_cap(self):
        with pytest.raises(ValueError, match="12"):
            conditional_bound_check(quantum_constant_policy(), 13)


class TestLambdaIndependence:
    def test_proper_models_pass(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            report = lambda_independence_check(random_local_model(rng))
            assert report.passed
            assert report.witness is None

    def test_uniform_single_value(self):
        m = FiniteLocalModel([LocalComponent(1.0, (0.5, 0.5), (0.5, 0.5))])
        report = lambda_independence_check(m)
        assert report.passed
        settings = SettingsDistribution.independent(1)
        assert np.allclose(settings.joint, 0.25)

    def test_counterexample_fails_with_witness(self):
        model, settings = lambda_dependent_settings_fixture()
        report = lambda_independence_check(model, settings)
        assert not report.passed
        w = report.witness
        assert w is not None
        assert w["lambda_index"] in (0, 1)
        assert w["setting1"] in ("a", "a'") and w["setting2"] in ("b", "b'")
        assert w["gap"] > 0.1
        assert not report.setting1_marginal_independent

    def test_biased_but_independent_settings_pass(self):
        m = FiniteLocalModel([LocalComponent(0.5, (0.1, 0.2), (0.3, 0.4)),
                              LocalComponent(0.5, (0.9, 0.8), (0.7, 0.6))])
        settings = SettingsDistribution.independent(2, p_a=0.7, p_b=0.4)
        report = lambda_independence_check(m, settings)
        assert report.passed

    def test_table_validation(self):
        with pytest.raises(ValueError, match="sum"):
            SettingsDistribution([[[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ValueError, match="shape"):
            SettingsDistribution([[0.25, 0.25, 0.25, 0.25]])


class TestSuites:
    def test_chsh_suite(self):
        result = run_chsh_suite(samples=100, seed=1)
        assert result["passed"] and result["suite"] == "chsh"

    def test_dominance_suite(self):
        result = run_dominance_suite(samples=25, seed=7, n=8)
        assert result["passed"]
        assert result["boundary_policy_margin_zero"]
        assert result["quantum_policy_fails_dominance"]
        assert result["total_dependence_cap_reported"]

    def test_conditional_cap_suite(self):
        result = run_conditional_cap_suite(samples=10, seed=11, horizon=6)
        assert result["passed"]
        with_fixture = run_conditional_cap_suite(
            samples=5, seed=11, horizon=6, include_quantum_fixture=True)
        assert not with_fixture["passed"]
        assert with_fixture["quantum_fixture"]["violation_count"] > 0

    def test_lambda_suite(self):
        result = run_lambda_independence_suite(samples=10, seed=3)
        assert result["passed"]
        assert result["counterexample_detected"]
