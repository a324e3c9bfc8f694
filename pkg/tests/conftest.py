"""Shared oracles and fixtures.

The binomial-tail oracles here are deliberately independent of the
package's log-gamma implementation: exact rational summation when p is
rational, compensated floating summation of exact-integer-coefficient
terms otherwise.
"""

from __future__ import annotations

import math
from fractions import Fraction

import pytest

from chsh_lab import QuantumSampler, simulate


def tail_fraction(n: int, k: int, p: Fraction) -> Fraction:
    """Exact P(B_{n,p} >= k) by direct rational summation."""
    if k <= 0:
        return Fraction(1)
    q = 1 - p
    return sum(
        (math.comb(n, j) * p**j * q**(n - j) for j in range(k, n + 1)),
        Fraction(0),
    )


def tail_fsum(n: int, k: int, p: float) -> float:
    """P(B_{n,p} >= k) by compensated float summation of exact-comb terms."""
    if k <= 0:
        return 1.0
    return math.fsum(
        math.comb(n, j) * p**j * (1.0 - p) ** (n - j) for j in range(k, n + 1)
    )


@pytest.fixture(scope="session")
def quantum_log_10k():
    return simulate(QuantumSampler(), 10_000, seed=20260809)
