from fractions import Fraction

import pytest

from oracles import integer_eigen_bruteforce
from toruslab.hetzel import exact_probability, hetzel_statistic, integer_eigen_count, montecarlo_probability

# brute-force enumeration, computed once and pinned
N1_COUNT = 55
N5_COUNT = 4315


def test_pinned_counts_match_oracle():
    assert integer_eigen_bruteforce(1) == N1_COUNT
    assert integer_eigen_count(1) == N1_COUNT
    assert integer_eigen_count(5) == N5_COUNT


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_convolution_count_matches_bruteforce(N):
    assert integer_eigen_count(N) == integer_eigen_bruteforce(N)


def test_exact_values():
    assert exact_probability(0) == 1
    assert exact_probability(1) == Fraction(55, 81)
    assert exact_probability(5) == Fraction(4315, 14641)


def test_cap():
    with pytest.raises(ValueError):
        exact_probability(50)
    with pytest.raises(ValueError):
        hetzel_statistic(60, "exact")
    with pytest.raises(ValueError):
        hetzel_statistic(2, "guess")


def test_montecarlo_reproducible_and_close():
    a = montecarlo_probability(3, 200_000, 5)
    assert a == montecarlo_probability(3, 200_000, 5)
    assert a == pytest.approx(float(exact_probability(3)), abs=0.01)


def test_table_shape_and_trend():
    table = hetzel_statistic(5)
    assert [N for N, _ in table] == list(range(6))
    probs = [p for _, p in table]
    assert all(a > b for a, b in zip(probs, probs[1:]))
    mc = hetzel_statistic(3, "montecarlo", 10_000, 1)
    assert mc == hetzel_statistic(3, "montecarlo", 10_000, 1)
