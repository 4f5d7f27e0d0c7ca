import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqfree.arith import (
    coprime_mask,
    divisor_power_sum,
    divisor_power_sum_table,
    divisors,
    factorize,
    is_prime,
    is_squarefree,
    mobius,
    mobius_table,
    nu,
    primes_up_to,
    squarefree_divisors,
    squarefree_sieve,
)
from sqfree.errors import InvalidArgument


def brute_squarefree(n):
    return all(n % (d * d) for d in range(2, math.isqrt(n) + 1))


def test_sieve_small_examples():
    assert not squarefree_sieve(12).flags[12]
    t = squarefree_sieve(10)
    assert t.count() == 7
    assert list(t.indices()) == [1, 2, 3, 5, 6, 7, 10]
    assert squarefree_sieve(1).flags[1]


def test_sieve_rejects_zero():
    with pytest.raises(InvalidArgument):
        squarefree_sieve(0)


def test_sieve_matches_brute_force():
    t = squarefree_sieve(3000)
    assert all(bool(t.flags[n]) == brute_squarefree(n) for n in range(1, 3001))


def test_sieve_structural_invariants():
    t = squarefree_sieve(5000)
    assert all(t.flags[int(p)] for p in primes_up_to(5000))
    for d in range(2, 71):
        assert not t.flags[d * d :: d * d].any()


def test_density_at_one_million():
    x = 10**6
    assert abs(squarefree_sieve(x).count() / (6 / math.pi**2 * x) - 1) < 0.01


@pytest.mark.parametrize("n, expected", [(1, 1), (6, 1), (12, 0), (30, -1), (7, -1)])
def test_mobius_examples(n, expected):
    assert mobius(n) == expected


@pytest.mark.parametrize("fn", [mobius, nu, squarefree_divisors])
def test_zero_is_rejected(fn):
    with pytest.raises(InvalidArgument):
        fn(0)


def test_mobius_agrees_with_sieve():
    t = squarefree_sieve(10**4)
    mu = mobius_table(10**4)
    assert np.array_equal(t.flags[1:], mu[1:] != 0)
    assert all(mu[n] == mobius(n) for n in range(1, 2000))


@pytest.mark.parametrize("N, expected", [(1, 0), (12, 2), (30, 3), (2**10, 1)])
def test_nu(N, expected):
    assert nu(N) == expected


@pytest.mark.parametrize("n, w, expected", [(1, 3, 1), (2, 3, 9), (6, 1, 12), (12, 0, 6)])
def test_divisor_power_sum(n, w, expected):
    assert divisor_power_sum(n, w) == expected


def test_divisor_power_sum_table_matches_pointwise():
    table = divisor_power_sum_table(500, 3)
    assert all(table[n] == sum(d**3 for d in range(1, n + 1) if n % d == 0) for n in range(1, 501))


@pytest.mark.parametrize("N, expected", [(1, [1]), (12, [1, 2, 3, 6]), (11, [1, 11])])
def test_squarefree_divisors(N, expected):
    assert squarefree_divisors(N) == expected


@given(st.integers(1, 300), st.integers(1, 300))
def test_multiplicativity(m, n):
    if math.gcd(m, n) != 1:
        return
    assert mobius(m * n) == mobius(m) * mobius(n)
    for w in (0, 1, 3, 11):
        assert divisor_power_sum(m * n, w) == divisor_power_sum(m, w) * divisor_power_sum(n, w)


@given(st.integers(1, 10**6))
def test_squarefree_divisor_count(N):
    sd = squarefree_divisors(N)
    assert sd[0] == 1 and len(sd) == 2 ** nu(N)
    assert sd == sorted(sd) and all(N % d == 0 and is_squarefree(d) for d in sd)


@given(st.integers(1, 10**9))
def test_factorize_round_trip(n):
    f = factorize(n)
    assert math.prod(p**e for p, e in f.items()) == n
    assert all(is_prime(p) for p in f)


def test_divisors_and_coprime_mask():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    mask = coprime_mask(30, 6)
    assert [n for n in range(1, 31) if mask[n]] == [n for n in range(1, 31) if math.gcd(n, 6) == 1]
