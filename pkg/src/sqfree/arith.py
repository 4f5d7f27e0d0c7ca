"""Elementary multiplicative number theory.

Sieves, the Moebius function, divisor sums and square-free divisor
enumeration. Factorization is trial division against a cached prime list,
which is plenty for the index ranges used elsewhere in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument

_TRIAL_PRIME_LIMIT = 10**6


def _check_positive(n, name="n"):
    if int(n) != n or n < 1:
        raise InvalidArgument(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def primes_up_to(limit: int) -> np.ndarray:
    """All primes p <= limit, ascending (Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_p[p]:
            is_p[p * p :: 2 * p] = False
    return np.flatnonzero(is_p).astype(np.int64)


@lru_cache(maxsize=1)
def _trial_primes():
    return tuple(int(p) for p in primes_up_to(_TRIAL_PRIME_LIMIT))


def factorize(n: int) -> dict[int, int]:
    """Prime factorization {p: e} by trial division."""
    n = _check_positive(n)
    out: dict[int, int] = {}
    for p in _trial_primes():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
    if n > 1:
        if n > _TRIAL_PRIME_LIMIT**2:
            raise InvalidArgument("integer too large for trial-division backend")
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == {n: 1}


@dataclass(frozen=True)
class SquarefreeTable:
    """flags[n] is True iff n is square-free, for 1 <= n <= limit.

    ``flags[0]`` is a placeholder (False) so that indexing is 1-based.
    """

    limit: int
    flags: np.ndarray

    def __getitem__(self, n):
        if isinstance(n, (int, np.integer)) and not 1 <= n <= self.limit:
            raise IndexError(n)
        return self.flags[n]

    def count(self, x: int | None = None) -> int:
        x = self.limit if x is None else min(int(x), self.limit)
        return int(np.count_nonzero(self.flags[1 : x + 1]))

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.flags)


def squarefree_sieve(limit: int) -> SquarefreeTable:
    limit = _check_positive(limit, "limit")
    flags = np.ones(limit + 1, dtype=bool)
    flags[0] = False
    for p in primes_up_to(math.isqrt(limit)):
        flags[p * p :: p * p] = False
    flags.setflags(write=False)
    return SquarefreeTable(limit, flags)


def mobius(n: int) -> int:
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def mobius_table(limit: int) -> np.ndarray:
    """mu(n) for 0 <= n <= limit (entry 0 is 0)."""
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in primes_up_to(limit):
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def nu(N: int) -> int:
    """Number of distinct prime divisors."""
    return len(factorize(N))


def divisor_power_sum(n: int, w: int) -> int:
    """sigma_w(n) = sum of d**w over the divisors d of n."""
    n = _check_positive(n)
    if w < 0:
        raise InvalidArgument("w must be nonnegative")
    total = 1
    for p, e in factorize(n).items():
        pw = p**w
        total *= sum(pw**i for i in range(e + 1))
    return total


def divisor_power_sum_table(limit: int, w: int) -> list[int]:
    """[sigma_w(n) for n in 0..limit] as exact integers (sigma_w(0) := 0)."""
    sig = np.zeros(limit + 1, dtype=object)
    sig[:] = 0
    for d in range(1, limit + 1):
        sig[d::d] += d**w
    return sig.tolist()


def squarefree_divisors(N: int) -> list[int]:
    N = _check_positive(N, "N")
    divs = [1]
    for p in factorize(N):
        divs += [d * p for d in divs]
    return sorted(divs)


def divisors(N: int) -> list[int]:
    divs = [1]
    for p, e in factorize(N).items():
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def is_squarefree(n: int) -> bool:
    return mobius(n) != 0


def coprime_mask(limit: int, N: int) -> np.ndarray:
    """Boolean mask m[n] = (gcd(n, N) == 1) for 0 <= n <= limit."""
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = N == 1
    for p in factorize(N):
        mask[::p] = False
    return mask
