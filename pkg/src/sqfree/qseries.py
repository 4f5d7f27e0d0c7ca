"""Truncated q-expansions with exact rational coefficients.

A :class:`QSeries` stores integer numerators over one common positive
denominator, which keeps long expansions (10**6 terms) affordable while the
arithmetic stays exact. Products of long series go through Kronecker
substitution: both operands are packed into one big integer each, multiplied
by GMP, and unpacked again.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpz

from .errors import InvalidArgument, PrecisionExceeded

# Products with min(prec) at or above this use Kronecker substitution.
FAST_MUL_THRESHOLD = 512


@dataclass(frozen=True)
class QSeries:
    """sum_{n < prec} (nums[n] / den) q^n, known to O(q^prec)."""

    nums: tuple
    den: int = 1
    weight: int | None = None
    level: int | None = None
    cusp: bool = field(default=False, compare=False)

    def __post_init__(self):
        if len(self.nums) == 0:
            raise InvalidArgument("a QSeries needs at least one coefficient")
        if self.den <= 0:
            raise InvalidArgument("denominator must be positive")
        if self.cusp and self.nums[0] != 0:
            raise InvalidArgument("cusp form with nonzero constant term")

    # construction ------------------------------------------------------
    @classmethod
    def from_coeffs(cls, coeffs: Iterable, weight=None, level=None, cusp=False):
        fr = [Fraction(c) for c in coeffs]
        den = math.lcm(*(c.denominator for c in fr)) if fr else 1
        nums = tuple(int(c.numerator * (den // c.denominator)) for c in fr)
        return cls(nums, den, weight, level, cusp)

    @classmethod
    def from_ints(cls, ints: Sequence[int], den: int = 1, weight=None, level=None, cusp=False):
        return _normalized(tuple(int(v) for v in ints), den, weight, level, cusp)

    @classmethod
    def unit(cls, prec: int):
        return cls((1,) + (0,) * (prec - 1))

    @classmethod
    def zero(cls, prec: int):
        return cls((0,) * prec)

    # inspection ----------------------------------------------------------
    @property
    def prec(self) -> int:
        return len(self.nums)

    @property
    def coeffs(self) -> list[Fraction]:
        return [Fraction(v, self.den) for v in self.nums]

    def coefficient(self, n: int) -> Fraction:
        if n < 0:
            raise InvalidArgument("negative index")
        if n >= self.prec:
            raise PrecisionExceeded(f"coefficient {n} requested, precision is {self.prec}")
        return Fraction(self.nums[n], self.den)

    __getitem__ = coefficient

    def is_integral(self) -> bool:
        return self.den == 1

    def is_zero(self) -> bool:
        return not any(self.nums)

    def valuation(self) -> int | None:
        for i, v in enumerate(self.nums):
            if v:
                return i
        return None

    def to_float(self) -> list[float]:
        d = self.den
        return [v / d for v in self.nums]

    def with_meta(self, weight=None, level=None, cusp=None):
        return QSeries(
            self.nums,
            self.den,
            self.weight if weight is None else weight,
            self.level if level is None else level,
            self.cusp if cusp is None else cusp,
        )

    def truncate(self, prec: int) -> QSeries:
        if prec > self.prec:
            raise PrecisionExceeded(f"cannot extend precision {self.prec} to {prec}")
        return QSeries(self.nums[:prec], self.den, self.weight, self.level, self.cusp)

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        return f"QSeries([{head}{', ...' if self.prec > 6 else ''}], prec={self.prec})"

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1))

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return mul(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __pow__(self, e):
        return pow(self, e)


def _normalized(nums: tuple, den: int, weight, level, cusp) -> QSeries:
    if den != 1:
        g = math.gcd(den, *nums)
        if g > 1:
            nums = tuple(v // g for v in nums)
            den //= g
    return QSeries(nums, den, weight, level, cusp)


def _meta_product(a: QSeries, b: QSeries):
    if a.weight is None or b.weight is None:
        return None, None
    level = math.lcm(a.level or 1, b.level or 1)
    return a.weight + b.weight, level


def add(a: QSeries, b: QSeries) -> QSeries:
    n = min(a.prec, b.prec)
    den = math.lcm(a.den, b.den)
    fa, fb = den // a.den, den // b.den
    nums = tuple(x * fa + y * fb for x, y in zip(a.nums[:n], b.nums[:n]))
    same = a.weight == b.weight and a.level == b.level
    return _normalized(
        nums,
        den,
        a.weight if same else None,
        a.level if same else None,
        a.cusp and b.cusp,
    )


def scale(a: QSeries, c) -> QSeries:
    if not isinstance(c, Rational):
        c = Fraction(c)
    c = Fraction(c)
    nums = tuple(v * c.numerator for v in a.nums)
    return _normalized(nums, a.den * c.denominator, a.weight, a.level, a.cusp)


def schoolbook(x: Sequence[int], y: Sequence[int], n: int) -> list[int]:
    """Truncated integer convolution, skipping zero entries of ``x``."""
    out = [0] * n
    if sum(1 for v in x[:n] if v) > sum(1 for v in y[:n] if v):
        x, y = y, x
    y = list(y[:n])
    for i in range(min(n, len(x))):
        xi = x[i]
        if not xi:
            continue
        for j in range(n - i):
            yj = y[j]
            if yj:
                out[i + j] += xi * yj
    return out


def _bias_block(nbytes: int, count: int) -> mpz:
    return mpz.from_bytes((1 << (8 * nbytes - 1)).to_bytes(nbytes, "little") * count, "little")


def _pack(x: Sequence[int], nbytes: int) -> mpz:
    bias = 1 << (8 * nbytes - 1)
    raw = b"".join((v + bias).to_bytes(nbytes, "little") for v in x)
    return mpz.from_bytes(raw, "little") - _bias_block(nbytes, len(x))


def _unpack(r: mpz, n: int, nbytes: int) -> list[int]:
    bits = 8 * nbytes
    bias = 1 << (bits - 1)
    r = gmpy2.f_mod_2exp(r + _bias_block(nbytes, n), bits * n)
    raw = r.to_bytes(nbytes * n, "little")
    fb = int.from_bytes
    return [fb(raw[i : i + nbytes], "little") - bias for i in range(0, nbytes * n, nbytes)]


def kronecker(x: Sequence[int], y: Sequence[int], n: int) -> list[int]:
    """Truncated integer convolution via Kronecker substitution."""
    x, y = x[:n], y[:n]
    ax = [abs(v) for v in x]
    ay = [abs(v) for v in y]
    # width must hold the inputs as well as every output coefficient
    bound = max(min(max(ax) * sum(ay), sum(ax) * max(ay)), max(ax), max(ay))
    nbytes = (bound.bit_length() + 2 + 7) // 8
    px = _pack(x, nbytes)
    py = px if x is y else _pack(y, nbytes)
    return _unpack(px * py, n, nbytes)


def int_mul(x: Sequence[int], y: Sequence[int], n: int) -> list[int]:
    if not any(x[:n]) or not any(y[:n]):
        return [0] * n
    if n >= FAST_MUL_THRESHOLD:
        return kronecker(x, y, n)
    return schoolbook(x, y, n)


def mul(a: QSeries, b: QSeries) -> QSeries:
    n = min(a.prec, b.prec)
    nums = int_mul(a.nums, b.nums, n)
    w, lv = _meta_product(a, b)
    return _normalized(tuple(nums), a.den * b.den, w, lv, a.cusp or b.cusp)


def pow(a: QSeries, e: int) -> QSeries:
    if e < 0:
        return pow(inverse(a), -e)
    if e == 0:
        return QSeries.unit(a.prec)
    result = None
    base = a
    while e:
        if e & 1:
            result = base if result is None else mul(result, base)
        e >>= 1
        if e:
            base = mul(base, base)
    return result


def inverse(a: QSeries) -> QSeries:
    """1/a for a series whose constant term is +-1 (Newton iteration)."""
    if a.den != 1 or a.nums[0] not in (1, -1):
        raise InvalidArgument("inverse is only supported for integral series with unit constant term")
    sign = a.nums[0]
    f = [v * sign for v in a.nums]
    n = a.prec
    g = [1]
    m = 1
    while m < n:
        m = min(2 * m, n)
        fg = int_mul(f, g + [0] * (m - len(g)), m)
        corr = [-v for v in fg]
        corr[0] += 2
        g = int_mul(g + [0] * (m - len(g)), corr, m)
    return QSeries(tuple(v * sign for v in g))


def coefficient(a: QSeries, n: int) -> Fraction:
    return a.coefficient(n)


def shift(a: QSeries, m: int, prec: int | None = None) -> QSeries:
    """Multiply by q**m, keeping precision ``prec`` (default a.prec + m)."""
    prec = a.prec + m if prec is None else prec
    if prec > a.prec + m:
        raise PrecisionExceeded("shift cannot extend known precision")
    nums = ((0,) * m + a.nums)[:prec]
    return QSeries(nums, a.den, a.weight, a.level, m > 0 or a.cusp)


def substitute_power(a: QSeries, d: int, prec: int) -> QSeries:
    """a(q**d) truncated to ``prec``."""
    if d < 1:
        raise InvalidArgument("d must be positive")
    needed = (prec - 1) // d + 1
    if needed > a.prec:
        raise PrecisionExceeded(f"need {needed} coefficients, have {a.prec}")
    nums = [0] * prec
    nums[::d] = a.nums[: len(range(0, prec, d))]
    return QSeries(tuple(nums), a.den, a.weight, a.level, a.cusp)
