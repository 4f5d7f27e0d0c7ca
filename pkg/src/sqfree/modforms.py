"""Modular forms as q-expansions.

Level one is computed from scratch (Eisenstein monomials reduced to a
Miller-style echelon basis, Hecke matrices, eigenvectors). Higher levels come
from a short list of eta-quotient newforms or from ingested coefficient files.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
import sympy

from . import _linalg
from .arith import divisor_power_sum_table, divisors, factorize, is_prime, is_squarefree
from .errors import InvalidArgument, NeedsMorePrimes, PrecisionExceeded
from .qseries import QSeries, mul, pow as qpow, shift, substitute_power


# --------------------------------------------------------------------------
# Dirichlet characters as value tables

@dataclass(frozen=True)
class CharacterTable:
    modulus: int
    conductor: int
    values: tuple  # complex, indexed by residue mod modulus

    def __call__(self, n: int) -> complex:
        return self.values[n % self.modulus]

    @property
    def is_trivial(self) -> bool:
        return self.conductor == 1

    @property
    def quotient_squarefree(self) -> bool:
        """Whether modulus / conductor is square-free."""
        return is_squarefree(self.modulus // self.conductor)

    def label(self) -> str:
        return "trivial" if self.is_trivial else f"table({self.modulus},{self.conductor})"

    def with_modulus(self, N: int) -> CharacterTable:
        """The character induced to modulus N (a multiple of the conductor)."""
        if N % self.conductor:
            raise InvalidArgument("new modulus must be a multiple of the conductor")
        vals = []
        for n in range(N):
            if math.gcd(n, N) != 1:
                vals.append(0j)
            else:
                vals.append(complex(self.values[n % self.modulus]))
        return CharacterTable(N, self.conductor, tuple(vals))


def character_conductor(N: int, values: Sequence[complex], tol: float = 1e-12) -> int:
    for m in divisors(N):
        if all(
            abs(values[a] - 1) <= tol
            for a in range(1, N, m)
            if math.gcd(a, N) == 1
        ):
            return m
    return N


def check_character(chi: CharacterTable, tol: float = 1e-12) -> list[str]:
    """Violated character axioms (empty list when the table is valid)."""
    N, v = chi.modulus, chi.values
    bad = []
    if len(v) != N:
        bad.append("table length")
        return bad
    if N > 1 and abs(v[1 % N] - 1) > tol or N == 1 and abs(v[0] - 1) > tol:
        bad.append("chi(1) = 1")
    for n in range(N):
        unit = math.gcd(n, N) == 1
        if not unit and abs(v[n]) > tol:
            bad.append(f"zero off units at {n}")
        if unit and abs(abs(v[n]) - 1) > tol:
            bad.append(f"not a root of unity at {n}")
    for m in range(N):
        for n in range(N):
            if abs(v[(m * n) % N] - v[m] * v[n]) > tol:
                bad.append(f"multiplicativity at ({m},{n})")
                return bad
    if character_conductor(N, v, tol) != chi.conductor:
        bad.append("conductor")
    return bad


def trivial_character(N: int) -> CharacterTable:
    vals = tuple(complex(1 if math.gcd(n, N) == 1 else 0) for n in range(N))
    if N == 1:
        vals = (1 + 0j,)
    return CharacterTable(N, 1, vals)


def kronecker_symbol(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for n >= 1."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    result = 1
    for p, e in factorize(n).items() if n > 1 else ():
        if p == 2:
            if D % 2 == 0:
                return 0
            s = 1 if D % 8 in (1, 7) else -1
        else:
            s = sympy.jacobi_symbol(D % p, p)
        result *= s**e
    return result


def kronecker_character(D: int, N: int) -> CharacterTable:
    """The real character n -> (D/n), viewed modulo N."""
    vals = []
    for n in range(N):
        if math.gcd(n, N) != 1:
            vals.append(0j)
        else:
            rep = n if n > 0 else N
            vals.append(complex(kronecker_symbol(D, rep)))
    if N == 1:
        vals = [1 + 0j]
    return CharacterTable(N, character_conductor(N, vals), tuple(vals))


def character_from_values(N: int, values: Sequence[complex]) -> CharacterTable:
    vals = tuple(complex(v) for v in values)
    chi = CharacterTable(N, character_conductor(N, vals), vals)
    problems = check_character(chi)
    if problems:
        raise InvalidArgument(f"not a Dirichlet character: {problems[0]}")
    return chi


# --------------------------------------------------------------------------
# Level one generators

def bernoulli(n: int) -> Fraction:
    """B_n with B_1 = +1/2 (Akiyama-Tanigawa); only even n are used here."""
    a = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    return a[0]


def eisenstein(k: int, prec: int) -> QSeries:
    """Normalized E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n for k in {4, 6}."""
    if k not in (4, 6):
        raise InvalidArgument(f"eisenstein supports k in (4, 6), got {k}")
    c = -2 * k / bernoulli(k)
    assert c.denominator == 1
    sig = divisor_power_sum_table(prec - 1, k - 1)
    nums = [1] + [int(c) * s for s in sig[1:prec]]
    return QSeries(tuple(nums), 1, k, 1)


def eta_product(d: int, prec: int) -> QSeries:
    """prod_n (1 - q^(d n)) via the pentagonal number theorem."""
    nums = [0] * prec
    j = 0
    while True:
        hit = False
        for kk in ((j,) if j == 0 else (j, -j)):
            e = d * kk * (3 * kk - 1) // 2
            if e < prec:
                nums[e] += -1 if kk % 2 else 1
                hit = True
        if not hit:
            break
        j += 1
    return QSeries(tuple(nums))


def eta_cubed_product(d: int, prec: int) -> QSeries:
    """prod_n (1 - q^(d n))^3 via Jacobi's identity."""
    nums = [0] * prec
    j = 0
    while d * j * (j + 1) // 2 < prec:
        nums[d * j * (j + 1) // 2] = (-1) ** j * (2 * j + 1)
        j += 1
    return QSeries(tuple(nums))


def _eta_power(d: int, r: int, prec: int) -> QSeries:
    if r % 3 == 0 and r > 0:
        return qpow(eta_cubed_product(d, prec), r // 3)
    return qpow(eta_product(d, prec), r)


def delta(prec: int) -> QSeries:
    """Ramanujan's Delta = q prod (1 - q^n)^24, to O(q^prec)."""
    if prec < 2:
        raise InvalidArgument("delta needs prec >= 2")
    body = qpow(eta_cubed_product(1, prec - 1), 8)
    return shift(body, 1, prec).with_meta(weight=12, level=1, cusp=True)


def eta_quotient(spec: Sequence[tuple[int, int]], N: int, k: int, prec: int) -> QSeries:
    """q^(sum r d / 24) prod_d prod_n (1 - q^(d n))^(r_d), truncated to prec."""
    total = sum(r * d for d, r in spec)
    if total % 24:
        raise InvalidArgument(f"leading exponent {total}/24 is not integral")
    if sum(r for _, r in spec) != 2 * k:
        raise InvalidArgument("exponents must sum to 2k")
    if any(N % d for d, _ in spec):
        raise InvalidArgument("every d must divide the level")
    lead = total // 24
    if lead < 0:
        raise InvalidArgument("negative leading exponent")
    if lead >= prec:
        return QSeries.zero(prec).with_meta(k, N)
    body_prec = prec - lead
    body = QSeries.unit(body_prec)
    for d, r in spec:
        if r:
            body = mul(body, _eta_power(d, r, body_prec))
    return shift(body, lead, prec).with_meta(weight=k, level=N, cusp=lead > 0)


# builtin eta-quotient newforms: name -> (spec, level, weight)
BUILTIN_ETA_NEWFORMS = {
    "11a": ([(1, 2), (11, 2)], 11, 2),
    "2k8": ([(1, 8), (2, 8)], 2, 8),
    "3k6": ([(1, 6), (3, 6)], 3, 6),
    "5k4": ([(1, 4), (5, 4)], 5, 4),
    "6k4": ([(1, 2), (2, 2), (3, 2), (6, 2)], 6, 4),
}


# --------------------------------------------------------------------------
# Hecke operators and spaces

def hecke(f: QSeries, p: int, k: int, N: int, character: CharacterTable | None = None,
          prec: int | None = None) -> QSeries:
    """T_p f (U_p f when p | N): b(n) = a(pn) + chi(p) p^(k-1) a(n/p)."""
    if not is_prime(p):
        raise InvalidArgument(f"{p} is not prime")
    best = (f.prec - 1) // p + 1
    prec = best if prec is None else prec
    if prec > best or prec < 1:
        raise PrecisionExceeded(f"T_{p} output precision {prec} needs input precision {p * (prec - 1) + 1}")
    chi_p = 0 if N % p == 0 else (1 if character is None else character(p))
    if chi_p != 0 and abs(chi_p.imag if isinstance(chi_p, complex) else 0) > 0:
        raise InvalidArgument("exact Hecke operators need a rational character value")
    chi_p = int(round(chi_p.real)) if isinstance(chi_p, complex) else int(chi_p)
    pk = chi_p * p ** (k - 1)
    a = f.nums
    out = [a[p * n] for n in range(prec)]
    if pk:
        for n in range(0, prec, p):
            out[n] += pk * a[n // p]
    return QSeries(tuple(out), f.den, f.weight, f.level, f.cusp)


@dataclass
class FormSpace:
    weight: int
    level: int
    character: CharacterTable
    basis: list  # cuspidal QSeries, reduced echelon
    modular_basis: list = field(default_factory=list)
    newforms: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> list[int]:
        return [b.valuation() for b in self.basis]

    @property
    def prec(self) -> int:
        return min(b.prec for b in self.basis) if self.basis else 0


def _echelon_series(series: list[QSeries], ncols: int) -> list[QSeries]:
    """Reduced echelon combinations of ``series`` using their first ncols coefficients."""
    rows = [s.coeffs[:ncols] for s in series]
    n = len(series)
    aug = [r + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    red, piv = _linalg.rref(aug)
    piv = [p for p in piv if p < ncols]
    if len(piv) < n:
        raise InvalidArgument("generators are linearly dependent on the echelon window")
    out = []
    for row in red[: len(piv)]:
        combo = row[ncols:]
        out.append(_combine(series, combo))
    return out


def _combine(series: list[QSeries], coeffs: Sequence[Fraction]) -> QSeries:
    """Exact linear combination, done on integer numerators for speed."""
    prec = min(s.prec for s in series)
    den = math.lcm(*(Fraction(c).denominator * s.den for c, s in zip(coeffs, series)))
    acc = [0] * prec
    for c, s in zip(coeffs, series):
        c = Fraction(c)
        if not c:
            continue
        m = c.numerator * (den // (c.denominator * s.den))
        nums = s.nums
        for i in range(prec):
            v = nums[i]
            if v:
                acc[i] += m * v
    return QSeries.from_ints(acc, den, series[0].weight, series[0].level, acc[0] == 0)


def level1_monomials(k: int, prec: int) -> list[QSeries]:
    """E4^a E6^b with 4a + 6b = k."""
    if k < 0 or k % 2:
        return []
    pairs = [(a, (k - 4 * a) // 6) for a in range(k // 4 + 1) if (k - 4 * a) % 6 == 0]
    if not pairs:
        return []
    need_e4 = any(a for a, _ in pairs)
    need_e6 = any(b for _, b in pairs)
    e4 = eisenstein(4, prec) if need_e4 else None
    e6 = eisenstein(6, prec) if need_e6 else None
    p4: dict[int, QSeries] = {0: QSeries.unit(prec)}
    p6: dict[int, QSeries] = {0: QSeries.unit(prec)}

    def power(cache, base, e):
        if e not in cache:
            h = e // 2
            sq = mul(power(cache, base, h), power(cache, base, h))
            cache[e] = mul(sq, base) if e % 2 else sq
        return cache[e]

    out = []
    for a, b in pairs:
        if a and b:
            m = mul(power(p4, e4, a), power(p6, e6, b))
        elif a:
            m = power(p4, e4, a)
        else:
            m = power(p6, e6, b)
        out.append(m.with_meta(weight=k, level=1))
    return out


def level1_basis(k: int, prec: int) -> FormSpace:
    """Echelonized bases of M_k(SL2(Z)) and of its cuspidal subspace."""
    chi = trivial_character(1)
    mons = level1_monomials(k, prec)
    if not mons:
        return FormSpace(k, 1, chi, [], [], [])
    d = len(mons)
    if prec < d + 1:
        raise PrecisionExceeded(f"need prec >= {d + 1} to echelonize weight {k}")
    full = _echelon_series(mons, d)
    full = [s.with_meta(weight=k, level=1) for s in full]
    cusp = [s.with_meta(cusp=True) for s in full if s.nums[0] == 0]
    return FormSpace(k, 1, chi, cusp, full, [])


def hecke_matrix(space: FormSpace, p: int) -> list[list[Fraction]]:
    """Matrix of T_p on the echelon cusp basis: column j holds T_p(b_j) in basis coordinates."""
    piv = space.pivots
    need = p * max(piv) + 1
    if space.prec < need:
        raise PrecisionExceeded(f"T_{p} matrix needs precision {need}")
    cols = []
    for b in space.basis:
        t = hecke(b.truncate(need), p, space.weight, space.level, space.character)
        cols.append([t.coefficient(i) for i in piv])
    d = len(piv)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


# --------------------------------------------------------------------------
# Newform records

@dataclass(frozen=True, eq=False)
class NewformRecord:
    """A normalized Hecke newform, lam[n] = a(n) / n^((k-1)/2) for 1 <= n <= prec.

    ``lam[0]`` is a placeholder (0). ``exact_a`` holds exact integral
    coefficients a(0..prec) when they are known.
    """

    level: int
    weight: int
    character: CharacterTable
    lam: np.ndarray
    source: str = "computed"
    label: str = ""
    exact_a: tuple | None = None

    @property
    def prec(self) -> int:
        return len(self.lam) - 1

    def lam_at(self, n: int) -> complex:
        if not 1 <= n <= self.prec:
            raise PrecisionExceeded(f"lambda({n}) unknown, precision {self.prec}")
        return complex(self.lam[n])

    def a_float(self, n_max: int | None = None) -> np.ndarray:
        """Classically normalized coefficients a(0..n_max) as complex floats."""
        n_max = self.prec if n_max is None else n_max
        if n_max > self.prec:
            raise PrecisionExceeded(f"a({n_max}) unknown, precision {self.prec}")
        n = np.arange(n_max + 1, dtype=float)
        return self.lam[: n_max + 1] * n ** ((self.weight - 1) / 2)

    def as_qseries(self) -> QSeries:
        if self.exact_a is None:
            raise InvalidArgument(f"record {self.label!r} has no exact coefficients")
        return QSeries(self.exact_a, 1, self.weight, self.level, True)

    def truncated(self, prec: int) -> NewformRecord:
        if prec > self.prec:
            raise PrecisionExceeded("cannot extend precision")
        ex = None if self.exact_a is None else self.exact_a[: prec + 1]
        return NewformRecord(self.level, self.weight, self.character, self.lam[: prec + 1].copy(),
                             self.source, self.label, ex)


def normalize_exact(nums: Sequence[int], den: int, k: int) -> np.ndarray:
    """lam(n) = (nums[n] / den) / n^((k-1)/2) as doubles.

    The integer part of the exponent is divided out exactly (one correctly
    rounded division); an odd k - 1 costs one more rounding for sqrt(n).
    """
    m, half = divmod(k - 1, 2)
    out = np.zeros(len(nums), dtype=float)
    vals = [0.0] + [nums[n] / (den * n**m) for n in range(1, len(nums))]
    out[:] = vals
    if half:
        out[1:] /= np.sqrt(np.arange(1, len(nums), dtype=float))
    return out


def record_from_qseries(f: QSeries, level: int, weight: int, character: CharacterTable | None = None,
                        label: str = "", source: str = "computed") -> NewformRecord:
    if f.coefficient(1) != 1:
        raise InvalidArgument("newform expansion must have a(1) = 1")
    character = trivial_character(level) if character is None else character
    lam = normalize_exact(f.nums, f.den, weight).astype(complex)
    exact = f.nums if f.den == 1 else None
    return NewformRecord(level, weight, character, lam, source, label, exact)


def delta_record(prec: int) -> NewformRecord:
    """Delta as a NewformRecord with lambda known for 1 <= n <= prec."""
    return record_from_qseries(delta(prec + 1), 1, 12, label="Delta")


def builtin_newform(name: str, prec: int) -> NewformRecord:
    if name in ("delta", "Delta"):
        return delta_record(prec)
    if name not in BUILTIN_ETA_NEWFORMS:
        raise InvalidArgument(f"unknown builtin newform {name!r}; known: {sorted(BUILTIN_ETA_NEWFORMS)}")
    spec, N, k = BUILTIN_ETA_NEWFORMS[name]
    f = eta_quotient(spec, N, k, prec + 1)
    return record_from_qseries(f, N, k, trivial_character(N), label=name)


def _squarefree_poly(poly: sympy.Poly) -> bool:
    return sympy.degree(sympy.gcd(poly, poly.diff())) == 0


def eigenbasis(space: FormSpace, probe_primes: Sequence[int] = (2, 3, 5), prec: int | None = None,
               root_eps: float = 1e-20) -> list[NewformRecord]:
    """Normalized Hecke eigenforms of the cuspidal subspace.

    The first probe prime whose Hecke polynomial is square-free separates
    the eigenforms. Rational eigenvalues are handled exactly; irrational
    ones through rational isolating intervals of width <= root_eps, with the
    eigenvector expressed exactly as a polynomial in the eigenvalue.
    """
    if space.dim == 0:
        return []
    if any(space.level % p == 0 for p in probe_primes):
        raise InvalidArgument("probe primes must be coprime to the level")
    x = sympy.Symbol("x")
    for p in probe_primes:
        T = sympy.Matrix(hecke_matrix(space, p))
        cp = T.charpoly(x)
        if _squarefree_poly(cp):
            break
    else:
        raise NeedsMorePrimes(f"primes {list(probe_primes)} do not split the weight {space.weight} space")

    d = space.dim
    piv = space.pivots
    one = piv.index(1) if 1 in piv else None
    if one is None:
        raise InvalidArgument("echelon basis has no pivot at q^1")
    prec = space.prec - 1 if prec is None else prec
    basis = [b.truncate(prec + 1) for b in space.basis]
    records = []
    _, factors = cp.factor_list()
    for phi, _mult in sorted(factors, key=lambda fm: (fm[0].degree(), str(fm[0].as_expr()))):
        deg = phi.degree()
        # eigenvector of T for a root of phi, entries in Q[x]/(phi)
        M = T - x * sympy.eye(d)
        vec = _kernel_vector_mod(M, phi, x, one)
        # combos[j] = sum_i coeff of x^j in vec[i] * basis_i
        combos = []
        for j in range(deg):
            cj = [Fraction(int(sympy.Poly(vec[i], x).coeff_monomial(x**j).p),
                           int(sympy.Poly(vec[i], x).coeff_monomial(x**j).q)) for i in range(d)]
            combos.append(_combine(basis, cj) if any(cj) else None)
        roots = _certified_real_roots(phi, root_eps)
        if len(roots) < deg:
            raise NeedsMorePrimes("non-real Hecke eigenvalues are not supported at level one")
        for r_idx, theta in enumerate(roots):
            lam = np.zeros(prec + 1, dtype=float)
            for j, cmb in enumerate(combos):
                if cmb is None:
                    continue
                lam += float(theta**j) * normalize_exact(cmb.nums, cmb.den, space.weight)
            exact = None
            if deg == 1 and combos[0] is not None and combos[0].den == 1:
                exact = combos[0].nums
            label = f"L1k{space.weight}#{len(records)}"
            records.append(NewformRecord(space.level, space.weight, space.character,
                                         lam.astype(complex), "computed", label, exact))
    # deterministic order: by lambda(2)
    records.sort(key=lambda r: (r.lam[2].real if r.prec >= 2 else 0.0))
    return [NewformRecord(r.level, r.weight, r.character, r.lam, r.source,
                          f"L1k{space.weight}#{i}", r.exact_a) for i, r in enumerate(records)]


def _kernel_vector_mod(M, phi, x, one):
    """Solve M(x) v = 0 with v[one] = 1 over Q[x]/(phi)."""
    d = M.shape[0]
    others = [i for i in range(d) if i != one]
    if not others:
        return [sympy.Integer(1)]
    # drop the row that is most dependent: try each choice until solvable
    for drop in range(d):
        rows = [r for r in range(d) if r != drop]
        A = M.extract(rows, others)
        rhs = -M.extract(rows, [one])
        det = sympy.Poly(A.det(), x).rem(phi)
        if det.is_zero:
            continue
        sol = A.LUsolve(rhs)
        vec = [None] * d
        vec[one] = sympy.Integer(1)
        for i, expr in zip(others, sol):
            num, den = sympy.fraction(sympy.together(expr))
            inv = sympy.invert(sympy.Poly(den, x).as_expr(), phi.as_expr(), x)
            vec[i] = sympy.Poly(sympy.expand(num * inv), x).rem(phi).as_expr()
        return vec
    raise NeedsMorePrimes("eigenvector not determined by the probe prime")


def _certified_real_roots(phi: sympy.Poly, eps: float) -> list:
    """Real roots of phi as mpmath numbers, from rational isolating intervals."""
    if phi.degree() == 1:
        r = -phi.nth(0) / phi.nth(1)
        return [mpmath.mpf(sympy.Rational(r).p) / sympy.Rational(r).q]
    out = []
    with mpmath.workdps(40):
        for (lo, hi), _ in phi.intervals(eps=sympy.Rational(eps)):
            lo, hi = sympy.Rational(lo), sympy.Rational(hi)
            if hi - lo > eps:
                lo, hi = phi.refine_root(lo, hi, eps=sympy.Rational(eps))
            out.append((mpmath.mpf(lo.p) / lo.q + mpmath.mpf(hi.p) / hi.q) / 2)
    return out


# --------------------------------------------------------------------------
# Degenerate lifts

def degenerate_lift(f, delta_: int, prec: int):
    """f(delta * tau): b(n) = a(n / delta) when delta | n, else 0.

    A QSeries (or a record with exact coefficients) lifts exactly; a
    floating record yields a complex numpy array of classical coefficients.
    """
    if delta_ < 1:
        raise InvalidArgument("delta must be positive")
    if isinstance(f, NewformRecord):
        if f.exact_a is not None:
            f = f.as_qseries()
        else:
            need = (prec - 1) // delta_
            a = f.a_float(need)
            out = np.zeros(prec, dtype=complex)
            out[::delta_] = a[: len(out[::delta_])]
            return out
    g = substitute_power(f, delta_, prec)
    level = None if f.level is None else f.level * delta_
    return g.with_meta(level=level)
