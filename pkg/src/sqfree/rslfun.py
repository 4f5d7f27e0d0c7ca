"""Rankin-Selberg series, correction Euler products and weighted square-free sums.

Notation: for newforms f, g and a level N,

    L_flat(s) = sum over square-free n, (n, N) = 1, of lam_f(n) conj(lam_g(n)) n^-s
              = L(f x conj g, s) * H(s) * H1(s)

where H and H1 are Euler products converging absolutely for Re s > 1/2.
Every bound evaluator here takes its implied constant to be 1.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .arith import coprime_mask, primes_up_to, squarefree_sieve
from .errors import EstimationFailure, InvalidArgument, PrecisionExceeded, QuadratureFailure
from .modforms import NewformRecord
from .weights import SmoothWeight, mellin, mellin_many

BOUND_SHAPE_NOTE = "bound-shape, constant = 1"


@dataclass(frozen=True)
class SatakePair:
    p: int
    alpha1: complex
    alpha2: complex


@dataclass(frozen=True)
class EulerProductEstimate:
    s: complex
    P: int
    value: complex
    tail_bound: float


@dataclass(frozen=True)
class WeightedSumResult:
    x: float
    value: complex
    term_count: int
    method: str
    error_estimate: float = 0.0


# --------------------------------------------------------------------------
# local data

def satake(lambda_p: complex, chi_p: complex, p: int) -> SatakePair:
    """Roots of x^2 - lambda_p x + chi_p, ordered by (real, imag)."""
    lam, chi = complex(lambda_p), complex(chi_p)
    root = cmath.sqrt(lam * lam - 4 * chi)
    r1 = (lam + root) / 2
    r2 = (lam - root) / 2
    # recompute the smaller root from the product for accuracy
    if chi != 0:
        if abs(r1) >= abs(r2) and r1 != 0:
            r2 = chi / r1
        elif r2 != 0:
            r1 = chi / r2
    a, b = sorted((r1, r2), key=lambda z: (z.real, z.imag))
    return SatakePair(p, a, b)


def _satake_arrays(lam: np.ndarray, chi: np.ndarray):
    root = np.sqrt(lam * lam - 4 * chi + 0j)
    r1 = (lam + root) / 2
    r2 = (lam - root) / 2
    big = np.where(np.abs(r1) >= np.abs(r2), r1, r2)
    small = np.where(np.abs(r1) >= np.abs(r2), r2, r1)
    safe = np.where(big == 0, 1, big)
    small = np.where((chi != 0) & (big != 0), chi / safe, small)
    return big, small


def _poly_mul(a: Sequence, b: Sequence) -> list:
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def rs_local_poly(sat_f: SatakePair, sat_g: SatakePair, conj: Callable = np.conj) -> list:
    """Coefficients of prod_{i,j} (1 - alpha_i conj(beta_j) X), lowest degree first."""
    poly = [1]
    for a in (sat_f.alpha1, sat_f.alpha2):
        for b in (sat_g.alpha1, sat_g.alpha2):
            poly = _poly_mul(poly, [1, -a * conj(b)])
    return poly


def h1_polynomial(lambda_f_p, lambda_g_p, sat_f: SatakePair, sat_g: SatakePair,
                  conj: Callable = np.conj) -> list:
    """Coefficients of (1 + lam_f conj(lam_g) X) prod_{i,j} (1 - alpha_i conj(beta_j) X).

    H1_p(X) is this polynomial divided by (1 - X^2). Works over any field
    type supporting +, * and the supplied conjugation, so exact Gaussian
    rationals can be passed in.
    """
    return _poly_mul([1, lambda_f_p * conj(lambda_g_p)], rs_local_poly(sat_f, sat_g, conj))


def _horner(poly, x):
    acc = 0
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def euler_factor_H(p: int, s: complex, N: int, sat_f: SatakePair | None = None,
                   sat_g: SatakePair | None = None) -> complex:
    X = p ** (-complex(s))
    if N % p:
        return 1 - X * X
    if sat_f is None or sat_g is None:
        raise InvalidArgument("Satake data required at primes dividing N")
    return complex(_horner(rs_local_poly(sat_f, sat_g), X))


def euler_factor_H1(p: int, s: complex, lambda_f_p, lambda_g_p, sat_f: SatakePair,
                    sat_g: SatakePair) -> complex:
    X = p ** (-complex(s))
    if abs(X) >= 1:
        raise InvalidArgument("H1 local factor needs |p^-s| < 1")
    return complex(_horner(h1_polynomial(lambda_f_p, lambda_g_p, sat_f, sat_g), X) / (1 - X * X))


# --------------------------------------------------------------------------
# vectorized Euler products

def _prime_data(f: NewformRecord, P: int):
    if P > f.prec:
        raise PrecisionExceeded(f"lambda_{f.label or 'f'}(p) needed up to {P}, known to {f.prec}")
    ps = primes_up_to(P)
    lam = f.lam[ps]
    chi = np.array([f.character(int(p)) if f.level % int(p) else 0.0 for p in ps], dtype=complex)
    return ps, lam, chi


def _product_from_logs(logs: np.ndarray) -> complex:
    # fixed-size blocks keep the reduction order independent of P's layout
    total = 0j
    for i in range(0, len(logs), 4096):
        total += complex(np.sum(logs[i : i + 4096]))
    return complex(np.exp(total))


def _local_rs_logs(lam_f, chi_f, lam_g, chi_g, X):
    """sum_{i,j} log(1 - alpha_i conj(beta_j) X) per prime."""
    a1, a2 = _satake_arrays(lam_f, chi_f)
    b1, b2 = _satake_arrays(lam_g, chi_g)
    out = np.zeros(len(X), dtype=complex)
    for a in (a1, a2):
        for b in (b1, b2):
            out += np.log1p(-a * np.conj(b) * X)
    return out


def _pair_level(f, g, N):
    return math.lcm(f.level, g.level) if N is None else N


def h_product(s: complex, P: int, N: int = 1, f: NewformRecord | None = None,
              g: NewformRecord | None = None) -> EulerProductEstimate:
    """prod_{p <= P} H_p(s)."""
    s = complex(s)
    ps = primes_up_to(P)
    X = ps.astype(float) ** (-s)
    good = np.array([N % int(p) != 0 for p in ps], dtype=bool)
    logs = np.zeros(len(ps), dtype=complex)
    logs[good] = np.log1p(-X[good] ** 2)
    if not np.all(good):
        if f is None or g is None:
            raise InvalidArgument("h_product needs the forms when N > 1")
        bad = np.flatnonzero(~good)
        bp = ps[bad]
        lf = np.array([f.lam_at(int(p)) for p in bp])
        lg = np.array([g.lam_at(int(p)) for p in bp])
        cf = np.array([f.character(int(p)) if f.level % int(p) else 0 for p in bp], dtype=complex)
        cg = np.array([g.character(int(p)) if g.level % int(p) else 0 for p in bp], dtype=complex)
        logs[bad] = _local_rs_logs(lf, cf, lg, cg, X[bad])
    sigma = s.real
    tail = P ** (1 - 2 * sigma) / ((2 * sigma - 1) * math.log(P)) if sigma > 0.5 else math.inf
    return EulerProductEstimate(s, P, _product_from_logs(logs), tail)


def h1_product(f: NewformRecord, g: NewformRecord, s: complex, P: int,
               N: int | None = None) -> EulerProductEstimate:
    """prod_{p <= P, p not dividing N} H1_p(s)."""
    s = complex(s)
    N = _pair_level(f, g, N)
    ps_f, lf, cf = _prime_data(f, P)
    _, lg, cg = _prime_data(g, P)
    keep = np.array([N % int(p) != 0 for p in ps_f], dtype=bool)
    ps, lf, cf, lg, cg = ps_f[keep], lf[keep], cf[keep], lg[keep], cg[keep]
    X = ps.astype(float) ** (-s)
    if np.any(np.abs(X) >= 1):
        raise InvalidArgument("H1 needs |p^-s| < 1")
    logs = np.log1p(lf * np.conj(lg) * X) + _local_rs_logs(lf, cf, lg, cg, X) - np.log1p(-X * X)
    sigma = s.real
    tail = 32 * P ** (1 - 2 * sigma) / ((2 * sigma - 1) * math.log(P)) if sigma > 0.5 else math.inf
    return EulerProductEstimate(s, P, _product_from_logs(logs), tail)


def rs_lfun_truncated(f: NewformRecord, g: NewformRecord, s: complex, P: int,
                      N: int | None = None) -> EulerProductEstimate:
    """prod_{p <= P} prod_{i,j} (1 - alpha_i conj(beta_j) p^-s)^-1 for Re s >= 1.05."""
    s = complex(s)
    if s.real < 1.05:
        raise InvalidArgument(f"truncated Euler product needs Re s >= 1.05, got {s.real}")
    N = _pair_level(f, g, N)
    ps, lf, cf = _prime_data(f, P)
    _, lg, cg = _prime_data(g, P)
    # Satake data at p | N is (lambda(p), 0)
    bad = np.array([N % int(p) == 0 for p in ps], dtype=bool)
    cf = np.where(bad, 0, cf)
    cg = np.where(bad, 0, cg)
    X = ps.astype(float) ** (-s)
    logs = -_local_rs_logs(lf, cf, lg, cg, X)
    sigma = s.real
    tail = 8 * P ** (1 - sigma) / ((sigma - 1) * math.log(P))
    return EulerProductEstimate(s, P, _product_from_logs(logs), tail)


# --------------------------------------------------------------------------
# bound evaluators

def analytic_conductor_bound(k: int, N: int, t: float) -> float:
    """(1 + |t|)^4 k^2 N^3."""
    return (1 + abs(t)) ** 4 * k**2 * N**3


def convexity_bound(k: int, N: int, s: complex, eps: float) -> float:
    """q(s)^((1 - sigma)/2 + eps) for 1/2 <= sigma <= 1."""
    s = complex(s)
    if not 0.5 <= s.real <= 1:
        raise InvalidArgument("convexity bound needs 1/2 <= Re s <= 1")
    return analytic_conductor_bound(k, N, s.imag) ** ((1 - s.real) / 2 + eps)


# --------------------------------------------------------------------------
# square-free weighted sums

def flat_coefficients(f: NewformRecord, g: NewformRecord, N: int, n_max: int) -> np.ndarray:
    """c[n] = lam_f(n) conj(lam_g(n)) on square-free n coprime to N, else 0 (0 <= n <= n_max)."""
    if n_max > min(f.prec, g.prec):
        raise PrecisionExceeded(f"coefficients needed up to {n_max}, known to {min(f.prec, g.prec)}")
    mask = squarefree_sieve(max(n_max, 1)).flags[: n_max + 1] & coprime_mask(n_max, N)
    c = np.zeros(n_max + 1, dtype=complex)
    c[mask] = f.lam[: n_max + 1][mask] * np.conj(g.lam[: n_max + 1][mask])
    return c


def _support(x: float) -> tuple[int, int]:
    """Integers n with x/2 < n < x, as (lo, hi) inclusive."""
    lo = math.floor(x / 2) + 1
    hi = math.ceil(x) - 1
    return lo, hi


def direct_weighted_sum(f: NewformRecord, g: NewformRecord, w: SmoothWeight, x: float,
                        N: int) -> WeightedSumResult:
    if x < 2:
        raise InvalidArgument("x must be at least 2")
    lo, hi = _support(x)
    if hi > min(f.prec, g.prec):
        raise PrecisionExceeded(f"coefficients needed up to {hi}, known to {min(f.prec, g.prec)}")
    c = flat_coefficients(f, g, N, hi)
    n = np.arange(lo, hi + 1)
    mask = squarefree_sieve(max(hi, 1)).flags[lo : hi + 1] & coprime_mask(hi, N)[lo : hi + 1]
    vals = c[lo : hi + 1] * w(n / x)
    return WeightedSumResult(float(x), complex(np.sum(vals[mask])), int(np.count_nonzero(mask)), "direct")


def weighted_sums(f: NewformRecord, g: NewformRecord, w: SmoothWeight, xs, N: int) -> np.ndarray:
    """direct_weighted_sum values on a grid of x, sharing one coefficient table."""
    xs = np.asarray(xs, dtype=float)
    hi = _support(float(xs.max()))[1]
    c = flat_coefficients(f, g, N, hi)
    out = np.empty(len(xs), dtype=complex)
    for i, x in enumerate(xs):
        lo, top = _support(x)
        n = np.arange(lo, top + 1)
        out[i] = np.sum(c[lo : top + 1] * w(n / x))
    return out


def contour_sum_oracle(f: NewformRecord, g: NewformRecord, w: SmoothWeight, x: float, N: int,
                       sigma0: float = 2.0, T: float = 400.0, P: int | None = None,
                       tol: float = 1e-6) -> WeightedSumResult:
    """(1/2 pi i) int_{(sigma0)} L_flat(s) x^s w~(s) ds by the trapezoidal rule on |t| <= T.

    L_flat is the square-free Dirichlet series truncated at P >= x. Because
    omega has compact support in log scale the step can be picked so that
    the trapezoidal aliases fall outside the truncated series; what remains
    is the tail |t| > T, reported as ``error_estimate``.
    """
    if sigma0 < 1.5:
        raise InvalidArgument("contour must sit at Re s >= 1.5")
    P = math.ceil(x) if P is None else int(P)
    if P < x:
        raise InvalidArgument("Dirichlet series cutoff P must be at least x")
    c = flat_coefficients(f, g, N, P)
    n = np.flatnonzero(c)
    cn = c[n]
    lead = max(2.0 * P / x, x, 2.0)
    h = 2 * math.pi / (math.log(lead) + 1.0)
    K = int(math.floor(T / h))
    t = h * np.arange(-K, K + 1)
    s = sigma0 + 1j * t
    wt, werr = mellin_many(w, s)
    if n.size:
        logs = np.log(x / n.astype(float))
        # L_flat(s) x^s = sum_n c_n (x/n)^s, evaluated in chunks of t
        acc = np.empty(len(t), dtype=complex)
        for i in range(0, len(t), 256):
            ss = s[i : i + 256]
            acc[i : i + 256] = np.exp(np.outer(ss, logs)) @ cn
        abs_sum = float(np.sum(np.abs(cn) * (x / n) ** sigma0))
    else:
        acc = np.zeros(len(t), dtype=complex)
        abs_sum = 0.0
    value = complex(h / (2 * math.pi) * np.sum(acc * wt))
    # tail beyond T, plus the Mellin quadrature error on the grid
    t_far = h * np.arange(K + 1, K + 1 + int(math.ceil(3 * T / h)) + 200)
    far_vals, _ = mellin_many(w, sigma0 + 1j * t_far)
    tail = h / (2 * math.pi) * abs_sum * (2 * float(np.sum(np.abs(far_vals))) + float(np.sum(werr)))
    if tail > tol * (1 + abs(value)):
        raise QuadratureFailure(f"contour tail {tail:.3g} exceeds tolerance at T = {T}")
    lo, hi = _support(x)
    count = int(np.count_nonzero((n >= lo) & (n <= hi)))
    return WeightedSumResult(float(x), value, count, "contour", tail)


# --------------------------------------------------------------------------
# residue and the main-term constant

DEFAULT_DELTA_GRID = (0.5, 0.4, 0.3, 0.2, 0.1, 0.05)


def residue_estimate(f: NewformRecord, N: int, P: int,
                     delta_grid: Sequence[float] = DEFAULT_DELTA_GRID) -> float:
    """Res_{s=1} L(f x conj f, s), extrapolated from d * L(f x conj f, 1 + d).

    Each L value is the Euler product over p <= P times the exact tail of
    zeta(s) beyond P (zeta(s) prod_{p <= P} (1 - p^-s)), which carries the
    pole; the remaining truncation is smooth in d. A quadratic least-squares
    fit in d is evaluated at d = 0.
    """
    d = np.asarray(delta_grid, dtype=float)
    if d.size < 4:
        raise InvalidArgument("residue extrapolation needs at least 4 grid points")
    if np.any(d < 0.05) or np.any(d > 0.5) or np.any(np.diff(d) >= 0):
        raise InvalidArgument("delta grid must be decreasing within [0.05, 0.5]")
    ps = primes_up_to(P).astype(float)
    vals = []
    for dd in d:
        s = 1 + dd
        L = rs_lfun_truncated(f, f, s, P, N).value.real
        zeta_tail = float(hurwitz_zeta(s, 1)) * math.exp(float(np.sum(np.log1p(-ps ** (-s)))))
        vals.append(dd * L * zeta_tail)
    coef = np.polyfit(d, np.asarray(vals), 2)
    res = float(coef[-1])
    if not res > 0:
        raise EstimationFailure(f"non-positive residue extrapolation {res:g}; increase P")
    return res


@dataclass(frozen=True)
class CConstant:
    value: float
    H1: float
    H1_flat: float
    residue: float
    mellin1: float


def c_constant_parts(f: NewformRecord, w: SmoothWeight, N: int, P: int,
                     delta_grid: Sequence[float] = DEFAULT_DELTA_GRID) -> CConstant:
    h = h_product(1.0, P, N, f, f).value.real
    h1 = h1_product(f, f, 1.0, P, N).value.real
    res = residue_estimate(f, N, P, delta_grid)
    m1 = mellin(w, 1.0).value.real
    val = h * h1 * res * m1
    if not val > 0:
        raise EstimationFailure(f"C(f, omega) came out non-positive ({val:g})")
    return CConstant(val, h, h1, res, m1)


def c_constant(f: NewformRecord, w: SmoothWeight, N: int, P: int,
               delta_grid: Sequence[float] = DEFAULT_DELTA_GRID) -> float:
    """H(1) H1(1) Res L(f x conj f, 1) w~(1): the slope of the diagonal weighted sum."""
    return c_constant_parts(f, w, N, P, delta_grid).value
