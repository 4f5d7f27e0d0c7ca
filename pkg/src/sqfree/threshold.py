"""Newform decomposition, the square-free nonvanishing threshold, and fits.

Forms are written as small linear combinations of (lifted) newforms::

    form := term (('+' | '-') term)*
    term := [rational '*'] atom ['@' delta]
    atom := 'delta' | 'mf' INT | 'eta[' d^r (',' d^r)* ']' | builtin | 'file:' PATH ['#' INT]

``mf i`` is the i-th level one eigenform of the ambient weight (ordered by
lambda(2)); ``builtin`` names come from modforms.BUILTIN_ETA_NEWFORMS.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _linalg
from .arith import coprime_mask, is_squarefree, squarefree_divisors, squarefree_sieve
from .errors import (
    BasisIncomplete,
    DecompositionFailure,
    InternalInconsistency,
    InvalidArgument,
    PrecisionExceeded,
    SqfreeError,
)
from .modforms import (
    BUILTIN_ETA_NEWFORMS,
    NewformRecord,
    builtin_newform,
    delta_record,
    eigenbasis,
    eta_quotient,
    level1_basis,
    record_from_qseries,
    trivial_character,
)
from .qseries import QSeries
from .rslfun import weighted_sums
from .weights import SmoothWeight

FLOAT_ZERO_RTOL = 1e-9
DECOMP_RTOL = 1e-8
BOUND_NOTE = "constant = 1"


# --------------------------------------------------------------------------
# bound formulas

def theorem_bound(k: int, N: int, eps: float) -> float:
    """k^(3 + eps) N^(7/2 + eps), implied constant 1."""
    if eps < 0:
        raise InvalidArgument("eps must be nonnegative")
    return float(k) ** (3 + eps) * float(N) ** (3.5 + eps)


def legacy_bound_log(k: int, N: int, a0: float = 1.0) -> float:
    """log of a0 N 2^(r(r-1)/2) exp(4 r log^2(7 k^2 N)) with r = (k-1) N."""
    if a0 <= 0:
        raise InvalidArgument("a0 must be positive")
    r = (k - 1) * N
    return math.log(a0) + math.log(N) + r * (r - 1) / 2 * math.log(2) + 4 * r * math.log(7 * k * k * N) ** 2


# --------------------------------------------------------------------------
# decomposition

@dataclass(frozen=True)
class DecompEntry:
    index: int
    delta: int
    alpha: complex | Fraction


@dataclass(frozen=True)
class Decomposition:
    weight: int
    level: int
    m_chi: int
    entries: tuple
    d0: int | None
    basis: tuple = field(repr=False)
    exact: bool = True
    residual: float = 0.0

    def nonzero(self) -> list[DecompEntry]:
        if self.exact:
            return [e for e in self.entries if e.alpha != 0]
        scale = max((abs(e.alpha) for e in self.entries), default=0.0)
        return [e for e in self.entries if abs(e.alpha) > FLOAT_ZERO_RTOL * scale]

    def alpha(self, index: int, delta: int):
        for e in self.entries:
            if e.index == index and e.delta == delta:
                return e.alpha
        return 0


def _find_d0(entries, exact) -> int | None:
    if exact:
        live = [e.delta for e in entries if e.alpha != 0]
    else:
        scale = max((abs(e.alpha) for e in entries), default=0.0)
        live = [e.delta for e in entries if abs(e.alpha) > FLOAT_ZERO_RTOL * scale]
    return min(live) if live else None


def with_entries(dec: Decomposition, entries) -> Decomposition:
    entries = tuple(entries)
    return Decomposition(dec.weight, dec.level, dec.m_chi, entries, _find_d0(entries, dec.exact),
                         dec.basis, dec.exact, dec.residual)


def _columns(basis: Sequence[NewformRecord], N: int, m_chi: int):
    cols = []
    for i, rec in enumerate(basis):
        for d in squarefree_divisors(N // m_chi):
            if N % (rec.level * d) == 0:
                cols.append((i, d))
    return cols


def decompose(f, basis: Sequence[NewformRecord], N: int, m_chi: int = 1, prec: int | None = None,
              weight: int | None = None) -> Decomposition:
    """Coefficients alpha_{i,delta} with f = sum alpha_{i,delta} f_i(delta tau), and d0.

    ``f`` is a QSeries (exact) or an array of classical coefficients a(0..).
    The newform list is trusted to be complete for the level.
    """
    if N % m_chi or not is_squarefree(N // m_chi):
        raise InvalidArgument(f"N / m_chi = {N}/{m_chi} must be a square-free integer")
    if not basis:
        raise BasisIncomplete("empty newform basis")
    k = basis[0].weight if weight is None else weight
    if any(b.weight != k for b in basis):
        raise InvalidArgument("basis mixes weights")
    cols = _columns(basis, N, m_chi)
    if not cols:
        raise BasisIncomplete("no newform level divides N")
    avail = (f.prec if isinstance(f, QSeries) else len(f)) - 1
    avail = min([avail] + [b.prec for b in basis])
    prec = avail if prec is None else min(prec, avail)
    if prec < 4 * len(cols):
        raise PrecisionExceeded(f"decomposition with {len(cols)} unknowns needs {4 * len(cols)} coefficients")
    exact = isinstance(f, QSeries) and all(b.exact_a is not None for b in basis)
    if exact:
        rows = [[_lifted_exact(basis[i], d, n) for (i, d) in cols] for n in range(1, prec + 1)]
        rhs = [f.coefficient(n) for n in range(1, prec + 1)]
        x, rank, consistent = _linalg.solve_least(rows, rhs)
        if x is None:
            raise BasisIncomplete(f"system has rank {rank} < {len(cols)} unknowns")
        if not consistent:
            raise DecompositionFailure("form is not in the span of the lifted newforms")
        entries = tuple(DecompEntry(i, d, a) for (i, d), a in zip(cols, x))
        return Decomposition(k, N, m_chi, entries, _find_d0(entries, True), tuple(basis), True, 0.0)

    # floating path, rows scaled to arithmetic normalization
    a = np.asarray(f.to_float() if isinstance(f, QSeries) else f, dtype=complex)[1 : prec + 1]
    n = np.arange(1, prec + 1, dtype=float)
    h = (k - 1) / 2
    b = a / n**h
    A = np.zeros((prec, len(cols)), dtype=complex)
    for j, (i, d) in enumerate(cols):
        idx = np.arange(d, prec + 1, d)
        A[idx - 1, j] = basis[i].lam[idx // d] * float(d) ** (-h)
    _, R, _ = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * diag[0])) if diag.size else 0
    if rank < len(cols):
        raise BasisIncomplete(f"system has numerical rank {rank} < {len(cols)} unknowns")
    x, *_ = scipy.linalg.lstsq(A, b)
    resid = float(np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300))
    if resid > DECOMP_RTOL:
        raise DecompositionFailure(f"relative residual {resid:.3g} above {DECOMP_RTOL:g}")
    entries = tuple(DecompEntry(i, d, complex(v)) for (i, d), v in zip(cols, x))
    return Decomposition(k, N, m_chi, entries, _find_d0(entries, False), tuple(basis), False, resid)


def _lifted_exact(rec: NewformRecord, d: int, n: int) -> int:
    return rec.exact_a[n // d] if n % d == 0 else 0


def reconstruct(dec: Decomposition, prec: int):
    """sum alpha f_i(delta tau): a QSeries when exact, else complex coefficients a(0..prec-1)."""
    if dec.exact:
        acc = [Fraction(0)] * prec
        for e in dec.entries:
            if e.alpha == 0:
                continue
            rec = dec.basis[e.index]
            for n in range(e.delta, prec, e.delta):
                acc[n] += e.alpha * rec.exact_a[n // e.delta]
        return QSeries.from_coeffs(acc, dec.weight, dec.level)
    out = np.zeros(prec, dtype=complex)
    for e in dec.entries:
        rec = dec.basis[e.index]
        m = (prec - 1) // e.delta
        out[:: e.delta][: m + 1] += e.alpha * rec.a_float(m)
    return out


def project_d0_coefficients(f, dec: Decomposition, n_max: int, tol: float = 1e-9):
    """[(n, a_f(d0 n))] over 1 <= n <= n_max coprime to N.

    Each value is checked against sum_i alpha_{i,d0} a_{f_i}(n); exact data
    must agree exactly, floating data to relative ``tol``.
    """
    if dec.d0 is None:
        raise InvalidArgument("zero form has no d0")
    d0, N = dec.d0, dec.level
    avail = (f.prec if isinstance(f, QSeries) else len(f)) - 1
    if d0 * n_max > avail:
        raise PrecisionExceeded(f"a_f({d0 * n_max}) needed, precision {avail}")
    live = [e for e in dec.nonzero() if e.delta == d0]
    out = []
    for n in range(1, n_max + 1):
        if math.gcd(n, N) != 1:
            continue
        if dec.exact and isinstance(f, QSeries):
            lhs = f.coefficient(d0 * n)
            rhs = sum((e.alpha * dec.basis[e.index].exact_a[n] for e in live), Fraction(0))
            if lhs != rhs:
                raise InternalInconsistency(f"a_f({d0 * n}) = {lhs} but the newform side gives {rhs}")
        else:
            lhs = complex(f.coefficient(d0 * n)) if isinstance(f, QSeries) else complex(f[d0 * n])
            h = (dec.weight - 1) / 2
            rhs = sum(complex(e.alpha) * complex(dec.basis[e.index].lam[n]) * n**h for e in live)
            if abs(lhs - rhs) > tol * max(1.0, abs(lhs), abs(rhs)):
                raise InternalInconsistency(f"a_f({d0 * n}) = {lhs} but the newform side gives {rhs}")
        out.append((n, lhs))
    return out


# --------------------------------------------------------------------------
# minimal square-free nonvanishing index

def zero_regime(f) -> str:
    return "exact" if isinstance(f, QSeries) else f"relative {FLOAT_ZERO_RTOL:g}"


def min_squarefree_nonzero(f, N: int = 1, search_limit: int | None = None) -> int | None:
    """Smallest square-free n <= search_limit with a(f, n) != 0, or None."""
    avail = (f.prec if isinstance(f, QSeries) else len(f)) - 1
    limit = avail if search_limit is None else search_limit
    if limit > avail:
        raise PrecisionExceeded(f"search limit {limit} beyond precision {avail}")
    if limit < 1:
        return None
    sf = squarefree_sieve(limit).flags
    if isinstance(f, QSeries):
        for n in range(1, limit + 1):
            if sf[n] and f.nums[n] != 0:
                return n
        return None
    mags = np.abs(np.asarray(f[: limit + 1], dtype=complex))
    running = np.maximum.accumulate(mags)
    hits = np.flatnonzero(sf[: limit + 1] & (mags > FLOAT_ZERO_RTOL * running) & (mags > 0))
    return int(hits[0]) if hits.size else None


# --------------------------------------------------------------------------
# form construction from a spec string

@dataclass
class FormBuild:
    description: str
    weight: int
    level: int
    series: object  # QSeries when exact, else complex ndarray of a(n)
    atoms: list  # NewformRecords in the order they were first referenced
    exact: bool


@lru_cache(maxsize=16)
def _level1_eigenforms(k: int, prec: int) -> tuple:
    return tuple(eigenbasis(level1_basis(k, prec + 1)))


_TERM = re.compile(
    r"\s*(?:(?P<coef>[+-]?\s*\d+(?:/\d+)?)\s*\*)?\s*(?P<atom>delta|mf\d+|eta\[[^\]]*\]|file:[^@\s+]+|[A-Za-z0-9]+)"
    r"\s*(?:@\s*(?P<delta>\d+))?\s*"
)


def _split_terms(spec: str) -> list[tuple[int, str]]:
    """Split on top-level '+'/'-' (not inside eta[...] or a file path)."""
    terms, sign, buf = [], 1, ""
    depth, in_path = 0, False
    for ch in spec.strip():
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch.isspace():
            in_path = False
        if ch in "+-" and depth == 0 and not in_path and not buf.rstrip().endswith("*"):
            if buf.strip():
                terms.append((sign, buf))
                sign, buf = 1, ""
            sign *= 1 if ch == "+" else -1
            continue
        buf += ch
        if buf.endswith("file:"):
            in_path = True
    if buf.strip():
        terms.append((sign, buf))
    return terms


def _atom_record(atom: str, k: int, prec: int) -> NewformRecord:
    if atom == "delta":
        return delta_record(prec)
    if atom.startswith("mf"):
        forms = _level1_eigenforms(k, prec)
        i = int(atom[2:])
        if i >= len(forms):
            raise InvalidArgument(f"S_{k}(1) has only {len(forms)} eigenforms")
        return forms[i]
    if atom.startswith("eta["):
        parts = [p.strip() for p in atom[4:-1].split(",") if p.strip()]
        spec = []
        for p in parts:
            d, r = p.split("^")
            spec.append((int(d), int(r)))
        level = math.lcm(*(d for d, _ in spec))
        wt = sum(r for _, r in spec) // 2
        f = eta_quotient(spec, level, wt, prec + 1)
        return record_from_qseries(f, level, wt, trivial_character(level), label=atom)
    if atom.startswith("file:"):
        from .newform_io import load_newforms

        path, _, idx = atom[5:].partition("#")
        recs = load_newforms(path)
        return recs[int(idx or 0)]
    if atom in BUILTIN_ETA_NEWFORMS:
        return builtin_newform(atom, prec)
    raise InvalidArgument(f"unknown form atom {atom!r}")


def build_form(k: int, N: int, spec: str, prec: int) -> FormBuild:
    """Expand a form spec to coefficients a(0..prec)."""
    terms = _split_terms(spec)
    if not terms:
        raise InvalidArgument("empty form spec")
    atoms: list[NewformRecord] = []
    keys: list[str] = []
    parsed = []
    for sign, text in terms:
        m = _TERM.fullmatch(text)
        if not m:
            raise InvalidArgument(f"cannot parse term {text!r}")
        coef = Fraction(m["coef"].replace(" ", "")) if m["coef"] else Fraction(1)
        d = int(m["delta"] or 1)
        atom = m["atom"]
        if atom not in keys:
            rec = _atom_record(atom, k, prec)
            if rec.weight != k:
                raise InvalidArgument(f"{atom} has weight {rec.weight}, expected {k}")
            if N % (rec.level * d):
                raise InvalidArgument(f"{atom}@{d} does not live at level {N}")
            keys.append(atom)
            atoms.append(rec)
        parsed.append((sign * coef, keys.index(atom), d))
    exact = all(a.exact_a is not None and len(a.exact_a) > prec for a in atoms)
    if exact:
        acc = [0] * (prec + 1)
        den = math.lcm(*(c.denominator for c, _, _ in parsed))
        for c, i, d in parsed:
            mlt = int(c * den)
            ex = atoms[i].exact_a
            for n in range(d, prec + 1, d):
                acc[n] += mlt * ex[n // d]
        series = QSeries.from_ints(acc, den, k, N, True)
    else:
        series = np.zeros(prec + 1, dtype=complex)
        for c, i, d in parsed:
            m = prec // d
            series[::d][: m + 1] += float(c) * atoms[i].a_float(m)
    return FormBuild(spec, k, N, series, atoms, exact)


# --------------------------------------------------------------------------
# threshold reports and scans

@dataclass
class ScanConfig:
    prec: int = 200
    search_limit: int | None = None
    eps: float = 0.01
    a0: float = 1.0
    jobs: int = 1


@dataclass
class ThresholdReport:
    k: int
    N: int
    form: str
    observed_min_sf: int | None = None
    search_limit: int = 0
    theorem_bound: float = 0.0
    legacy_bound_log: float = 0.0
    d0: int | None = None
    satisfied: bool = False
    eps: float = 0.01
    a0: float = 1.0
    zero_regime: str = ""
    dim_proxy: float | None = None
    note: str = ""
    error: str = ""


REPORT_FIELDS = [f for f in ThresholdReport.__dataclass_fields__]


def threshold_report(k: int, N: int, spec: str, config: ScanConfig) -> ThresholdReport:
    rep = ThresholdReport(k, N, spec, eps=config.eps, a0=config.a0)
    try:
        rep.theorem_bound = theorem_bound(k, N, config.eps)
        rep.legacy_bound_log = legacy_bound_log(k, N, config.a0)
        build = build_form(k, N, spec, config.prec)
        limit = config.prec if config.search_limit is None else min(config.search_limit, config.prec)
        rep.search_limit = limit
        rep.zero_regime = zero_regime(build.series)
        rep.observed_min_sf = min_squarefree_nonzero(build.series, N, limit)
        dec = decompose(build.series, build.atoms, N, 1, weight=k)
        rep.d0 = dec.d0
        if dec.d0:
            rep.dim_proxy = k * N / dec.d0
        rep.satisfied = rep.observed_min_sf is not None and rep.observed_min_sf <= rep.theorem_bound
        rep.note = f"theorem bound {BOUND_NOTE}; newform list trusted complete"
    except (SqfreeError, ValueError, OSError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


def _scan_one(args):
    k, N, spec, config = args
    return threshold_report(k, N, spec, config)


def scan(grid: Sequence[tuple[int, int, str]], config: ScanConfig | None = None) -> list[ThresholdReport]:
    """One ThresholdReport per grid entry, in input order; failures are recorded, not raised."""
    config = ScanConfig() if config is None else config
    jobs = [(int(k), int(N), str(spec), config) for k, N, spec in grid]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(_scan_one, jobs))
    return [_scan_one(j) for j in jobs]


def _fmt_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def reports_to_csv(reports: Sequence[ThresholdReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(REPORT_FIELDS)
    for r in reports:
        wr.writerow([_fmt_value(getattr(r, name)) for name in REPORT_FIELDS])
    return buf.getvalue()


def reports_to_json(reports: Sequence[ThresholdReport]) -> list[dict]:
    return [{k: _jsonable(v) for k, v in asdict(r).items()} for r in reports]


def _jsonable(v):
    if isinstance(v, float):
        return float(f"{v:.12g}")
    return v


# --------------------------------------------------------------------------
# asymptotic fits

DIAGONAL_EXPONENT = 0.75


@dataclass
class AsymptoticFit:
    label_f: str
    label_g: str
    diagonal: bool
    x: list
    S: list
    C_hat: float
    K_hat: float
    c_hat: float
    residual_norm: float
    residual_no_main: float | None = None


def is_diagonal(f: NewformRecord, g: NewformRecord) -> bool:
    if f is g:
        return True
    n = min(f.prec, g.prec, 200)
    return f.level == g.level and bool(np.allclose(f.lam[1 : n + 1], g.lam[1 : n + 1], rtol=1e-9, atol=1e-12))


def _envelope(f, g, w, xs, N, points: int = 8):
    """RMS of S over x (1 + j/64), j < points: a size estimate robust to sign changes."""
    grid = np.concatenate([x * (1 + np.arange(points) / 64) for x in xs])
    vals = weighted_sums(f, g, w, grid, N).reshape(len(xs), points)
    return np.sqrt(np.mean(np.abs(vals) ** 2, axis=1))


def asymptotic_fit(pairs, w: SmoothWeight, N: int, x_grid) -> list[AsymptoticFit]:
    """Fit S(x) = C x + K x^0.75 (diagonal pairs) or |S(x)| ~ K x^c (off-diagonal)."""
    xs = np.asarray(x_grid, dtype=float)
    if xs.size < 6:
        raise InvalidArgument("asymptotic fits need at least 6 grid points")
    if xs.max() / xs.min() < 100:
        raise InvalidArgument("x grid must span at least two decades")
    out = []
    for f, g in pairs:
        S = weighted_sums(f, g, w, xs, N)
        if is_diagonal(f, g):
            y = S.real
            A = np.vstack([xs, xs**DIAGONAL_EXPONENT]).T
            (C, K), *_ = np.linalg.lstsq(A, y, rcond=None)
            res = float(np.linalg.norm(A @ np.array([C, K]) - y))
            B = xs[:, None] ** DIAGONAL_EXPONENT
            (K0,), *_ = np.linalg.lstsq(B, y, rcond=None)
            res0 = float(np.linalg.norm(B[:, 0] * K0 - y))
            out.append(AsymptoticFit(f.label, g.label, True, xs.tolist(), S.tolist(), float(C), float(K),
                                     DIAGONAL_EXPONENT, res, res0))
        else:
            env = _envelope(f, g, w, xs, N)
            slope, icpt = np.polyfit(np.log(xs), np.log(np.maximum(env, 1e-300)), 1)
            pred = np.exp(icpt) * xs**slope
            res = float(np.linalg.norm(np.log(env) - np.log(pred)))
            out.append(AsymptoticFit(f.label, g.label, False, xs.tolist(), S.tolist(), 0.0, float(np.exp(icpt)),
                                     float(slope), res))
    return out


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
