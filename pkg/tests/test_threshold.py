import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqfree.arith import is_squarefree
from sqfree.errors import BasisIncomplete, DecompositionFailure, InvalidArgument, PrecisionExceeded
from sqfree.modforms import delta, delta_record, degenerate_lift
from sqfree.qseries import QSeries
from sqfree.threshold import (
    REPORT_FIELDS,
    ScanConfig,
    _split_terms,
    asymptotic_fit,
    build_form,
    config_hash,
    decompose,
    legacy_bound_log,
    min_squarefree_nonzero,
    project_d0_coefficients,
    reconstruct,
    reports_to_csv,
    reports_to_json,
    scan,
    theorem_bound,
    with_entries,
)
from sqfree.weights import SmoothWeight

DR = delta_record(400)


def strip_exact(rec):
    return type(rec)(rec.level, rec.weight, rec.character, rec.lam, "ingested", rec.label, None)


# ---------------------------------------------------------------- bounds

def test_theorem_bound_examples():
    assert theorem_bound(12, 1, 0) == pytest.approx(1728)
    assert theorem_bound(12, 2, 0) == pytest.approx(1728 * 2**3.5)
    assert theorem_bound(12, 2, 0) == pytest.approx(19546.9, rel=1e-3)
    assert theorem_bound(12, 1, 0.01) == pytest.approx(12**3.01)


@given(st.integers(2, 60), st.integers(1, 60), st.floats(0, 0.5), st.integers(1, 5), st.floats(0, 0.5))
def test_theorem_bound_monotone(k, N, eps, dk, deps):
    b = theorem_bound(k, N, eps)
    assert theorem_bound(k + dk, N, eps) >= b
    assert theorem_bound(k, N + dk, eps) >= b
    assert theorem_bound(k, N, eps + deps) >= b


def test_legacy_bound_examples():
    direct = 55 * math.log(2) + 44 * math.log(1008) ** 2
    assert math.log(1008) ** 2 == pytest.approx(47.80, abs=0.05)
    assert legacy_bound_log(12, 1, 1) == pytest.approx(direct, rel=1e-14)
    assert legacy_bound_log(12, 1, 1) == pytest.approx(2141.3, rel=0.01)
    assert legacy_bound_log(12, 1, 1) > 200 * math.log(theorem_bound(12, 1, 0))
    assert math.log(theorem_bound(12, 1, 0)) == pytest.approx(7.45, abs=0.01)
    assert legacy_bound_log(1, 1, 3.0) == pytest.approx(math.log(3.0))


@given(st.integers(2, 40), st.integers(1, 30))
def test_theorem_bound_improves_on_legacy(k, N):
    assert math.log(theorem_bound(k, N, 0.01)) < legacy_bound_log(k, N, 1)


# ---------------------------------------------------------------- decomposition

def test_decompose_identity():
    dec = decompose(delta(200), [DR], 1)
    assert [(e.index, e.delta, e.alpha) for e in dec.nonzero()] == [(0, 1, 1)]
    assert dec.d0 == 1 and dec.exact


def test_decompose_lift():
    f = degenerate_lift(delta(201), 2, 201)
    dec = decompose(f, [DR], 2)
    assert [(e.index, e.delta, e.alpha) for e in dec.nonzero()] == [(0, 2, 1)]
    assert dec.d0 == 2
    assert min_squarefree_nonzero(f, 2, 200) == 2


def test_decompose_mixed():
    f = 3 * delta(201) - 5 * degenerate_lift(delta(201), 2, 201)
    dec = decompose(f, [DR], 2)
    assert dec.alpha(0, 1) == 3 and dec.alpha(0, 2) == -5 and dec.d0 == 1


def test_decompose_floating_path():
    f = 3 * delta(201) - 5 * degenerate_lift(delta(201), 2, 201)
    a = np.array(f.to_float(), dtype=complex)
    dec = decompose(a, [strip_exact(DR)], 2, weight=12)
    assert not dec.exact and dec.d0 == 1
    assert dec.alpha(0, 1) == pytest.approx(3, abs=1e-9) and dec.alpha(0, 2) == pytest.approx(-5, abs=1e-9)


def test_decompose_errors():
    with pytest.raises(InvalidArgument):
        decompose(delta(200), [DR], 4)  # N / m_chi not square-free
    with pytest.raises(BasisIncomplete):
        decompose(delta(200), [], 1)
    with pytest.raises(PrecisionExceeded):
        decompose(delta(200), [DR], 2, prec=7)
    with pytest.raises(DecompositionFailure):
        decompose(delta(200) + QSeries.from_coeffs([0, 0, 1] + [0] * 197), [DR], 1)


@given(st.integers(-9, 9), st.integers(-9, 9), st.sampled_from([2, 3, 6]))
def test_decomposition_round_trip(a, b, N):
    f = a * delta(241) + b * degenerate_lift(delta(241), N, 241)
    dec = decompose(f, [DR], N)
    back = reconstruct(dec, 241)
    assert back.coeffs == f.coeffs
    again = decompose(back, [DR], N)
    assert [e.alpha for e in again.entries] == [e.alpha for e in dec.entries]


@given(st.integers(-9, 9).filter(bool), st.integers(-9, 9), st.integers(-9, 9))
def test_d0_minimality(a, b, c):
    f = a * degenerate_lift(delta(241), 2, 241) + b * degenerate_lift(delta(241), 3, 241) \
        + c * degenerate_lift(delta(241), 6, 241)
    dec = decompose(f, [DR], 6)
    d0 = dec.d0
    rest = with_entries(dec, [e for e in dec.entries if e.delta != d0])
    assert rest.d0 is None or rest.d0 > d0


def test_project_d0_coefficients():
    f = degenerate_lift(delta(201), 2, 201)
    dec = decompose(f, [DR], 2)
    seq = dict(project_d0_coefficients(f, dec, 50))
    assert seq[3] == 252
    assert all(n % 2 for n in seq)
    pure = decompose(delta(201), [DR], 1)
    assert [v for _, v in project_d0_coefficients(delta(201), pure, 60)] == delta(61).coeffs[1:]


@given(st.integers(-20, 20).filter(bool), st.integers(-20, 20))
def test_project_d0_exact_at_level_1_mixture(a, b):
    f = a * delta(301) + b * degenerate_lift(delta(301), 3, 301)
    dec = decompose(f, [DR], 3)
    out = project_d0_coefficients(f, dec, 100)
    assert all(isinstance(v, Fraction) for _, v in out)


# ---------------------------------------------------------------- min square-free index

def test_min_squarefree_examples():
    assert min_squarefree_nonzero(delta(50)) == 1
    assert min_squarefree_nonzero(QSeries.zero(50)) is None
    f = QSeries.from_ints([0, 0, 0, 0, 7, 0, 0, 0, 1])
    assert min_squarefree_nonzero(f) is None
    with pytest.raises(PrecisionExceeded):
        min_squarefree_nonzero(delta(50), 1, 80)


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=60), st.integers(-50, 50).filter(bool))
def test_min_squarefree_scale_invariant(nums, c):
    f = QSeries.from_ints(nums)
    m = min_squarefree_nonzero(f)
    assert min_squarefree_nonzero(scale_series(f, c)) == m
    arr = np.array(f.to_float(), dtype=complex)
    assert min_squarefree_nonzero(arr * (c * 1.5e3)) == min_squarefree_nonzero(arr) == m
    if m is not None:
        assert is_squarefree(m) and f.nums[m] != 0
        assert all(f.nums[j] == 0 for j in range(1, m) if is_squarefree(j))


def scale_series(f, c):
    return f * Fraction(c, 7)


# ---------------------------------------------------------------- form specs

@pytest.mark.parametrize("spec, expected", [
    ("3*delta - 5*delta@2", [(1, "3*delta "), (-1, " 5*delta@2")]),
    ("eta[1^2,11^2]", [(1, "eta[1^2,11^2]")]),
    ("file:data/new-forms/x.nf#1 + mf0", [(1, "file:data/new-forms/x.nf#1 "), (1, " mf0")]),
])
def test_split_terms(spec, expected):
    assert _split_terms(spec) == expected


def test_build_form_variants():
    b = build_form(12, 2, "3*delta - 5*delta@2", 100)
    assert b.exact and b.series.coefficient(2) == 3 * -24 - 5
    e = build_form(2, 11, "eta[1^2,11^2]", 50)
    assert e.series.coefficient(2) == -2
    with pytest.raises(InvalidArgument):
        build_form(12, 1, "delta@2", 50)
    with pytest.raises(InvalidArgument):
        build_form(12, 1, "mf3", 50)


# ---------------------------------------------------------------- scans and reports

LEVEL1_GRID = [(k, 1, "mf0") for k in (12, 16, 18, 20, 22, 26)]


def test_scan_level_one_eigenforms():
    reps = scan(LEVEL1_GRID)
    assert [r.observed_min_sf for r in reps] == [1] * 6
    assert all(r.satisfied and not r.error for r in reps)


def test_scan_fault_isolation_and_lift():
    reps = scan([(12, 1, "nonsense"), (12, 2, "delta@2")])
    assert reps[0].error and not reps[0].satisfied
    assert reps[1].observed_min_sf == 2 and reps[1].d0 == 2 and reps[1].satisfied
    assert reps[1].observed_min_sf <= theorem_bound(12, 2, 0.01)


def test_scan_parallel_matches_serial():
    grid = LEVEL1_GRID + [(12, 2, "delta@2"), (2, 11, "11a")]
    a = reports_to_csv(scan(grid, ScanConfig(jobs=1)))
    b = reports_to_csv(scan(grid, ScanConfig(jobs=3)))
    assert a == b


def test_report_serialization():
    reps = scan([(12, 1, "delta"), (12, 1, "bad")])
    rows = list(csv.reader(io.StringIO(reports_to_csv(reps))))
    assert rows[0] == REPORT_FIELDS and len(rows) == 3
    doc = reports_to_json(reps)
    assert json.loads(json.dumps(doc))[0]["observed_min_sf"] == 1


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": 2.5}) == config_hash({"b": 2.5, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


# ---------------------------------------------------------------- asymptotic fits

def test_fit_preconditions():
    w = SmoothWeight()
    with pytest.raises(InvalidArgument):
        asymptotic_fit([(DR, DR)], w, 1, np.geomspace(10, 300, 5))
    with pytest.raises(InvalidArgument):
        asymptotic_fit([(DR, DR)], w, 1, np.geomspace(10, 300, 8))


def test_diagonal_fit_needs_main_term():
    rec = delta_record(100_001)
    fit = asymptotic_fit([(rec, rec)], SmoothWeight(), 1, np.geomspace(1e3, 1e5, 8))[0]
    assert fit.diagonal and fit.C_hat > 0
    assert fit.residual_no_main >= 10 * fit.residual_norm


def test_diagonal_error_term_shrinks_against_three_quarters():
    rec = delta_record(10**6)
    xs = np.geomspace(1e3, 1e6, 12)
    fit = asymptotic_fit([(rec, rec)], SmoothWeight(), 1, xs)[0]
    ratio = np.abs(np.array(fit.S).real - fit.C_hat * xs) / xs**0.75
    assert ratio[-4:].max() < ratio[:4].max() / 5
