import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from sqfree.errors import InvalidArgument, PrecisionExceeded
from sqfree.modforms import (
    bernoulli,
    builtin_newform,
    check_character,
    degenerate_lift,
    delta,
    delta_record,
    eigenbasis,
    eisenstein,
    eta_quotient,
    hecke,
    hecke_matrix,
    kronecker_character,
    level1_basis,
    trivial_character,
)
from sqfree.newform_io import validate
from sqfree.qseries import QSeries


def brute_eta_product(spec, prec):
    """q^(sum r d / 24) prod (1 - q^(dn))^r by repeated polynomial multiplication."""
    lead = sum(r * d for d, r in spec) // 24
    poly = [1] + [0] * (prec - 1)
    for d, r in spec:
        for n in range(1, prec):
            if d * n >= prec:
                break
            for _ in range(r):
                poly = [poly[i] - (poly[i - d * n] if i >= d * n else 0) for i in range(prec)]
    return ([0] * lead + poly)[:prec]


@pytest.fixture(scope="module")
def tau():
    return brute_eta_product([(1, 24)], 60)


@pytest.mark.parametrize("k", [4, 6, 8, 10, 12, 16])
def test_bernoulli_against_sympy(k):
    assert bernoulli(k) == sympy.Rational(sympy.bernoulli(k))


def test_eisenstein_examples():
    assert eisenstein(4, 5).coefficient(0) == 1
    assert eisenstein(4, 5).coefficient(1) == -8 / sympy.bernoulli(4)
    assert eisenstein(4, 5).coefficient(1) == 240
    assert eisenstein(6, 5).coefficient(1) == -504
    with pytest.raises(InvalidArgument):
        eisenstein(8, 5)


def test_delta_examples(tau):
    d = delta(60)
    assert d.coefficient(1) == 1
    assert d.coefficient(2) == tau[2] == -24
    assert d.coefficient(6) == tau[2] * tau[3]
    assert d.coeffs == tau


def test_delta_from_eisenstein_identity():
    e4, e6 = eisenstein(4, 200), eisenstein(6, 200)
    lhs = (e4**3 - e6**2).coeffs
    assert [c / 1728 for c in lhs] == delta(200).coeffs


@pytest.mark.parametrize("k, dim", [(12, 1), (24, 2), (2, 0), (0, 0), (36, 3), (13, 0)])
def test_level1_cusp_dimensions(k, dim):
    space = level1_basis(k, 40)
    assert space.dim == dim
    assert all(b.coefficient(0) == 0 for b in space.basis)
    assert len(set(space.pivots)) == len(space.pivots)


def test_eta_quotient_examples():
    assert eta_quotient([(1, 24)], 1, 12, 80).coeffs == delta(80).coeffs
    f = eta_quotient([(1, 2), (11, 2)], 11, 2, 40)
    assert f.coefficient(2) == -2
    assert f.coeffs == brute_eta_product([(1, 2), (11, 2)], 40)
    with pytest.raises(InvalidArgument):
        eta_quotient([(1, 1)], 1, 1, 10)


def test_hecke_on_delta(tau):
    d = delta(121)
    t2 = hecke(d, 2, 12, 1)
    assert t2.prec == 61
    assert t2.coeffs == [-24 * c for c in d.coeffs[:61]]
    with pytest.raises(PrecisionExceeded):
        hecke(d, 2, 12, 1, prec=62)


def test_hecke_linearity():
    basis = level1_basis(24, 101).basis
    f, g = basis
    assert hecke(f + g, 3, 24, 1).coeffs == (hecke(f, 3, 24, 1) + hecke(g, 3, 24, 1)).coeffs


def test_u_operator_on_level_11():
    f = eta_quotient([(1, 2), (11, 2)], 11, 2, 111)
    a11 = f.coefficient(11)
    assert hecke(f, 11, 2, 11).coeffs == [a11 * c for c in f.coeffs[:11]]


@pytest.mark.parametrize("k", [24, 28, 36])
def test_hecke_matrices_commute(k):
    space = level1_basis(k, 5 * 40 + 1)
    t2, t3 = sympy.Matrix(hecke_matrix(space, 2)), sympy.Matrix(hecke_matrix(space, 3))
    assert t2 * t3 == t3 * t2


def test_eigenbasis_weight_12():
    (rec,) = eigenbasis(level1_basis(12, 60))
    assert rec.lam[2].real == pytest.approx(-24 / 2**5.5, abs=1e-15)
    assert rec.lam[2].real == pytest.approx(-0.5303300859, abs=1e-10)


def test_eigenbasis_weight_24(s24_small):
    f, g = s24_small
    a2 = sorted(r.lam[2].real * 2**11.5 for r in s24_small)
    # T_2 characteristic polynomial on S_24: x^2 - 1080 x - 20468736
    for r in a2:
        assert r * r - 1080 * r - 20468736 == pytest.approx(0, abs=1e-4 * 20468736)
    assert a2[0] == pytest.approx(540 - 12 * math.sqrt(144169), rel=1e-13)
    assert f.lam[2] != g.lam[2]
    assert np.all(f.lam.imag == 0) and np.all(g.lam.imag == 0)


def test_eigenbasis_empty_space():
    assert eigenbasis(level1_basis(2, 20)) == []


def test_computed_records_are_valid(s24_small, delta_small):
    for rec in [*s24_small, delta_small, builtin_newform("11a", 1200)]:
        assert validate(rec, 1e-9) == []


def test_degenerate_lift_examples():
    d = delta(30)
    assert degenerate_lift(d, 1, 30).coeffs == d.coeffs
    lift = degenerate_lift(d, 2, 30)
    assert lift.coefficient(2) == 1 and lift.coefficient(4) == -24
    assert all(lift.coefficient(n) == 0 for n in range(1, 30, 2))


def test_degenerate_lift_of_float_record(delta_small):
    rec = delta_small
    stripped = type(rec)(rec.level, rec.weight, rec.character, rec.lam, "ingested", "x", None)
    out = degenerate_lift(stripped, 3, 31)
    assert out[6] == pytest.approx(-24) and out[7] == 0


@given(st.lists(st.integers(-100, 100), min_size=1, max_size=40), st.integers(1, 7), st.integers(1, 80))
def test_lift_is_permutation_with_zeros(nums, d, prec):
    f = QSeries.from_ints(nums)
    prec = min(prec, d * (f.prec - 1) + 1)
    g = degenerate_lift(f, d, prec)
    assert g.prec == prec
    for n, c in enumerate(g.coeffs):
        assert c == (f.coeffs[n // d] if n % d == 0 else 0)


def test_characters():
    chi = kronecker_character(-4, 4)
    assert check_character(chi) == []
    assert chi.conductor == 4 and [chi(n) for n in range(4)] == [0, 1, 0, -1]
    assert not chi.quotient_squarefree or chi.modulus // chi.conductor == 1
    assert kronecker_character(-4, 8).quotient_squarefree
    assert not kronecker_character(-4, 16).quotient_squarefree
    assert check_character(trivial_character(12)) == []
    assert trivial_character(12).is_trivial
