from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqfree.errors import InconsistentData, MalformedFile
from sqfree.modforms import NewformRecord, delta_record, kronecker_character
from sqfree.newform_io import dumps, load_newforms, loads, save_newforms, standard_path, validate

GOLDEN = Path(__file__).resolve().parent.parent / "data" / "newforms"


def replaced(rec, lam, exact=None):
    return NewformRecord(rec.level, rec.weight, rec.character, lam, rec.source, rec.label, exact)


def test_round_trip_integral(tmp_path, delta_small):
    rec = delta_small.truncated(1000)
    path = tmp_path / "d.nf"
    save_newforms([rec], path)
    (back,) = load_newforms(path)
    assert np.max(np.abs(back.lam - rec.lam)) < 1e-12
    assert back.exact_a == rec.exact_a
    assert (back.level, back.weight, back.label, back.source) == (1, 12, rec.label, "computed")


def test_round_trip_floating(tmp_path, s24_small):
    path = tmp_path / "s24.nf"
    save_newforms(s24_small, path)
    back = load_newforms(path)
    assert len(back) == 2
    for a, b in zip(s24_small, back):
        assert np.array_equal(a.lam, b.lam)
        assert b.exact_a is None and b.label == a.label


def test_character_table_round_trip():
    chi = kronecker_character(-4, 4)
    lam = np.zeros(11, dtype=complex)
    lam[1] = 1
    rec = NewformRecord(4, 3, chi, lam, "ingested", "t")
    (back,) = loads(dumps([rec]), check=False)
    assert back.character.values == chi.values and back.character.conductor == 4


def test_empty_file(tmp_path):
    path = tmp_path / "empty.nf"
    save_newforms([], path)
    assert load_newforms(path) == []


def test_save_is_deterministic(tmp_path, s24_small):
    a, b = tmp_path / "a.nf", tmp_path / "b.nf"
    save_newforms(s24_small, a)
    save_newforms(s24_small, b)
    assert a.read_bytes() == b.read_bytes()


def test_short_body_is_malformed(delta_small):
    text = dumps([delta_small.truncated(100)])
    text = text.replace("100 " + str(delta_small.exact_a[100]) + "\n", "")
    with pytest.raises(MalformedFile) as err:
        loads(text)
    assert err.value.field == "count" and err.value.line is not None


@pytest.mark.parametrize("old, new, field", [
    ("%NEWFORM-FILE 1.0", "%NEWFORM-FILE 2.0", "version"),
    ("weight 12", "weight twelve", "weight"),
    ("source computed", "source guessed", "source"),
    ("\n3 252\n", "\n4 252\n", "index"),
])
def test_malformed_fields(delta_small, old, new, field):
    text = dumps([delta_small.truncated(10)]).replace(old, new, 1)
    with pytest.raises(MalformedFile) as err:
        loads(text)
    assert err.value.field == field


def test_corrupted_coefficient_is_inconsistent(s24_small):
    rec = s24_small[0].truncated(100)
    lam = rec.lam.copy()
    lam[6] += 1e-3
    text = dumps([replaced(rec, lam)])
    with pytest.raises(InconsistentData) as err:
        loads(text)
    assert any("multiplicativity" in v for v in err.value.violations)


def test_validate_examples(delta_small):
    assert validate(delta_small) == []
    lam = delta_small.lam.copy()
    lam[1] = 2
    assert "normalization" in validate(replaced(delta_small, lam))
    lam = delta_small.lam.copy()
    lam[4] += 0.1
    assert "Hecke relation at p=2" in validate(replaced(delta_small, lam))
    lam = delta_small.lam.copy()
    lam[7] = 2.5
    assert "Deligne bound at p=7" in validate(replaced(delta_small, lam.copy()))


DELTA_100 = delta_record(100)


@given(st.floats(1e-12, 1e-2), st.floats(1e-12, 1e-2), st.floats(1e-12, 1e-1), st.integers(1, 100))
def test_validate_is_monotone(t1, t2, eps, n):
    lo, hi = sorted((t1, t2))
    base = DELTA_100
    lam = base.lam.copy()
    lam[n] += eps
    rec = replaced(base, lam)
    if not validate(rec, lo):
        assert not validate(rec, hi)


def test_standard_path():
    assert standard_path("data/newforms", 11, 2, 1) == Path("data/newforms/N11k2_1.nf")


@pytest.mark.parametrize("name", ["N1k12_1.nf", "N1k24_1.nf", "N11k2_1.nf"])
def test_golden_files_load_and_regenerate(name, tmp_path):
    import importlib.util

    spec = importlib.util.spec_from_file_location("make_golden", GOLDEN.parent.parent / "scripts" / "make_golden.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    (rec,) = load_newforms(GOLDEN / name)
    assert validate(rec) == []
    fresh = {standard_path("", r.level, r.weight, 1).name: r for r in mod.golden_records()}
    save_newforms([fresh[name]], tmp_path / name)
    assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes()
