"""Reading, writing and validating newform coefficient files.

The grammar is documented in docs/newform_format.md. A file is a version
line followed by zero or more record blocks; every block carries its own
header and one coefficient per line with an explicit index.
"""
from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np

from .arith import primes_up_to
from .errors import InconsistentData, MalformedFile
from .modforms import (
    CharacterTable,
    NewformRecord,
    character_conductor,
    normalize_exact,
    trivial_character,
)

FORMAT_VERSION = "1.0"
MAGIC = "%NEWFORM-FILE"
DEFAULT_TOLERANCE = 1e-8


def standard_path(root, level: int, weight: int, index: int) -> Path:
    return Path(root) / f"N{level}k{weight}_{index}.nf"


def _fmt(x: float) -> str:
    return f"{x:.16e}"


# --------------------------------------------------------------------------
# validation

def validate(record: NewformRecord, tolerance: float = DEFAULT_TOLERANCE) -> list[str]:
    """Names of the violated newform invariants; empty iff the record is valid."""
    lam = record.lam
    prec = record.prec
    chi = record.character
    M = record.level
    bad = []
    if prec < 1 or abs(lam[1] - 1) > tolerance:
        bad.append("normalization")

    def close(u, v):
        return abs(u - v) <= tolerance * max(1.0, abs(v))

    mult_bad = None
    top = min(100, prec)
    for m in range(2, top + 1):
        for n in range(m + 1, min(top, prec // m) + 1):
            if math.gcd(m, n) == 1 and not close(lam[m * n], lam[m] * lam[n]):
                mult_bad = (m, n)
                break
        if mult_bad:
            break
    if mult_bad:
        bad.append(f"multiplicativity at (m,n)=({mult_bad[0]},{mult_bad[1]})")

    for p in primes_up_to(min(50, math.isqrt(prec))):
        p = int(p)
        if M % p == 0:
            continue
        if not close(lam[p * p], lam[p] ** 2 - chi(p)):
            bad.append(f"Hecke relation at p={p}")

    for p in primes_up_to(min(1000, prec)):
        p = int(p)
        if M % p and abs(lam[p]) > 2 + tolerance:
            bad.append(f"Deligne bound at p={p}")
            break
    return bad


# --------------------------------------------------------------------------
# writing

def _record_lines(rec: NewformRecord) -> list[str]:
    chi = rec.character
    integral = rec.exact_a is not None
    lines = ["begin record", f"label {rec.label or '-'}", f"level {rec.level}", f"weight {rec.weight}"]
    if chi.is_trivial:
        lines.append(f"character trivial {chi.modulus}")
    else:
        lines.append(f"character table {chi.modulus} {chi.conductor}")
        for n, v in enumerate(chi.values):
            lines.append(f"chi {n} {_fmt(v.real)} {_fmt(v.imag)}")
    lines.append(f"source {rec.source}")
    lines.append(f"normalization {'integral' if integral else 'arithmetic'}")
    lines.append(f"count {rec.prec}")
    lines.append("coefficients")
    if integral:
        lines += [f"{n} {rec.exact_a[n]}" for n in range(1, rec.prec + 1)]
    else:
        lines += [f"{n} {_fmt(z.real)} {_fmt(z.imag)}" for n, z in enumerate(rec.lam[1:], start=1)]
    lines.append("end record")
    return lines


def dumps(records) -> str:
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"records {len(records)}"]
    for rec in records:
        lines += _record_lines(rec)
    return "\n".join(lines) + "\n"


def save_newforms(records, path) -> None:
    path = Path(path)
    text = dumps(list(records))
    tmp = path.with_name(path.name + ".tmp")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# --------------------------------------------------------------------------
# reading

class _Lines:
    def __init__(self, text: str):
        self.items = [
            (i + 1, ln.strip())
            for i, ln in enumerate(text.splitlines())
            if ln.strip() and not ln.lstrip().startswith("#")
        ]
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None)

    def next(self, what: str):
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else 0
            raise MalformedFile(f"unexpected end of file, expected {what}", line=last + 1)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def keyed(self, key: str, nargs: int | None = None):
        no, text = self.next(key)
        parts = text.split()
        if parts[0] != key:
            raise MalformedFile(f"expected {key!r}, found {parts[0]!r}", line=no, field=key)
        if nargs is not None and len(parts) - 1 != nargs:
            raise MalformedFile(f"{key} takes {nargs} value(s)", line=no, field=key)
        return no, parts[1:]


def _int(tok, no, fieldname):
    try:
        return int(tok)
    except ValueError:
        raise MalformedFile(f"not an integer: {tok!r}", line=no, field=fieldname) from None


def _float(tok, no, fieldname):
    try:
        return float(tok)
    except ValueError:
        raise MalformedFile(f"not a number: {tok!r}", line=no, field=fieldname) from None


def _parse_record(lines: _Lines) -> NewformRecord:
    no, text = lines.next("begin record")
    if text != "begin record":
        raise MalformedFile("expected 'begin record'", line=no)
    _, (label,) = lines.keyed("label", 1)
    no, (lv,) = lines.keyed("level", 1)
    level = _int(lv, no, "level")
    no, (wt,) = lines.keyed("weight", 1)
    weight = _int(wt, no, "weight")
    no, parts = lines.keyed("character")
    if parts[:1] == ["trivial"] and len(parts) == 2:
        chi = trivial_character(_int(parts[1], no, "character"))
    elif parts[:1] == ["table"] and len(parts) == 3:
        mod, cond = _int(parts[1], no, "character"), _int(parts[2], no, "character")
        vals = []
        for n in range(mod):
            cno, cparts = lines.keyed("chi", 3)
            if _int(cparts[0], cno, "chi") != n:
                raise MalformedFile(f"character entry {n} out of order", line=cno, field="chi")
            vals.append(complex(_float(cparts[1], cno, "chi"), _float(cparts[2], cno, "chi")))
        if character_conductor(mod, vals, 1e-9) != cond:
            raise MalformedFile("declared conductor does not match the table", line=no, field="character")
        chi = CharacterTable(mod, cond, tuple(vals))
    else:
        raise MalformedFile("character must be 'trivial M' or 'table M m'", line=no, field="character")
    if level % chi.modulus and chi.modulus % level:
        raise MalformedFile("character modulus incompatible with level", line=no, field="character")
    no, (source,) = lines.keyed("source", 1)
    if source not in ("computed", "ingested"):
        raise MalformedFile(f"unknown source {source!r}", line=no, field="source")
    no, (norm,) = lines.keyed("normalization", 1)
    if norm not in ("arithmetic", "integral"):
        raise MalformedFile(f"unknown normalization {norm!r}", line=no, field="normalization")
    no, (cnt,) = lines.keyed("count", 1)
    count = _int(cnt, no, "count")
    no, text = lines.next("coefficients")
    if text != "coefficients":
        raise MalformedFile("expected 'coefficients'", line=no)

    ints = [0] * (count + 1)
    lam = np.zeros(count + 1, dtype=complex)
    width = 2 if norm == "integral" else 3
    seen = 0
    while True:
        no, text = lines.peek()
        if text is None or text == "end record":
            break
        lines.next("coefficient")
        parts = text.split()
        if len(parts) != width:
            raise MalformedFile(f"coefficient line needs {width} fields", line=no, field="coefficient")
        n = _int(parts[0], no, "index")
        if n != seen + 1:
            raise MalformedFile(f"coefficient index {n} out of order (expected {seen + 1})", line=no, field="index")
        if n > count:
            raise MalformedFile(f"more coefficients than the declared count {count}", line=no, field="count")
        if norm == "integral":
            ints[n] = _int(parts[1], no, "coefficient")
        else:
            lam[n] = complex(_float(parts[1], no, "re"), _float(parts[2], no, "im"))
        seen = n
    no, text = lines.next("end record")
    if seen != count:
        raise MalformedFile(f"declared count {count} but found {seen} coefficients", line=no, field="count")
    exact = None
    if norm == "integral":
        lam = normalize_exact(ints, 1, weight).astype(complex)
        exact = tuple(ints)
    return NewformRecord(level, weight, chi, lam, source, "" if label == "-" else label, exact)


def loads(text: str, tolerance: float = DEFAULT_TOLERANCE, check: bool = True) -> list[NewformRecord]:
    """Parse a newform file; with ``check`` every record must pass ``validate``."""
    lines = _Lines(text)
    no, head = lines.next("version line")
    parts = head.split()
    if len(parts) != 2 or parts[0] != MAGIC:
        raise MalformedFile(f"missing {MAGIC} header", line=no, field="version")
    if parts[1] != FORMAT_VERSION:
        raise MalformedFile(f"unsupported format version {parts[1]!r}", line=no, field="version")
    no, (n_rec,) = lines.keyed("records", 1)
    n_rec = _int(n_rec, no, "records")
    records = [_parse_record(lines) for _ in range(n_rec)]
    no, extra = lines.peek()
    if extra is not None:
        raise MalformedFile("trailing content after the declared records", line=no)
    if not check:
        return records
    for i, rec in enumerate(records):
        problems = validate(rec, tolerance)
        if problems:
            raise InconsistentData(f"record {i} ({rec.label or 'unlabelled'}): {problems[0]}", problems)
    return records


def load_newforms(path, tolerance: float = DEFAULT_TOLERANCE, check: bool = True) -> list[NewformRecord]:
    try:
        text = Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError as exc:
        raise MalformedFile(f"{path}: file is not ASCII") from exc
    try:
        return loads(text, tolerance, check)
    except MalformedFile as exc:
        exc.args = (f"{path}: {exc}",)
        raise
