"""Command-line front end.

    python -m sqfree <command> [options]

Commands: basis, eigen, sfmin, asymp, cross, oracle, scan, bounds, validate.
Exit codes: 0 ok, 1 computation error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SqfreeError
from .modforms import eigenbasis, level1_basis
from .newform_io import DEFAULT_TOLERANCE, load_newforms, save_newforms, validate
from .rslfun import c_constant_parts, contour_sum_oracle, direct_weighted_sum
from .threshold import (
    REPORT_FIELDS,
    ScanConfig,
    asymptotic_fit,
    build_form,
    config_hash,
    legacy_bound_log,
    reports_to_csv,
    reports_to_json,
    scan,
    theorem_bound,
    threshold_report,
)
from .weights import SmoothWeight


@dataclass
class RunConfig:
    command: str = ""
    k: int | None = None
    N: int | None = None
    form: str | None = None
    form2: str | None = None
    prec: int = 200
    beta: float = 1.0
    tol: float = 1e-10
    x_grid: str | None = None
    P: int = 100000
    T: float = 400.0
    sigma0: float = 2.0
    eps: float = 0.01
    a0: float = 1.0
    grid: str | None = None
    path: str | None = None
    out: str | None = None
    format: str = "csv"
    seed: int = 0
    jobs: int = 1
    ks: str | None = None
    Ns: str | None = None

    def public(self) -> dict:
        """The embedded config; output path and parallelism budget do not affect results."""
        d = asdict(self)
        d.pop("out")
        d.pop("jobs")
        return d


FIT_GRID = "geom:1000:1000000:12"
ORACLE_GRID = "3,50,100,500"

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config_file(path) -> dict:
    """key = value lines; '#' starts a comment."""
    out = {}
    for no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, val = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES or key == "command":
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = _coerce(key, val)
    return out


def _coerce(key, val):
    t = _FIELD_TYPES[key]
    if "int" in t and "float" not in t:
        return int(val)
    if "float" in t:
        return float(val)
    return val


class UsageError(Exception):
    pass


class ComputationError(SqfreeError):
    pass


def parse_grid(text: str) -> np.ndarray:
    """'geom:a:b:n' or a comma list of numbers."""
    if text.startswith("geom:"):
        _, a, b, n = text.split(":")
        return np.geomspace(float(a), float(b), int(n))
    return np.array([float(v) for v in text.split(",") if v.strip()])


def parse_scan_grid(text: str) -> list[tuple[int, int, str]]:
    """Entries 'k:N:spec' separated by ';' or newlines ('#' comments allowed)."""
    out = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.split("#", 1)[0].strip()
        if not chunk:
            continue
        k, N, spec = chunk.split(":", 2)
        out.append((int(k), int(N), spec.strip()))
    return out


def _ints(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out += list(range(int(a), int(b) + 1))
        elif part.strip():
            out.append(int(part))
    return out


# --------------------------------------------------------------------------
# output

def _header(cfg: RunConfig) -> str:
    return f"# sqfree {__version__} config_sha256={config_hash(cfg.public())}"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    if v is None:
        return ""
    return str(v)


def _table_text(cfg: RunConfig, columns: list[str], rows: list[list], extra: dict | None = None) -> str:
    if cfg.format == "json":
        doc = {
            "tool": f"sqfree {__version__}",
            "config_sha256": config_hash(cfg.public()),
            "config": cfg.public(),
            "columns": columns,
            "rows": [[_json_num(v) for v in r] for r in rows],
        }
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if cfg.format == "plotdata":
        lines = [f"{_header(cfg)} columns: {' '.join(columns)}"]
        lines += [" ".join(_fmt(v) for v in r) for r in rows]
        return "\n".join(lines) + "\n"
    lines = [_header(cfg), ",".join(columns)]
    lines += [",".join(_csv_cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    s = _fmt(v)
    return f'"{s}"' if ("," in s or '"' in s) else s


def _json_num(v):
    if isinstance(v, float):
        return float(f"{v:.12g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands

def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"{cfg.command}: missing required option(s): {', '.join('--' + m for m in missing)}")


def _default_form(cfg):
    if cfg.form:
        return cfg.form
    return "delta" if cfg.k == 12 else "mf0"


def cmd_basis(cfg):
    _need(cfg, "k")
    if cfg.N not in (None, 1):
        raise UsageError("basis: only level 1 is computed; load other levels with 'validate'")
    space = level1_basis(cfg.k, cfg.prec)
    rows = []
    for i, b in enumerate(space.modular_basis):
        for n, c in enumerate(b.coeffs):
            rows.append([i, int(b.nums[0] == 0), n, str(c)])
    return _table_text(cfg, ["basis_index", "cuspidal", "n", "coefficient"], rows)


def cmd_eigen(cfg):
    _need(cfg, "k")
    recs = eigenbasis(level1_basis(cfg.k, cfg.prec + 1))
    if cfg.path:
        save_newforms(recs, cfg.path)
    rows = [[r.label, r.level, r.weight, r.prec, float(r.lam[2].real) if r.prec >= 2 else None,
             len(validate(r)) == 0] for r in recs]
    return _table_text(cfg, ["label", "level", "weight", "count", "lambda2", "valid"], rows)


def _report_row(rep):
    return [getattr(rep, f) for f in REPORT_FIELDS]


def cmd_sfmin(cfg):
    _need(cfg, "k", "N")
    rep = threshold_report(cfg.k, cfg.N, _default_form(cfg), ScanConfig(prec=cfg.prec, eps=cfg.eps, a0=cfg.a0))
    if rep.error:
        raise ComputationError(rep.error)
    return _table_text(cfg, REPORT_FIELDS, [_report_row(rep)])


def _record(cfg, spec, prec):
    build = build_form(cfg.k, cfg.N or 1, spec, prec)
    if len(build.atoms) != 1:
        raise UsageError("asymp/cross/oracle need a single newform per --form")
    return build.atoms[0]


def cmd_asymp(cfg):
    _need(cfg, "k")
    N = cfg.N or 1
    xs = parse_grid(cfg.x_grid or FIT_GRID)
    f = _record(cfg, _default_form(cfg), max(int(xs.max()), cfg.P) + 1)
    w = SmoothWeight(cfg.beta, tol=cfg.tol)
    fit = asymptotic_fit([(f, f)], w, N, xs)[0]
    cc = c_constant_parts(f, w, N, cfg.P)
    rows = [[x, s.real, fit.C_hat * x + fit.K_hat * x**fit.c_hat] for x, s in zip(fit.x, fit.S)]
    extra = {"fit": {"C_hat": fit.C_hat, "K_hat": fit.K_hat, "c": fit.c_hat, "residual": fit.residual_norm,
                     "residual_no_main": fit.residual_no_main, "c_constant": cc.value,
                     "H1": cc.H1, "H1_flat": cc.H1_flat, "residue": cc.residue, "mellin1": cc.mellin1}}
    if cfg.format == "csv":
        rows.append(["C_hat", fit.C_hat, cc.value])
    return _table_text(cfg, ["x", "S", "fit"], rows, extra)


def cmd_cross(cfg):
    _need(cfg, "k")
    N = cfg.N or 1
    xs = parse_grid(cfg.x_grid or FIT_GRID)
    prec = int(xs.max() * 1.2) + 2
    f = _record(cfg, cfg.form or "mf0", prec)
    g = _record(cfg, cfg.form2 or "mf1", prec)
    w = SmoothWeight(cfg.beta, tol=cfg.tol)
    fit = asymptotic_fit([(f, g)], w, N, xs)[0]
    rows = [[x, complex(s).real, complex(s).imag, abs(complex(s)) / x] for x, s in zip(fit.x, fit.S)]
    extra = {"fit": {"K_hat": fit.K_hat, "c_hat": fit.c_hat, "residual": fit.residual_norm}}
    return _table_text(cfg, ["x", "S_re", "S_im", "abs_S_over_x"], rows, extra)


def cmd_oracle(cfg):
    _need(cfg, "k")
    N = cfg.N or 1
    xs = parse_grid(cfg.x_grid or ORACLE_GRID)
    prec = int(xs.max()) + 2
    f = _record(cfg, _default_form(cfg), prec)
    g = _record(cfg, cfg.form2, prec) if cfg.form2 else f
    w = SmoothWeight(cfg.beta, tol=cfg.tol)
    rows = []
    for x in xs:
        d = direct_weighted_sum(f, g, w, x, N)
        c = contour_sum_oracle(f, g, w, x, N, sigma0=cfg.sigma0, T=cfg.T)
        rel = abs(d.value - c.value) / (1 + abs(d.value))
        rows.append([float(x), d.value.real, c.value.real, rel, c.error_estimate, d.term_count])
    return _table_text(cfg, ["x", "direct", "contour", "rel_diff", "tail_estimate", "terms"], rows)


def cmd_scan(cfg):
    if cfg.grid is None:
        raise UsageError("scan: --grid (inline) or --grid-file is required")
    grid = parse_scan_grid(cfg.grid)
    reports = scan(grid, ScanConfig(prec=cfg.prec, eps=cfg.eps, a0=cfg.a0, jobs=cfg.jobs))
    if cfg.format == "json":
        doc = {"tool": f"sqfree {__version__}", "config_sha256": config_hash(cfg.public()),
               "config": cfg.public(), "reports": reports_to_json(reports)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return _header(cfg) + "\n" + reports_to_csv(reports)


def cmd_bounds(cfg):
    ks = _ints(cfg.ks) if cfg.ks else ([cfg.k] if cfg.k else list(range(12, 27, 2)))
    Ns = _ints(cfg.Ns) if cfg.Ns else ([cfg.N] if cfg.N else [1, 2, 11])
    rows = []
    for k in ks:
        for N in Ns:
            tb = theorem_bound(k, N, cfg.eps)
            lg = legacy_bound_log(k, N, cfg.a0)
            rows.append([k, N, tb, math.log(tb), lg, math.log(tb) < lg])
    return _table_text(cfg, ["k", "N", "theorem_bound", "log_theorem_bound", "legacy_bound_log", "improved"], rows)


def cmd_validate(cfg):
    if not cfg.path:
        raise UsageError("validate: a newform file path is required")
    recs = load_newforms(cfg.path, check=False)
    rows = []
    bad = False
    for i, r in enumerate(recs):
        problems = validate(r, cfg.tol if cfg.tol != RunConfig.tol else DEFAULT_TOLERANCE)
        bad |= bool(problems)
        rows.append([i, r.label, r.level, r.weight, r.prec, "; ".join(problems) or "ok"])
    text = _table_text(cfg, ["index", "label", "level", "weight", "count", "status"], rows)
    if bad:
        _emit(cfg, text)
        raise ComputationError("newform file failed validation")
    return text


COMMANDS = {
    "basis": cmd_basis,
    "eigen": cmd_eigen,
    "sfmin": cmd_sfmin,
    "asymp": cmd_asymp,
    "cross": cmd_cross,
    "oracle": cmd_oracle,
    "scan": cmd_scan,
    "bounds": cmd_bounds,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqfree", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"sqfree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file (flags override it)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["csv", "json", "plotdata"])
        p.add_argument("--prec", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        return p

    p = common(sub.add_parser("basis", help="echelon bases of M_k(1) and S_k(1)"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int)

    p = common(sub.add_parser("eigen", help="level one Hecke eigenforms"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--path", help="write records to this newform file")

    p = common(sub.add_parser("sfmin", help="minimal square-free nonvanishing index and bounds"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--form")
    p.add_argument("--eps", type=float)
    p.add_argument("--a0", type=float)

    for name, help_ in (("asymp", "diagonal fit S(x) = Cx + Kx^0.75"),
                        ("cross", "off-diagonal growth fit"),
                        ("oracle", "direct sum versus contour integral")):
        p = common(sub.add_parser(name, help=help_))
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--N", type=int)
        p.add_argument("--form")
        p.add_argument("--form2")
        p.add_argument("--beta", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--x-grid", dest="x_grid")
        p.add_argument("--P", type=int)
        p.add_argument("--T", type=float)
        p.add_argument("--sigma0", type=float)

    p = common(sub.add_parser("scan", help="ThresholdReports over a grid"))
    p.add_argument("--grid", help="entries k:N:spec separated by ';'")
    p.add_argument("--grid-file", help="file with one k:N:spec entry per line")
    p.add_argument("--eps", type=float)
    p.add_argument("--a0", type=float)

    p = common(sub.add_parser("bounds", help="theorem bound versus legacy bound"))
    p.add_argument("--k", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--ks", help="e.g. 12-26 or 12,16")
    p.add_argument("--Ns", help="e.g. 1,2,11")
    p.add_argument("--eps", type=float)
    p.add_argument("--a0", type=float)

    p = common(sub.add_parser("validate", help="check a newform file"))
    p.add_argument("path")
    return parser


def make_config(ns: argparse.Namespace) -> RunConfig:
    merged = {}
    if getattr(ns, "config", None):
        merged.update(parse_config_file(ns.config))
    for key, val in vars(ns).items():
        if key in _FIELD_TYPES and val is not None:
            merged[key] = val
    if getattr(ns, "grid_file", None):
        merged["grid"] = Path(ns.grid_file).read_text()
    merged["command"] = ns.command
    return RunConfig(**merged)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(ns)
        text = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sqfree: error: {exc}", file=sys.stderr)
        return 2
    except (SqfreeError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    _emit(cfg, text)
    return 0


def main():
    sys.exit(run())
