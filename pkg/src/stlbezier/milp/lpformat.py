"""CPLEX-style LP text export/import and ``name value`` solution files."""
from __future__ import annotations

import math
import re

import numpy as np

from .model import FEAS_TOL, LinExpr, MilpModel, ModelError, Solution

TERMS_PER_LINE = 6


class LPFormatError(ValueError):
    pass


class InfeasibleAssignment(ValueError):
    def __init__(self, what: str, amount: float):
        super().__init__(f"assignment violates {what} by {amount:.3g}")
        self.what = what
        self.amount = amount


def _fmt(v: float) -> str:
    return repr(float(v))


def _expr_lines(items):
    parts = []
    for k, (name, coef) in enumerate(items):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        term = name if mag == 1.0 else f"{_fmt(mag)} {name}"
        parts.append(f"{sign} {term}" if k or sign == "-" else term)
    lines = []
    for i in range(0, len(parts), TERMS_PER_LINE):
        lines.append(" ".join(parts[i:i + TERMS_PER_LINE]))
    return lines


def to_lp_text(model: MilpModel) -> str:
    names = model.var_names
    out = [f"\\ Problem: {model.name}", "Minimize"]
    obj = sorted((k, v) for k, v in model.objective.terms.items() if v != 0.0)
    if obj:
        lines = _expr_lines([(names[k], v) for k, v in obj])
        out.append(" obj: " + lines[0])
        out.extend("   " + ln for ln in lines[1:])
    else:
        out.append(" obj:")
    if model.n_constraints:
        out.append("Subject To")
        for i in range(model.n_constraints):
            idx, val = model.row_idx[i], model.row_val[i]
            if idx.size == 0:
                lhs = [f"0 {names[0]}"]
            else:
                lhs = _expr_lines([(names[k], v) for k, v in zip(idx, val)])
            rhs = f"{model.senses[i]} {_fmt(model.rhs[i])}"
            if len(lhs) == 1:
                out.append(f" {model.con_names[i]}: {lhs[0]} {rhs}")
            else:
                out.append(f" {model.con_names[i]}: {lhs[0]}")
                out.extend("   " + ln for ln in lhs[1:-1])
                out.append(f"   {lhs[-1]} {rhs}")
    out.append("Bounds")
    for name, lo, hi, kind in zip(names, model.lb, model.ub, model.kinds):
        if kind == "binary" and lo == 0.0 and hi == 1.0:
            continue
        if lo == hi:
            out.append(f" {name} = {_fmt(lo)}")
        elif math.isinf(lo) and math.isinf(hi):
            out.append(f" {name} free")
        else:
            los = "-inf" if math.isinf(lo) else _fmt(lo)
            his = "+inf" if math.isinf(hi) else _fmt(hi)
            out.append(f" {los} <= {name} <= {his}")
    bins = [n for n, k in zip(names, model.kinds) if k == "binary"]
    if bins:
        out.append("Binaries")
        for i in range(0, len(bins), 8):
            out.append(" " + " ".join(bins[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_model(model: MilpModel, path, fmt: str = "lp-text") -> None:
    if fmt != "lp-text":
        raise ValueError(f"unsupported export format {fmt!r}")
    text = to_lp_text(model)
    with open(path, "w") as fh:
        fh.write(text)


# -- reading ---------------------------------------------------------------

_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "min": "obj",
    "subject to": "con", "such that": "con", "st": "con", "s.t.": "con",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen",
    "end": "end",
}
_TERM_RE = re.compile(r"([+-])?\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][A-Za-z0-9_.\[\]]*)")
_NUM = r"[+-]?(?:inf(?:inity)?|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"


def _parse_num(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if s in ("-inf", "-infinity"):
        return -math.inf
    return float(s)


def _parse_terms(text: str, lineno: int):
    terms = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m or m.end() == pos:
            raise LPFormatError(f"line {lineno}: cannot parse expression near {text[pos:pos + 20]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        terms.append((m.group(3), sign * coef))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return terms


def from_lp_text(text: str) -> MilpModel:
    model = MilpModel()
    section = None
    obj_buf, con_buf = [], []
    bounds, binaries = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].rstrip()
        if raw.startswith("\\ Problem:"):
            model.name = raw.split(":", 1)[1].strip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                break
            continue
        if section == "obj":
            obj_buf.append((lineno, line))
        elif section == "con":
            con_buf.append((lineno, line))
        elif section == "bounds":
            bounds.append((lineno, line.strip()))
        elif section in ("bin", "gen"):
            if section == "gen":
                raise LPFormatError(f"line {lineno}: general integers are not supported")
            binaries.extend(line.split())
        else:
            raise LPFormatError(f"line {lineno}: content outside any section")

    # collect statements: a new statement starts at a line containing 'name:'
    def statements(buf):
        stmts = []
        for lineno, line in buf:
            if re.match(r"^\s*[A-Za-z_][A-Za-z0-9_.\[\]]*\s*:", line):
                stmts.append([lineno, line])
            elif stmts:
                stmts[-1][1] += " " + line.strip()
            else:
                stmts.append([lineno, line])
        return stmts

    var_order = []
    seen = set()

    def note(name):
        if name not in seen:
            seen.add(name)
            var_order.append(name)

    objective = []
    for lineno, stmt in statements(obj_buf):
        body = stmt.split(":", 1)[1] if ":" in stmt else stmt
        for name, coef in _parse_terms(body, lineno):
            note(name)
            objective.append((name, coef))

    rows = []
    for lineno, stmt in statements(con_buf):
        if ":" in stmt:
            cname, body = stmt.split(":", 1)
            cname = cname.strip()
        else:
            cname, body = None, stmt
        m = re.match(r"^(.*?)(<=|>=|=<|=>|=|<|>)\s*(" + _NUM + r")\s*$", body.strip())
        if not m:
            raise LPFormatError(f"line {lineno}: malformed constraint")
        sense = {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(m.group(2), m.group(2))
        terms = _parse_terms(m.group(1), lineno)
        for name, _ in terms:
            note(name)
        rows.append((cname, terms, sense, _parse_num(m.group(3))))

    lb, ub = {}, {}
    for lineno, line in bounds:
        toks = line.split()
        try:
            if len(toks) == 2 and toks[1].lower() == "free":
                lb[toks[0]], ub[toks[0]] = -math.inf, math.inf
                note(toks[0])
            elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                lb[toks[2]], ub[toks[2]] = _parse_num(toks[0]), _parse_num(toks[4])
                note(toks[2])
            elif len(toks) == 3 and toks[1] in ("=", "<=", ">="):
                name, val = toks[0], _parse_num(toks[2])
                note(name)
                if toks[1] == "=":
                    lb[name] = ub[name] = val
                elif toks[1] == "<=":
                    ub[name] = val
                else:
                    lb[name] = val
            else:
                raise ValueError
        except ValueError:
            raise LPFormatError(f"line {lineno}: malformed bound {line!r}") from None
    binset = set(binaries)
    for name in binaries:
        note(name)
    for name in var_order:
        if name in binset:
            model.add_var(name, lb.get(name, 0.0), ub.get(name, 1.0), kind="binary")
        else:
            model.add_var(name, lb.get(name, 0.0), ub.get(name, math.inf))
    expr = LinExpr()
    for name, coef in objective:
        expr = expr + model.var(name) * coef
    model.set_objective(expr)
    for cname, terms, sense, rhs in rows:
        e = LinExpr()
        for name, coef in terms:
            e.terms[model.index(name)] = e.terms.get(model.index(name), 0.0) + coef
        model.add_constr(e, sense, rhs, name=cname)
    return model


def import_model(path) -> MilpModel:
    with open(path) as fh:
        return from_lp_text(fh.read())


# -- solutions -------------------------------------------------------------

def write_solution(model: MilpModel, x, path) -> None:
    with open(path, "w") as fh:
        for name, v in zip(model.var_names, np.asarray(x, dtype=float)):
            fh.write(f"{name} {_fmt(v)}\n")


def read_assignment(model: MilpModel, text: str) -> np.ndarray:
    x = np.full(model.n_vars, np.nan)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 2:
            raise LPFormatError(f"solution line {lineno}: expected 'name value'")
        name, val = toks
        try:
            idx = model.index(name)
        except ModelError:
            raise LPFormatError(f"solution line {lineno}: unknown variable {name!r}") from None
        try:
            x[idx] = float(val)
        except ValueError:
            raise LPFormatError(f"solution line {lineno}: bad value {val!r}") from None
    missing = np.flatnonzero(np.isnan(x))
    if missing.size:
        raise LPFormatError(f"solution has no value for variable {model.var_names[missing[0]]!r}"
                            f" ({missing.size} missing)")
    return x


def import_solution(model: MilpModel, path, tol: float = FEAS_TOL) -> Solution:
    """Read ``name value`` lines and validate them against ``model``."""
    with open(path) as fh:
        x = read_assignment(model, fh.read())
    worst = model.worst_violation(x, tol=tol)
    if worst is not None:
        raise InfeasibleAssignment(*worst)
    return Solution("feasible", x=x, objective=model.objective_value(x), message=f"imported from {path}")
