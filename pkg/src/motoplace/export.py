"""Plain-text LP and free-MPS export of a :class:`MiqpModel`.

Both writers are deterministic: rows in model order, terms by variable index,
numbers printed with 12 significant digits.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from motoplace.model import MiqpModel

EXPORT_FORMAT_VERSION = 1
_NAME_OK = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def fmt(v: float) -> str:
    out = f"{float(v):.12g}"
    return "0" if out == "-0" else out


def _safe_names(raw: list[str], prefix: str) -> list[str]:
    out, seen = [], set()
    for i, name in enumerate(raw):
        n = name if _NAME_OK.match(name) else re.sub(r"[^A-Za-z0-9_.]", "_", name)
        if not n or not (n[0].isalpha() or n[0] == "_"):
            n = f"{prefix}{n}"
        if n in seen:
            n = f"{n}__{i}"
        seen.add(n)
        out.append(n)
    return out


def export_names(model: MiqpModel) -> tuple[list[str], list[str]]:
    """Column and row names as written to the LP and MPS files."""
    cols = _safe_names([v.name for v in model.vars], "v_")
    rows = _safe_names([c.name or f"c{i}" for i, c in enumerate(model.constraints)], "r_")
    return cols, rows


def _lin_terms(terms, cols: list[str]) -> str:
    parts = []
    for i in sorted(terms):
        c = terms[i]
        if c == 0.0:
            continue
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {fmt(abs(c))} {cols[i]}")
    if not parts:
        return "0 " + cols[0] if cols else "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(text: str, width: int = 100) -> list[str]:
    lines, cur = [], ""
    for tok in text.split(" "):
        if cur and len(cur) + 1 + len(tok) > width and tok not in ("+", "-"):
            if cur.endswith((" +", " -")):
                head, op = cur[:-2], cur[-1]
                lines.append(head)
                cur = f"{op} {tok}"
                continue
            lines.append(cur)
            cur = tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    if cur:
        lines.append(cur)
    return lines


def to_lp(model: MiqpModel) -> str:
    cols, rows = export_names(model)
    obj = model.objective
    out = [f"\\ format_version: {EXPORT_FORMAT_VERSION}", f"\\ model: {model.name}", "Minimize"]
    linear = _lin_terms(obj.linear, cols) if obj.linear else ""
    quad = []
    for (i, j) in sorted(obj.quad):
        c = obj.quad[(i, j)]
        if c == 0.0:
            continue
        # LP quadratic blocks are written as [ ... ] / 2
        term = f"{cols[i]} ^ 2" if i == j else f"{cols[i]} * {cols[j]}"
        quad.append(f"{'-' if c < 0 else '+'} {fmt(abs(2.0 * c))} {term}")
    expr = linear
    if quad:
        q = " ".join(quad)
        q = q[2:] if q.startswith("+ ") else q
        expr = f"{expr} + [ {q} ] / 2" if expr else f"[ {q} ] / 2"
    if obj.constant != 0.0:
        expr = f"{expr} {'-' if obj.constant < 0 else '+'} {fmt(abs(obj.constant))}" if expr else fmt(obj.constant)
    if not expr:
        expr = f"0 {cols[0]}" if cols else "0"
    out += [" " + line for line in _wrap(f"obj: {expr}")]
    out.append("Subject To")
    for name, con in zip(rows, model.constraints):
        sense = {"<=": "<=", ">=": ">=", "==": "="}[con.sense]
        out += [" " + line for line in _wrap(f"{name}: {_lin_terms(con.terms, cols)} {sense} {fmt(con.rhs)}")]
    out.append("Bounds")
    binaries = []
    for name, v in zip(cols, model.vars):
        if v.is_binary:
            binaries.append(name)
        elif v.lb == v.ub:
            out.append(f" {name} = {fmt(v.lb)}")
        else:
            out.append(f" {fmt(v.lb)} <= {name} <= {fmt(v.ub)}")
    if binaries:
        out.append("Binary")
        out += [" " + line for line in _wrap(" ".join(binaries))]
    out.append("End")
    return "\n".join(out) + "\n"


def to_mps(model: MiqpModel) -> str:
    cols, rows = export_names(model)
    obj = model.objective
    out = [f"* format_version: {EXPORT_FORMAT_VERSION}", f"NAME {model.name}", "ROWS", " N obj"]
    for name, con in zip(rows, model.constraints):
        out.append(f" {dict(zip(('<=', '>=', '=='), 'LGE'))[con.sense]} {name}")
    out.append("COLUMNS")
    by_col: list[list[tuple[str, float]]] = [[] for _ in model.vars]
    for i, c in sorted(obj.linear.items()):
        if c != 0.0:
            by_col[i].append(("obj", c))
    for name, con in zip(rows, model.constraints):
        for i in sorted(con.terms):
            if con.terms[i] != 0.0:
                by_col[i].append((name, con.terms[i]))
    in_int = False
    marker = 0
    for j, (name, v) in enumerate(zip(cols, model.vars)):
        if v.is_binary != in_int:
            tag = "INTORG" if v.is_binary else "INTEND"
            out.append(f"    MARKER{marker} 'MARKER' '{tag}'")
            marker += 1
            in_int = v.is_binary
        entries = by_col[j] or [("obj", 0.0)]
        for row, c in entries:
            out.append(f"    {name} {row} {fmt(c)}")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if obj.constant != 0.0:
        out.append(f"    RHS obj {fmt(-obj.constant)}")
    for name, con in zip(rows, model.constraints):
        if con.rhs != 0.0:
            out.append(f"    RHS {name} {fmt(con.rhs)}")
    out.append("BOUNDS")
    for name, v in zip(cols, model.vars):
        if v.is_binary:
            out.append(f" BV BND {name}")
        elif v.lb == v.ub:
            out.append(f" FX BND {name} {fmt(v.lb)}")
        else:
            out.append(f" LO BND {name} {fmt(v.lb)}")
            out.append(f" UP BND {name} {fmt(v.ub)}")
    quad = [(i, j, c) for (i, j), c in sorted(obj.quad.items()) if c != 0.0]
    if quad:
        out.append("QUADOBJ")
        for i, j, c in quad:
            # QUADOBJ holds the lower triangle of Q in c'x + 0.5 x'Qx
            out.append(f"    {cols[i]} {cols[j]} {fmt(2.0 * c if i == j else c)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_model(model: MiqpModel, path: str | Path) -> Path:
    """Write ``model`` as LP or MPS depending on the file suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".lp":
        text = to_lp(model)
    elif suffix == ".mps":
        text = to_mps(model)
    else:
        raise ValueError(f"unknown model format {suffix!r} (use .lp or .mps)")
    path.write_text(text, encoding="utf-8")
    return path


def read_model_highs(path: str | Path):
    """Re-import an exported file with HiGHS; returns its LP data object."""
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    status = h.readModel(str(path))
    if status == highspy.HighsStatus.kError:
        raise ValueError(f"HiGHS could not read {path}")
    return h.getModel()


def residuals(lp, values_by_name: dict[str, float]) -> dict[str, float]:
    """Row residuals ``max(lo - Ax, Ax - hi, 0)`` of a HiGHS model at a named point."""
    lpd = lp.lp_
    x = np.array([values_by_name[n] for n in lpd.col_names_], dtype=float)
    a = lpd.a_matrix_
    starts, index, value = np.asarray(a.start_), np.asarray(a.index_), np.asarray(a.value_)
    act = np.zeros(lpd.num_row_)
    for j in range(lpd.num_col_):
        for k in range(starts[j], starts[j + 1]):
            act[index[k]] += value[k] * x[j]
    lo, hi = np.asarray(lpd.row_lower_), np.asarray(lpd.row_upper_)
    res = np.maximum(np.maximum(lo - act, act - hi), 0.0)
    return dict(zip(lpd.row_names_, res.tolist()))
