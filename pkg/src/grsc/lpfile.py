"""CPLEX-LP export of a :class:`MilpModel` and a driver for external solvers.

Names longer than 255 characters are cut to 246 characters followed by
``~`` and the first 8 hex digits of the SHA-1 of the full name, so the
result is deterministic and stays unique in practice.
"""
from __future__ import annotations

import hashlib
import math
import re
import shlex
import subprocess
import tempfile
import time
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .milp import CutContext, CutGenerator, MilpModel, SolveResult, relative_gap

MAX_NAME = 255
_LINE_WIDTH = 200
_BAD_CHARS = re.compile(r"[^A-Za-z0-9_.~!\"#$%&()/,;?@'`{}|\[\]]")


def lp_name(name: str) -> str:
    name = _BAD_CHARS.sub("_", name) or "_"
    if name[0].isdigit() or name[0] in ".eE":
        name = "_" + name
    if len(name) > MAX_NAME:
        digest = hashlib.sha1(name.encode()).hexdigest()[:8]
        name = name[: MAX_NAME - 9] + "~" + digest
    return name


def _num(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def _terms(pairs, names) -> list[str]:
    out = []
    for j, a in pairs:
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        body = names[j] if mag == 1 else f"{_num(mag)} {names[j]}"
        out.append(f"{sign} {body}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out


def _wrap(prefix: str, tokens: list[str]) -> list[str]:
    lines, cur = [], prefix
    for tok in tokens:
        if len(cur) + len(tok) + 1 > _LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + tok
    lines.append(cur)
    return lines


def export_lp_file(model: MilpModel, extra_rows: Iterable = ()) -> str:
    names = [lp_name(v.name) for v in model.variables]
    out = [f"\\ Problem: {lp_name(model.name)}", "Minimize"]
    obj = _terms(((j, v.obj) for j, v in enumerate(model.variables)), names)
    if not obj and names:
        obj = [f"0 {names[0]}"]
    out += _wrap(" obj:", obj)
    out.append("Subject To")
    rows = list(model.constraints) + list(extra_rows)
    for k, c in enumerate(rows):
        label = lp_name(c.name) if c.name else f"c{k}"
        terms = _terms(zip(c.indices, c.coefs), names)
        if not terms:
            terms = [f"0 {names[0]}"] if names else ["0"]
        sense = {"==": "="}.get(c.sense, c.sense)
        out += _wrap(f" {label}:", terms + [sense, _num(c.rhs)])
    out.append("Bounds")
    for j, v in enumerate(model.variables):
        if v.binary and v.lb == 0 and v.ub == 1:
            continue
        lo = "-inf" if v.lb == -math.inf else _num(v.lb)
        hi = "+inf" if v.ub == math.inf else _num(v.ub)
        out.append(f" {lo} <= {names[j]} <= {hi}")
    bins = [names[j] for j, v in enumerate(model.variables) if v.binary]
    if bins:
        out.append("Binaries")
        out += _wrap("", bins)
    out.append("End")
    return "\n".join(out) + "\n"


_TERM = re.compile(r"([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*([A-Za-z_~!\"#$%&()/,;?@'`{}|\[\]][^\s+\-]*)")


def _parse_expr(text: str) -> list[tuple[str, float]]:
    """Terms of a linear expression written by :func:`export_lp_file`."""
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse expression near {text[pos:pos + 20]!r}")
        sign, coef, name = m.groups()
        a = float(coef) if coef else 1.0
        out.append((name, -a if sign == "-" else a))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return out


def parse_lp_file(text: str) -> MilpModel:
    """Read back the subset of the LP format that :func:`export_lp_file` writes.

    Variables appear in the order of first mention; variables only listed in
    ``Binaries`` or ``Bounds`` are appended.
    """
    model = MilpModel()
    section = None
    buf: list[str] = []
    bins: set[str] = set()
    bounds: dict[str, tuple[float, float]] = {}
    objective: list[tuple[str, float]] = []
    rows: list[tuple[str, list[tuple[str, float]], str, float]] = []
    order: dict[str, int] = {}

    def note(name):
        order.setdefault(name, len(order))

    def flush():
        if not buf:
            return
        stmt = " ".join(buf)
        buf.clear()
        label, _, body = stmt.partition(":")
        if section == "obj":
            terms = [(n, a) for n, a in _parse_expr(body)]
            for n, _a in terms:
                note(n)
            objective.extend(terms)
        elif section == "st":
            m = re.match(r"(.*?)(<=|>=|=)\s*(\S+)\s*$", body)
            if not m:
                raise ValueError(f"bad constraint {stmt!r}")
            terms = _parse_expr(m.group(1))
            for n, _a in terms:
                note(n)
            rows.append((label.strip(), terms, m.group(2), float(m.group(3))))

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "minimise", "min"):
            section = "obj"
            continue
        if low in ("subject to", "st", "s.t."):
            flush()
            section = "st"
            continue
        if low == "bounds":
            flush()
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            flush()
            section = "bin"
            continue
        if low == "end":
            flush()
            break
        if section in ("obj", "st"):
            if ":" in line and buf:
                flush()
            buf.append(line)
        elif section == "bounds":
            m = re.match(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)", line)
            if not m:
                raise ValueError(f"bad bound {line!r}")
            lo, name, hi = m.groups()
            note(name)
            bounds[name] = (float(lo), float(hi))
        elif section == "bin":
            for name in line.split():
                note(name)
                bins.add(name)
    obj = dict()
    for n, a in objective:
        obj[n] = obj.get(n, 0.0) + a
    for name in sorted(order, key=order.get):
        lo, hi = bounds.get(name, (0.0, 1.0) if name in bins else (0.0, math.inf))
        model.add_var(name, lo, hi, obj.get(name, 0.0), binary=name in bins)
    for label, terms, sense, rhs in rows:
        model.add_constraint([(model.var_index(n), a) for n, a in terms], "==" if sense == "=" else sense,
                             rhs, label)
    return model


def read_solution_file(text: str, model: MilpModel) -> Optional[np.ndarray]:
    """Parse ``name value`` lines; returns ``None`` for an ``infeasible`` marker.

    Unknown names and non-numeric lines are skipped; missing variables are 0.
    """
    values = np.zeros(model.n_vars)
    for raw in text.splitlines():
        toks = raw.split()
        if not toks:
            continue
        if toks[0].lower() in ("infeasible", "status:infeasible"):
            return None
        if len(toks) < 2:
            continue
        try:
            j = model.var_index(toks[0])
            values[j] = float(toks[1])
        except (KeyError, ValueError):
            continue
    return values


def solve_external(
    model: MilpModel,
    lazy_generators: Iterable[CutGenerator],
    command: str,
    *,
    max_iterations: int = 100,
    workdir: Optional[str] = None,
) -> SolveResult:
    """Solve through an external MILP binary, adding lazy cuts until none are violated.

    ``command`` is a shell-style template with ``{lp}`` and ``{sol}``
    placeholders. The solver must write ``name value`` lines to ``{sol}``
    (or a line ``infeasible``). Each round exports the model with every cut
    found so far and then re-separates the integral answer.
    """
    gens = list(lazy_generators)
    lp_names = {v.name: lp_name(v.name) for v in model.variables}
    renamed = model.copy()
    for v in renamed.variables:
        v.name = lp_names[v.name]
    renamed._by_name = {v.name: j for j, v in enumerate(renamed.variables)}
    cuts = []
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        lp_path, sol_path = Path(tmp) / "model.lp", Path(tmp) / "model.sol"
        for it in range(max_iterations):
            lp_path.write_text(export_lp_file(renamed, cuts))
            if sol_path.exists():
                sol_path.unlink()
            cmd = [part.format(lp=str(lp_path), sol=str(sol_path)) for part in shlex.split(command)]
            subprocess.run(cmd, check=True, capture_output=True)
            values = read_solution_file(sol_path.read_text(), renamed)
            if values is None:
                return SolveResult(None, math.inf, math.inf, "infeasible", lp_solves=it + 1,
                                   cuts_added=len(cuts), wall_time=time.perf_counter() - t0, cuts=cuts)
            b = renamed.binaries
            values[b] = np.round(values[b])
            ctx = CutContext(is_root=True, is_integer=True, node=0, depth=0)
            new = [c for g in gens for c in g(values, ctx) if c.violation(values) > 1e-6]
            if not new:
                obj = model.objective_value(values)
                return SolveResult(values, obj, obj, "optimal", lp_solves=it + 1, cuts_added=len(cuts),
                                   wall_time=time.perf_counter() - t0, cuts=cuts)
            cuts.extend(new)
    raise RuntimeError("external solve did not converge within the iteration limit")


__all__ = ["export_lp_file", "parse_lp_file", "read_solution_file", "solve_external", "lp_name",
           "relative_gap"]
