"""CPLEX-LP rendering of a MilpModel and a reader for the same dialect."""

from __future__ import annotations

import re

from ..milp import MilpModel

_TERMS_PER_LINE = 8


def _terms(model: MilpModel, items) -> list[str]:
    out = []
    for i, (idx, c) in enumerate(items):
        name = model.variables[idx].name
        sign = "-" if c < 0 else ("+" if i else "")
        mag = abs(c)
        body = name if mag == 1 else f"{mag} {name}"
        out.append(f"{sign} {body}".strip())
    return out


def _wrap(prefix: str, parts: list[str], suffix: str = "") -> str:
    lines = []
    for i in range(0, max(len(parts), 1), _TERMS_PER_LINE):
        chunk = " ".join(parts[i:i + _TERMS_PER_LINE])
        lines.append(("  " if i else prefix) + chunk)
    lines[-1] += suffix
    return "\n".join(lines)


def export_lp(model: MilpModel) -> str:
    """Deterministic LP text: objective, rows, bounds, generals, binaries."""
    out = ["\\ tsnsched model", "Maximize"]
    obj = sorted(model.objective.items())
    out.append(_wrap(" obj: ", _terms(model, obj)) if obj else " obj:")
    out.append("Subject To")
    for c in model.constraints:
        terms = _terms(model, c.terms) if c.terms else [f"0 {model.variables[0].name}"]
        sense = {"<=": "<=", ">=": ">=", "=": "="}[c.sense]
        out.append(_wrap(f" {c.name}: ", terms, f" {sense} {c.rhs}"))
    bounds = [v for v in model.variables if v.kind != "binary"]
    if bounds:
        out.append("Bounds")
        for v in bounds:
            if v.ub is None:
                out.append(f" {v.name} >= {v.lb}")
            else:
                out.append(f" {v.lb} <= {v.name} <= {v.ub}")
    generals = [v.name for v in model.variables if v.kind == "integer"]
    if generals:
        out.append("Generals")
        out.extend(f" {n}" for n in generals)
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        out.append("Binaries")
        out.extend(f" {n}" for n in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "maximize": "obj",
    "subject to": "rows",
    "bounds": "bounds",
    "generals": "generals",
    "binaries": "binaries",
    "end": "end",
}
_TERM = re.compile(r"([+-]?)\s*(\d+)?\s*([A-Za-z_][^\s:+\-<>=]*)")


def _parse_expr(text: str) -> list[tuple[str, int]]:
    out = []
    for sign, coef, name in _TERM.findall(text):
        c = int(coef) if coef else 1
        out.append((name, -c if sign == "-" else c))
    return out


def parse_lp(text: str) -> MilpModel:
    """Read LP text produced by :func:`export_lp` back into a model."""
    section = None
    chunks: dict[str, list[str]] = {k: [] for k in ("obj", "rows", "bounds", "generals", "binaries")}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        key = _SECTIONS.get(line.lower())
        if key:
            section = key
            continue
        if section is None or section == "end":
            raise ValueError(f"text outside a section: {line!r}")
        if raw.startswith("  ") and chunks[section] and section in ("obj", "rows"):
            chunks[section][-1] += " " + line
        else:
            chunks[section].append(line)

    kinds: dict[str, str] = {}
    bounds: dict[str, tuple[int, int | None]] = {}
    order: list[str] = []

    def see(name):
        if name not in kinds:
            kinds[name] = "continuous"
            order.append(name)

    obj_terms = []
    for line in chunks["obj"]:
        body = line.split(":", 1)[1] if ":" in line else line
        obj_terms += _parse_expr(body)
    rows = []
    for line in chunks["rows"]:
        name, body = line.split(":", 1)
        m = re.match(r"(.*?)(<=|>=|=)\s*(-?\d+)\s*$", body)
        if not m:
            raise ValueError(f"cannot parse row {line!r}")
        rows.append((name.strip(), _parse_expr(m.group(1)), m.group(2), int(m.group(3))))
    for name, _ in obj_terms:
        see(name)
    for _, terms, _, _ in rows:
        for name, _ in terms:
            see(name)
    for line in chunks["bounds"]:
        m = re.match(r"(-?\d+)\s*<=\s*(\S+)\s*<=\s*(-?\d+)$", line)
        if m:
            see(m.group(2))
            bounds[m.group(2)] = (int(m.group(1)), int(m.group(3)))
            continue
        m = re.match(r"(\S+)\s*>=\s*(-?\d+)$", line)
        if not m:
            raise ValueError(f"cannot parse bound {line!r}")
        see(m.group(1))
        bounds[m.group(1)] = (int(m.group(2)), None)
    for line in chunks["generals"]:
        see(line)
        kinds[line] = "integer"
    for line in chunks["binaries"]:
        see(line)
        kinds[line] = "binary"

    model = MilpModel()
    for name in order:
        lb, ub = bounds.get(name, (0, None))
        kind = kinds[name]
        if kind == "continuous":
            raise ValueError(f"variable {name} is neither integer nor binary")
        model.add_var(name, kind, lb, ub)
    for name, c in obj_terms:
        idx = model.index[name]
        model.objective[idx] = model.objective.get(idx, 0) + c
    for name, terms, sense, rhs in rows:
        family = name.split("(", 1)[0]
        model.add_constraint(name, family, [(model.index[v], c) for v, c in terms], sense, rhs)
    return model
