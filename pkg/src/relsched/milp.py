"""Time-indexed and arc-flow MILP models, with MPS export and re-import.

Models are built for export to external MILP solvers; nothing here branches
or cuts.  The writer emits free-format MPS with integer markers and explicit
bounds; the bundled reader parses that dialect back so round-trips can be
checked.  The objective's constant term rides on the RHS entry of the
objective row (negated), the usual MPS convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .instance import Instance, horizon
from .simplex import LinearProgram
from .timegraph import FlowGraph

__all__ = [
    "MilpConstraint",
    "MilpModel",
    "MilpVar",
    "build_af",
    "build_ti",
    "export_model",
    "read_mps",
]

OBJ_ROW = "COST"


@dataclass(frozen=True)
class MilpVar:
    name: str
    lb: float
    ub: float
    integer: bool
    obj: float


@dataclass(frozen=True)
class MilpConstraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # '<', '=' or '>'
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    """Minimization model: variables, linear constraints, objective constant."""

    name: str
    vars: tuple[MilpVar, ...]
    constraints: tuple[MilpConstraint, ...]
    obj_constant: float = 0.0

    def __post_init__(self):
        declared = {v.name: i for i, v in enumerate(self.vars)}
        if len(declared) != len(self.vars):
            raise ValueError("duplicate variable names")
        for c in self.constraints:
            for vname, _ in c.coeffs:
                if vname not in declared:
                    raise ValueError(f"constraint {c.name} references undeclared variable {vname}")
        # canonical coefficient order (variable declaration order, merged),
        # so models compare equal regardless of how rows were assembled
        fixed = []
        for c in self.constraints:
            acc: dict[str, float] = {}
            for vname, coef in c.coeffs:
                acc[vname] = acc.get(vname, 0.0) + coef
            coeffs = tuple(sorted(acc.items(), key=lambda vc: declared[vc[0]]))
            fixed.append(MilpConstraint(c.name, coeffs, c.sense, c.rhs))
        object.__setattr__(self, "constraints", tuple(fixed))

    def var_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.vars)}

    def objective_value(self, values: dict[str, float]) -> float:
        return self.obj_constant + sum(v.obj * values.get(v.name, 0.0) for v in self.vars)

    def check_assignment(self, values: dict[str, float], tol: float = 1e-9) -> list[str]:
        """Names of constraints/bounds the assignment violates (empty if none)."""
        bad = []
        for v in self.vars:
            x = values.get(v.name, 0.0)
            if x < v.lb - tol or x > v.ub + tol:
                bad.append(f"bound:{v.name}")
            elif v.integer and abs(x - round(x)) > tol:
                bad.append(f"integrality:{v.name}")
        for c in self.constraints:
            lhs = sum(coef * values.get(vn, 0.0) for vn, coef in c.coeffs)
            if c.sense == "<" and lhs > c.rhs + tol:
                bad.append(c.name)
            elif c.sense == ">" and lhs < c.rhs - tol:
                bad.append(c.name)
            elif c.sense == "=" and abs(lhs - c.rhs) > tol:
                bad.append(c.name)
        return bad

    def lp_relaxation(self) -> LinearProgram:
        """Dense LP relaxation (integrality dropped) for the embedded solver."""
        idx = self.var_index()
        nv = len(self.vars)
        nr = len(self.constraints)
        a = np.zeros((nr, nv))
        for i, c in enumerate(self.constraints):
            for vn, coef in c.coeffs:
                a[i, idx[vn]] += coef
        return LinearProgram(
            obj=np.array([v.obj for v in self.vars]),
            a=a,
            senses=tuple(c.sense for c in self.constraints),
            rhs=np.array([c.rhs for c in self.constraints]),
            lb=np.array([v.lb for v in self.vars]),
            ub=np.array([v.ub for v in self.vars]),
        )


def build_ti(instance: Instance) -> MilpModel:
    """Time-indexed model: binary x_{j,t} = job j starts at tick t.

    One cover row per job (>= 1), one capacity row per tick (<= m); the
    objective is sum_j w_j*p_j + sum w_j * t * x_{j,t}.
    """
    T = horizon(instance)
    variables = []
    exists: set[tuple[int, int]] = set()
    for j in instance.jobs:
        for t in range(j.r, T - j.p + 1):
            variables.append(MilpVar(f"x_{j.id}_{t}", 0.0, 1.0, True, float(j.w * t)))
            exists.add((j.id, t))
    rows = []
    for j in instance.jobs:
        coeffs = tuple((f"x_{j.id}_{t}", 1.0) for t in range(j.r, T - j.p + 1))
        rows.append(MilpConstraint(f"cover_{j.id}", coeffs, ">", 1.0))
    for t in range(T + 1):
        coeffs = []
        for j in instance.jobs:
            lo = max(j.r, t + 1 - j.p)
            hi = min(t, T + 1 - j.p)
            for s in range(lo, hi + 1):
                if (j.id, s) in exists:
                    coeffs.append((f"x_{j.id}_{s}", 1.0))
        rows.append(MilpConstraint(f"cap_{t}", tuple(coeffs), "<", float(instance.m)))
    constant = float(sum(j.w * j.p for j in instance.jobs))
    return MilpModel("TI", tuple(variables), tuple(rows), constant)


def build_af(instance: Instance, graph: FlowGraph) -> MilpModel:
    """Arc-flow model on ``graph``: binary unit flow per job arc, continuous
    [0, m] flow per loss arc, conservation at every node, cover row per job.
    """
    m = instance.m
    variables = []
    arc_names: dict[tuple[int, int, int], str] = {}
    for j in instance.jobs:
        for a in graph.arcs_by_job[j.id - 1]:
            name = f"x_{a.tail}_{a.head}_{j.id}"
            arc_names[(a.tail, a.head, j.id)] = name
            variables.append(MilpVar(name, 0.0, 1.0, True, float(j.w * a.tail)))
    for a in graph.loss_arcs:
        name = f"xl_{a.tail}_{a.head}"
        arc_names[(a.tail, a.head, 0)] = name
        variables.append(MilpVar(name, 0.0, float(m), False, 0.0))

    out_at: dict[int, list[tuple[str, float]]] = {q: [] for q in graph.nodes}
    in_at: dict[int, list[tuple[str, float]]] = {q: [] for q in graph.nodes}
    all_arcs = [a for arcs in graph.arcs_by_job for a in arcs] + list(graph.loss_arcs)
    for a in all_arcs:
        name = arc_names[(a.tail, a.head, a.job)]
        out_at[a.tail].append((name, 1.0))
        in_at[a.head].append((name, -1.0))

    rows = []
    for j in instance.jobs:
        coeffs = tuple(
            (arc_names[(a.tail, a.head, j.id)], 1.0) for a in graph.arcs_by_job[j.id - 1]
        )
        rows.append(MilpConstraint(f"cover_{j.id}", coeffs, ">", 1.0))
    for q in graph.nodes:
        rhs = 0.0
        if q == graph.r_min:
            rhs = float(m)
        elif q == graph.T:
            rhs = float(-m)
        rows.append(MilpConstraint(f"flow_{q}", tuple(out_at[q] + in_at[q]), "=", rhs))
    constant = float(sum(j.w * j.p for j in instance.jobs))
    return MilpModel("AF", tuple(variables), tuple(rows), constant)


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.12g}"


def export_model(model: MilpModel, path, fmt: str = "mps") -> None:
    """Write the model to ``path``; only the 'mps' format is supported."""
    if fmt != "mps":
        raise ValueError(f"unsupported export format {fmt!r} (supported: 'mps')")
    sense_row = {"<": "L", ">": "G", "=": "E"}
    out = [f"NAME {model.name}", "ROWS", f" N {OBJ_ROW}"]
    for c in model.constraints:
        out.append(f" {sense_row[c.sense]} {c.name}")
    out.append("COLUMNS")
    row_order = {c.name: i for i, c in enumerate(model.constraints)}
    entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.vars}
    for c in model.constraints:
        acc: dict[str, float] = {}
        for vn, coef in c.coeffs:
            acc[vn] = acc.get(vn, 0.0) + coef
        for vn, coef in acc.items():
            entries[vn].append((c.name, coef))
    in_int = False
    marker = 0
    for v in model.vars:
        if v.integer and not in_int:
            out.append(f" MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
            marker += 1
        elif not v.integer and in_int:
            out.append(f" MARKER{marker} 'MARKER' 'INTEND'")
            in_int = False
            marker += 1
        if v.obj != 0.0:
            out.append(f" {v.name} {OBJ_ROW} {_num(v.obj)}")
        elif not entries[v.name]:
            out.append(f" {v.name} {OBJ_ROW} 0")
        for rname, coef in sorted(entries[v.name], key=lambda rc: row_order[rc[0]]):
            out.append(f" {v.name} {rname} {_num(coef)}")
    if in_int:
        out.append(f" MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if model.obj_constant != 0.0:
        out.append(f" RHS {OBJ_ROW} {_num(-model.obj_constant)}")
    for c in model.constraints:
        if c.rhs != 0.0:
            out.append(f" RHS {c.name} {_num(c.rhs)}")
    out.append("BOUNDS")
    for v in model.vars:
        if v.lb == 0.0 and v.ub == 1.0 and v.integer:
            out.append(f" BV BND {v.name}")
            continue
        if v.lb != 0.0:
            key = "MI" if not np.isfinite(v.lb) else "LO"
            val = "" if key == "MI" else f" {_num(v.lb)}"
            out.append(f" {key} BND {v.name}{val}")
        if np.isfinite(v.ub):
            out.append(f" UP BND {v.name} {_num(v.ub)}")
        else:
            out.append(f" PL BND {v.name}")
    out.append("ENDATA")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(out) + "\n")


def read_mps(path) -> MilpModel:
    """Parse a file written by :func:`export_model` back into a model."""
    name = "MODEL"
    row_sense: dict[str, str] = {}
    row_list: list[str] = []
    col_order: list[str] = []
    col_entries: dict[str, dict[str, float]] = {}
    col_obj: dict[str, float] = {}
    col_int: dict[str, bool] = {}
    rhs: dict[str, float] = {}
    obj_rhs = 0.0
    bounds: dict[str, list[tuple[str, float]]] = {}
    section = None
    in_int = False
    sense_map = {"L": "<", "G": ">", "E": "="}

    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            head = line.split()
            if line[0] not in (" ", "\t"):
                section = head[0]
                if section == "NAME" and len(head) > 1:
                    name = head[1]
                continue
            if section == "ROWS":
                kind, rname = head[0], head[1]
                if kind == "N":
                    continue
                row_sense[rname] = sense_map[kind]
                row_list.append(rname)
            elif section == "COLUMNS":
                if len(head) >= 3 and head[1] == "'MARKER'":
                    in_int = head[2] == "'INTORG'"
                    continue
                cname = head[0]
                if cname not in col_entries:
                    col_entries[cname] = {}
                    col_obj[cname] = 0.0
                    col_int[cname] = in_int
                    col_order.append(cname)
                pairs = head[1:]
                for rname, val in zip(pairs[0::2], pairs[1::2]):
                    if rname == OBJ_ROW:
                        col_obj[cname] += float(val)
                    else:
                        col_entries[cname][rname] = col_entries[cname].get(rname, 0.0) + float(val)
            elif section == "RHS":
                pairs = head[1:]
                for rname, val in zip(pairs[0::2], pairs[1::2]):
                    if rname == OBJ_ROW:
                        obj_rhs = float(val)
                    else:
                        rhs[rname] = float(val)
            elif section == "BOUNDS":
                key, _, cname = head[0], head[1], head[2]
                val = float(head[3]) if len(head) > 3 else 0.0
                bounds.setdefault(cname, []).append((key, val))

    variables = []
    for cname in col_order:
        lb, ub = 0.0, np.inf
        integer = col_int[cname]
        for key, val in bounds.get(cname, []):
            if key == "BV":
                lb, ub, integer = 0.0, 1.0, True
            elif key == "LO":
                lb = val
            elif key == "UP":
                ub = val
            elif key == "MI":
                lb = -np.inf
            elif key == "PL":
                ub = np.inf
            elif key == "FX":
                lb = ub = val
        variables.append(MilpVar(cname, lb, ub, integer, col_obj[cname]))

    constraints = []
    for rname in row_list:
        coeffs = tuple(
            (cname, col_entries[cname][rname])
            for cname in col_order
            if rname in col_entries[cname]
        )
        constraints.append(MilpConstraint(rname, coeffs, row_sense[rname], rhs.get(rname, 0.0)))
    return MilpModel(name, tuple(variables), tuple(constraints), -obj_rhs)
