"""Restricted master problem and the column-generation driver.

The master is the LP  min sum c_s pi_s  s.t.  sum a_j^s pi_s >= 1 per job,
sum pi_s <= m, pi >= 0, solved by the embedded simplex.  Duals feed the
pricers; the driver adds one most-negative column per iteration, running the
chosen heuristic pricer until it first fails and the exact pricer from then
on.  A per-cover-row artificial column (machine-row coefficient 0, cost
above any feasible schedule sum) keeps the restricted LP feasible at every
search-tree node; artificials never enter incumbents.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .bounds import FullSchedule, erd_wspt_machines
from .instance import Instance, horizon
from .pricing import DualSolution, PricedColumn, heur_1cycle, heur_elem, price_lca, price_lcp, price_lc2l
from .simplex import LinearProgram, solve_lp
from .timegraph import FlowGraph, JobWindows

__all__ = [
    "CgResult",
    "ColumnPool",
    "MasterColumn",
    "MasterError",
    "RmpSolution",
    "SUPPORT_TOL",
    "cg_solve",
    "columns_from_schedule",
    "initial_columns",
    "lagrangean_lb",
]

SUPPORT_TOL = 1e-7

EXACT_PRICERS: dict[str, Callable] = {"lca": price_lca, "lcp": price_lcp, "lc2l": price_lc2l}
HEURISTIC_PRICERS: dict[str, Callable] = {"helem": heur_elem, "h1cycle": heur_1cycle}


class MasterError(RuntimeError):
    """Master LP failed (numerically or structurally)."""


@dataclass(frozen=True)
class MasterColumn:
    """One master variable: a machine schedule with cost and coverage counts."""

    starts: tuple[tuple[int, int], ...]
    cost: int
    coverage: tuple[int, ...]
    artificial: bool = False
    tag: str = ""

    def key(self) -> tuple:
        return (self.cost, self.coverage, self.starts)

    def is_elementary(self) -> bool:
        return all(c <= 1 for c in self.coverage)

    def feasible_for(self, instance: Instance, windows: JobWindows) -> bool:
        if self.artificial:
            return True
        for j, start in self.starts:
            if not windows.contains(j, start + instance.job(j).p):
                return False
        return True


class ColumnPool:
    """Deduplicated column store shared across a branch-and-price tree.

    The dense coefficient matrix has one cover row per job plus the machine
    row; artificial columns cover a single job and do not use the machine
    row, so the LP stays feasible under any window combination.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.columns: list[MasterColumn] = []
        self._keys: dict[tuple, int] = {}
        n = instance.n
        self._rows = n + 1
        self._cap = 64
        self._mat = np.zeros((self._rows, self._cap))
        self._cost = np.zeros(self._cap)
        big = 1 + sum(j.w for j in instance.jobs) * horizon(instance)
        for j in instance.jobs:
            cov = tuple(1 if k == j.id - 1 else 0 for k in range(n))
            self._append(MasterColumn((), big, cov, artificial=True, tag="artificial"))

    def __len__(self) -> int:
        return len(self.columns)

    def _append(self, col: MasterColumn) -> int:
        idx = len(self.columns)
        if idx == self._cap:
            self._cap *= 2
            mat = np.zeros((self._rows, self._cap))
            mat[:, :idx] = self._mat[:, :idx]
            self._mat = mat
            self._cost = np.resize(self._cost, self._cap)
        self._mat[:-1, idx] = col.coverage
        self._mat[-1, idx] = 0.0 if col.artificial else 1.0
        self._cost[idx] = col.cost
        self.columns.append(col)
        self._keys[col.key()] = idx
        return idx

    def contains(self, key: tuple) -> bool:
        return key in self._keys

    def add(self, col: MasterColumn) -> tuple[int, bool]:
        """Insert unless an identical (cost, coverage, starts) column exists."""
        existing = self._keys.get(col.key())
        if existing is not None:
            return existing, False
        return self._append(col), True

    def active_indices(self, windows: Optional[JobWindows]) -> np.ndarray:
        if windows is None:
            return np.arange(len(self.columns))
        keep = [
            i
            for i, col in enumerate(self.columns)
            if col.feasible_for(self.instance, windows)
        ]
        return np.asarray(keep, dtype=np.int64)

    def dense(self, active: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._mat[:, active], self._cost[active]


@dataclass
class RmpSolution:
    """Optimal primal/dual pair of the restricted master LP."""

    z: float
    pi: np.ndarray
    active: np.ndarray
    duals: DualSolution
    basis: Optional[tuple]
    status: str = "optimal"

    def support(self, pool: ColumnPool) -> list[tuple[int, float]]:
        """(pool index, pi) for columns with pi above the support threshold."""
        return [
            (int(self.active[k]), float(v))
            for k, v in enumerate(self.pi)
            if v > SUPPORT_TOL
        ]


def columns_from_schedule(instance: Instance, schedule: FullSchedule, tag: str = "ub") -> list[MasterColumn]:
    """Master columns for each nonempty machine of a full schedule."""
    cols = []
    for machine in schedule.machines:
        if not machine:
            continue
        coverage = [0] * instance.n
        cost = 0
        for j, start in machine:
            coverage[j - 1] += 1
            cost += instance.job(j).w * (start + instance.job(j).p)
        cols.append(MasterColumn(tuple(machine), cost, tuple(coverage), tag=tag))
    return cols


def initial_columns(instance: Instance) -> list[MasterColumn]:
    """Disjoint machine schedules from the ERD+WSPT construction, one per
    nonempty machine, jointly covering all jobs."""
    machines = erd_wspt_machines(instance)
    schedule = FullSchedule.from_machines(instance, machines)
    return columns_from_schedule(instance, schedule, tag="init")


def solve_rmp(
    pool: ColumnPool,
    windows: Optional[JobWindows] = None,
    *,
    active: Optional[np.ndarray] = None,
    basis: Optional[tuple] = None,
    cost_override: Optional[np.ndarray] = None,
) -> RmpSolution:
    """Solve the restricted master over the window-active columns.

    ``active`` may carry a precomputed active-column index array (the CG
    driver extends it incrementally instead of rescanning the pool).  Duals
    come back with the correct signs (lambda_j >= 0, lambda_0 <= 0);
    violations beyond tolerance raise :class:`MasterError` with the basis
    condition number for diagnosis.
    """
    instance = pool.instance
    n = instance.n
    if active is None:
        active = pool.active_indices(windows)
    a, c = pool.dense(active)
    if cost_override is not None:
        c = cost_override
    k = len(active)
    # The covering master is massively degenerate; a tiny graded bump of the
    # cover rows makes vertices generic so the simplex does not stall.  The
    # reported objective is the dual value against the TRUE right-hand side,
    # which at optimality is exact (duals stay feasible regardless of rhs).
    bump = 1e-9 * np.arange(1, n + 1)
    lp = LinearProgram(
        obj=c,
        a=a,
        senses=(">",) * n + ("<",),
        rhs=np.concatenate([1.0 + bump, [float(instance.m)]]),
        lb=np.zeros(k),
        ub=np.full(k, np.inf),
    )
    lp_basis = None
    if basis is not None:
        # slack indices follow the structural block, which may have grown
        b_idx, b_vstat, b_k = basis
        if b_k <= k:
            nr = n + 1
            mapped = np.where(b_idx >= b_k, b_idx - b_k + k, b_idx)
            vstat = np.zeros(k + nr, dtype=np.int8)
            vstat[:b_k] = b_vstat[:b_k]
            vstat[k:] = b_vstat[b_k:]
            lp_basis = (mapped, vstat)
    res = solve_lp(lp, basis=lp_basis)
    if res.status != "optimal":
        cond = float(np.linalg.cond(a @ a.T)) if a.size else float("nan")
        raise MasterError(f"master LP ended with status {res.status} (gram condition {cond:.3e})")
    y = res.duals
    lam = y[:n]
    lam0 = float(y[n])
    if lam.min(initial=0.0) < -1e-6 or lam0 > 1e-6:
        cond = float(np.linalg.cond(a @ a.T))
        raise MasterError(f"dual signs violated (gram condition {cond:.3e})")
    duals = DualSolution(tuple(float(v) for v in np.maximum(lam, 0.0)), min(lam0, 0.0))
    out_basis = None if res.basis is None else (res.basis[0], res.basis[1], k)
    z = sum(duals.lam) + instance.m * duals.lam0  # dual value on the true rhs
    return RmpSolution(float(z), res.x, active, duals, out_basis)


def lagrangean_lb(z_rmp: float, most_negative_rc: float, m: int) -> float:
    """Valid master lower bound from an exact pricing round: z + m*min(0, rc)."""
    return z_rmp + m * min(0.0, most_negative_rc)


@dataclass
class CgResult:
    z: float
    duals: DualSolution
    status: str  # 'optimal' | 'partial'
    iterations: int
    added_exact: int
    added_heur: int
    most_neg_rc: Optional[float]
    best_lagrangean: Optional[float]
    rmp: RmpSolution
    trace: list = field(default_factory=list)


def cg_solve(
    instance: Instance,
    graph: FlowGraph,
    pool: ColumnPool,
    *,
    exact: Union[str, Callable] = "lc2l",
    heuristic: Union[str, Callable, None] = "helem",
    eps: float = 1e-6,
    time_limit: Optional[float] = None,
    clock: Callable[[], float] = time.monotonic,
    keep_trace: bool = False,
) -> CgResult:
    """Column generation at one node: heuristic-first, then exact to proof.

    Adds the single most negative column per iteration.  The heuristic
    pricer runs until it first fails to produce a new negative column, after
    which the exact pricer takes over for good.  Stops when the exact pricer
    proves no column prices below -eps, or the time budget runs out
    (status 'partial', last bounds retained).
    """
    exact_fn = EXACT_PRICERS[exact] if isinstance(exact, str) else exact
    heur_fn = HEURISTIC_PRICERS[heuristic] if isinstance(heuristic, str) else heuristic
    windows = graph.windows
    started = clock()
    heur_on = heur_fn is not None
    basis = None
    last_z = np.inf
    added_exact = added_heur = iterations = 0
    best_lag: Optional[float] = None
    most_neg: Optional[float] = None
    trace: list = []
    active = list(pool.active_indices(windows))

    while True:
        rmp = solve_rmp(pool, windows, active=np.asarray(active, dtype=np.int64), basis=basis)
        basis = rmp.basis
        # warm-started re-solves wobble by O(tol * cost scale); only a real
        # increase is an error
        if rmp.z > last_z + 1e-6 + 1e-7 * abs(last_z):
            raise MasterError(f"master objective increased: {last_z} -> {rmp.z}")
        last_z = rmp.z
        iterations += 1

        if time_limit is not None and clock() - started > time_limit:
            return CgResult(
                rmp.z, rmp.duals, "partial", iterations, added_exact, added_heur,
                most_neg, best_lag, rmp, trace,
            )

        col: Optional[PricedColumn] = None
        source = ""
        if heur_on:
            hcol = heur_fn(graph, rmp.duals, eps=eps)
            if hcol is None or pool.contains((hcol.cost, hcol.coverage, hcol.starts)):
                heur_on = False
            else:
                col, source = hcol, "heur"
        if col is None:
            ecol = exact_fn(graph, rmp.duals)
            most_neg = ecol.reduced_cost
            lag = lagrangean_lb(rmp.z, most_neg, instance.m)
            best_lag = lag if best_lag is None else max(best_lag, lag)
            if keep_trace:
                trace.append((iterations, rmp.z, most_neg, "exact", len(pool)))
            if most_neg >= -eps:
                return CgResult(
                    rmp.z, rmp.duals, "optimal", iterations, added_exact, added_heur,
                    most_neg, best_lag, rmp, trace,
                )
            col, source = ecol, "exact"

        if col.reduced_cost >= -eps:
            raise MasterError("pricer returned a non-improving column to add")
        mcol = MasterColumn(col.starts, col.cost, col.coverage, tag=source)
        idx, added = pool.add(mcol)
        if not added:
            raise MasterError("exact pricer regenerated a pooled column; duals inconsistent")
        active.append(idx)
        if source == "exact":
            added_exact += 1
        else:
            added_heur += 1
            if keep_trace:
                trace.append((iterations, rmp.z, col.reduced_cost, "heur", len(pool)))
