"""Branch-and-price tree: best-bound search with completion-window branching.

Branching narrows one job's allowed completion-time interval.  From a
fractional master solution, a_j / b_j are the minimal and maximal completion
times of job j over the supporting columns; the job maximizing b_j - a_j is
split at the midpoint, one child forbidding completions at or below it, the
other completions above it.  Children inherit the shared column pool; a
column is simply inactive at nodes whose windows it violates.

Node bounds are rounded up to integers (all schedule costs are integral),
the open list is ordered by bound (ties: deeper node, then creation order),
and incumbents come from the initial heuristic, from integral masters with
clean support, or from integral masters repaired by dropping duplicate job
occurrences and left-shifting.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Optional

from .bounds import FullSchedule, heuristic_ub, trivial_lb
from .instance import Instance, horizon
from .master import (
    ColumnPool,
    MasterColumn,
    RmpSolution,
    cg_solve,
    columns_from_schedule,
    initial_columns,
    solve_rmp,
)
from .timegraph import JobWindows, build_graph

__all__ = [
    "BpConfig",
    "BranchInfo",
    "SolveReport",
    "bp_solve",
    "branch_windows",
    "fractional_info",
    "repair_solution",
]

INT_TOL = 1e-6
SUPPORT_TOL = 1e-7


@dataclass
class BpConfig:
    pricing: str = "lc2l"
    heuristic: Optional[str] = "helem"
    eps: float = 1e-6
    time_limit: Optional[float] = None
    max_open_nodes: int = 200_000
    max_columns: int = 500_000
    keep_node_trace: bool = False
    keep_cg_trace: bool = False


@dataclass
class SolveReport:
    """Outcome of one solve: bounds, gaps and effort counters."""

    status: str  # optimal | time-limit | memory-guard
    ub: int
    lb: int
    lb_lp: float
    gap_pct: float
    gap_lp_pct: float
    nodes: int
    columns: int
    columns_exact: int
    wall_time: float
    time_ub: float = 0.0
    time_root: float = 0.0
    time_tree: float = 0.0
    schedule: Optional[FullSchedule] = None
    node_trace: list = field(default_factory=list)
    cg_trace: list = field(default_factory=list)

    @property
    def pct_cols_exact(self) -> float:
        return 100.0 * self.columns_exact / self.columns if self.columns else 0.0

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "ub": self.ub,
            "lb": self.lb,
            "lb_lp": self.lb_lp,
            "gap_pct": self.gap_pct,
            "gap_lp_pct": self.gap_lp_pct,
            "nodes": self.nodes,
            "columns": self.columns,
            "columns_exact": self.columns_exact,
            "pct_cols_exact": self.pct_cols_exact,
            "wall_time": self.wall_time,
            "time_ub": self.time_ub,
            "time_root": self.time_root,
            "time_tree": self.time_tree,
        }
        if self.schedule is not None:
            d["schedule"] = [list(machine) for machine in self.schedule.machines]
        return d


@dataclass
class BranchInfo:
    """Per-job completion statistics of a converged node master."""

    integral: bool
    support: list[tuple[int, float]]
    a: dict[int, int]
    b: dict[int, int]
    jbar: list[int]
    support_elementary: bool
    over_covered: bool
    coverage: dict[int, float]


def fractional_info(rmp: RmpSolution, pool: ColumnPool) -> BranchInfo:
    """a_j/b_j over supporting columns, the branchable set, and integrality flags."""
    instance = pool.instance
    support = rmp.support(pool)
    integral = all(abs(v - round(v)) <= INT_TOL for _, v in support)
    a: dict[int, int] = {}
    b: dict[int, int] = {}
    coverage: dict[int, float] = {j.id: 0.0 for j in instance.jobs}
    elementary = True
    for idx, v in support:
        col = pool.columns[idx]
        if not col.is_elementary():
            elementary = False
        for j, start in col.starts:
            done = start + instance.job(j).p
            a[j] = min(a.get(j, done), done)
            b[j] = max(b.get(j, done), done)
        for j in instance.jobs:
            coverage[j.id] += col.coverage[j.id - 1] * v
    over = any(val > 1.0 + INT_TOL for val in coverage.values())
    jbar = sorted(j for j in a if a[j] != b[j])
    return BranchInfo(integral, support, a, b, jbar, elementary, over, coverage)


def branch_windows(windows: JobWindows, info: BranchInfo) -> tuple[int, int, JobWindows, JobWindows]:
    """Split on the job maximizing b_j - a_j (ties: smaller id) at the midpoint.

    Returns (job, mid, high child windows, low child windows): the first child
    allows completions >= mid+1, the second completions <= mid.
    """
    jstar = max(info.jbar, key=lambda j: (info.b[j] - info.a[j], -j))
    mid = (info.a[jstar] + info.b[jstar]) // 2
    hi_child = windows.tightened(jstar, lo=mid + 1)
    lo_child = windows.tightened(jstar, hi=mid)
    return jstar, mid, hi_child, lo_child


def repair_solution(instance: Instance, machines: list[list[tuple[int, int]]]) -> FullSchedule:
    """Feasible schedule from integral support columns that may over-cover.

    Keeps each job's earliest-completion occurrence, drops the rest, and
    left-shifts every machine; the result never costs more than the columns.
    """
    chosen: dict[int, tuple[int, int]] = {}  # job -> (machine, position)
    for mi, machine in enumerate(machines):
        for pos, (j, start) in enumerate(machine):
            done = start + instance.job(j).p
            if j not in chosen:
                chosen[j] = (mi, pos)
            else:
                omi, opos = chosen[j]
                odone = machines[omi][opos][1] + instance.job(j).p
                if done < odone:
                    chosen[j] = (mi, pos)
    keep = {(mi, pos) for mi, pos in chosen.values()}
    orders = []
    for mi, machine in enumerate(machines):
        orders.append([j for pos, (j, _) in enumerate(machine) if (mi, pos) in keep])
    while len(orders) < instance.m:
        orders.append([])
    return FullSchedule.from_machines(instance, orders[: instance.m] if len(orders) > instance.m else orders)


def _support_machines(pool: ColumnPool, support: list[tuple[int, float]]) -> list[list[tuple[int, int]]]:
    machines = []
    for idx, v in support:
        col = pool.columns[idx]
        if col.artificial:
            continue
        for _ in range(int(round(v))):
            machines.append(list(col.starts))
    return machines


@dataclass
class _Node:
    nid: int
    parent: int
    depth: int
    windows: JobWindows
    lb: int


def _fixed_assignment_schedule(instance: Instance, windows: JobWindows) -> Optional[FullSchedule]:
    """When every window is a single completion tick, the node admits at most
    one schedule; build it if no more than m jobs ever run in parallel."""
    jobs = sorted(instance.jobs, key=lambda j: windows.lo[j.id - 1] - j.p)
    machines: list[list[tuple[int, int]]] = [[] for _ in range(instance.m)]
    free_at = [0] * instance.m
    for job in jobs:
        start = windows.lo[job.id - 1] - job.p
        if start < job.r:
            return None
        k = min(range(instance.m), key=lambda i: (free_at[i], i))
        if free_at[k] > start:
            return None
        machines[k].append((job.id, start))
        free_at[k] = start + job.p
    total = sum(
        instance.job(j).w * (start + instance.job(j).p) for mach in machines for j, start in mach
    )
    return FullSchedule(tuple(tuple(mach) for mach in machines), total)


def bp_solve(instance: Instance, config: Optional[BpConfig] = None) -> SolveReport:
    """Best-bound branch-and-price; see the module docstring for the rules."""
    cfg = config or BpConfig()
    t_start = time.monotonic()
    deadline = None if cfg.time_limit is None else t_start + cfg.time_limit

    # initial upper bound
    incumbent = heuristic_ub(instance)
    ub = incumbent.objective
    t_ub = time.monotonic() - t_start

    pool = ColumnPool(instance)
    for col in initial_columns(instance):
        pool.add(col)
    for col in columns_from_schedule(instance, incumbent):
        pool.add(col)

    floor_lb = trivial_lb(instance)
    T = horizon(instance)
    root_windows = JobWindows.root(instance, T)

    node_trace: list = []
    cg_trace: list = []
    nodes_done = 0
    next_id = 1
    status = "optimal"
    lb_lp: Optional[float] = None
    open_heap: list = []
    global_lb = floor_lb
    t_root_done = None

    def push(node: _Node):
        heappush(open_heap, (node.lb, -node.depth, node.nid, node))

    root = _Node(0, -1, 0, root_windows, floor_lb)
    push(root)

    while open_heap:
        lb_key, _, _, node = heappop(open_heap)
        if node.lb >= ub:
            # best-bound order: nothing left can improve
            open_heap.clear()
            break
        remaining = None if deadline is None else deadline - time.monotonic()
        if remaining is not None and remaining <= 0:
            status = "time-limit"
            push(node)
            break
        if len(open_heap) > cfg.max_open_nodes or len(pool) > cfg.max_columns:
            status = "memory-guard"
            push(node)
            break

        graph = build_graph(instance, node.windows)
        cg = cg_solve(
            instance,
            graph,
            pool,
            exact=cfg.pricing,
            heuristic=cfg.heuristic,
            eps=cfg.eps,
            time_limit=remaining,
            keep_trace=cfg.keep_cg_trace or node.nid == 0,
        )
        nodes_done += 1
        if cfg.keep_cg_trace:
            cg_trace.extend((node.nid,) + row for row in cg.trace)

        if node.nid == 0:
            if cg.status == "optimal":
                lb_lp = cg.z
            else:
                lb_lp = cg.best_lagrangean if cg.best_lagrangean is not None else float(floor_lb)
            t_root_done = time.monotonic()

        if cg.status == "partial":
            valid = cg.best_lagrangean if cg.best_lagrangean is not None else floor_lb
            node.lb = max(node.lb, math.ceil(valid - cfg.eps))
            status = "time-limit"
            push(node)
            break

        node.lb = max(node.lb, math.ceil(cg.z - cfg.eps))
        if cfg.keep_node_trace:
            row = {
                "node": node.nid, "parent": node.parent, "depth": node.depth,
                "lb": node.lb, "z": round(cg.z, 6), "pool": len(pool),
                "branch_job": "", "mid": "", "window_lo": "", "window_hi": "",
                "windows": (node.windows.lo, node.windows.hi),
            }
            node_trace.append(row)  # branch fields filled in below if we split
        if node.lb >= ub:
            continue

        info = fractional_info(cg.rmp, pool)
        if info.integral:
            machines = _support_machines(pool, info.support)
            if info.support_elementary and not info.over_covered:
                candidate = FullSchedule(
                    tuple(tuple(mach) for mach in machines)
                    + tuple(() for _ in range(instance.m - len(machines))),
                    int(round(sum(
                        instance.job(j).w * (s + instance.job(j).p)
                        for mach in machines
                        for j, s in mach
                    ))),
                )
            else:
                candidate = repair_solution(instance, machines)
            candidate.validate(instance)
            if candidate.objective < ub:
                ub = candidate.objective
                incumbent = candidate
            continue  # node's relaxation is integral: nothing below can beat it

        if not info.jbar:
            # degenerate fractional point: perturb costs to move off the vertex
            active = pool.active_indices(node.windows)
            costs = pool.dense(active)[1].copy()
            costs += 1e-7 * (1 + (active % 97))
            try:
                rmp2 = solve_rmp(pool, node.windows, cost_override=costs)
                info2 = fractional_info(rmp2, pool)
            except Exception:
                info2 = info
            if info2.integral or info2.jbar:
                info = info2
                if info.integral:
                    machines = _support_machines(pool, info.support)
                    candidate = repair_solution(instance, machines)
                    candidate.validate(instance)
                    if candidate.objective < ub:
                        ub = candidate.objective
                        incumbent = candidate
                    continue
            if not info.jbar:
                splittable = [
                    j.id
                    for j in instance.jobs
                    if node.windows.lo[j.id - 1] < node.windows.hi[j.id - 1] and j.id in info.a
                ]
                if splittable:
                    jpick = max(
                        splittable,
                        key=lambda j: (abs(info.coverage[j] - round(info.coverage[j])), -j),
                    )
                    c = info.a[jpick]
                    lo_j = node.windows.lo[jpick - 1]
                    if c > lo_j:
                        w_hi = node.windows.tightened(jpick, lo=c)
                        w_lo = node.windows.tightened(jpick, hi=c - 1)
                    else:
                        w_hi = node.windows.tightened(jpick, lo=c + 1)
                        w_lo = node.windows.tightened(jpick, hi=c)
                    for w in (w_hi, w_lo):
                        push(_Node(next_id, node.nid, node.depth + 1, w, node.lb))
                        next_id += 1
                    if cfg.keep_node_trace:
                        row["branch_job"] = jpick
                        row["mid"] = c
                        row["window_lo"] = node.windows.lo[jpick - 1]
                        row["window_hi"] = node.windows.hi[jpick - 1]
                    continue
                # every window is a single tick: the node admits one candidate
                fixed = _fixed_assignment_schedule(instance, node.windows)
                if fixed is not None:
                    fixed.validate(instance)
                    if fixed.objective < ub:
                        ub = fixed.objective
                        incumbent = fixed
                continue

        jstar, mid, w_hi, w_lo = branch_windows(node.windows, info)
        for w in (w_hi, w_lo):
            push(_Node(next_id, node.nid, node.depth + 1, w, node.lb))
            next_id += 1
        if cfg.keep_node_trace:
            row["branch_job"] = jstar
            row["mid"] = mid
            row["window_lo"] = node.windows.lo[jstar - 1]
            row["window_hi"] = node.windows.hi[jstar - 1]

    if open_heap and status == "optimal":
        status = "time-limit"  # guard: loop exited abnormally
    if open_heap:
        global_lb = min(n.lb for _, _, _, n in open_heap)
        global_lb = max(global_lb, floor_lb)
    else:
        global_lb = ub
    global_lb = min(global_lb, ub)

    now = time.monotonic()
    if t_root_done is None:
        t_root_done = now
    t_root = max(0.0, t_root_done - t_start - t_ub)
    t_tree = max(0.0, now - t_root_done)
    if lb_lp is None:
        lb_lp = float(floor_lb)
    wall = now - t_start
    gap = 100.0 * (ub - global_lb) / ub if ub > 0 else 0.0
    gap_lp = max(0.0, 100.0 * (ub - lb_lp) / ub) if ub > 0 else 0.0
    n_cols = sum(1 for c in pool.columns if c.tag in ("exact", "heur"))
    n_exact = sum(1 for c in pool.columns if c.tag == "exact")
    return SolveReport(
        status=status,
        ub=ub,
        lb=int(global_lb),
        lb_lp=float(lb_lp),
        gap_pct=gap,
        gap_lp_pct=gap_lp,
        nodes=nodes_done,
        columns=n_cols,
        columns_exact=n_exact,
        wall_time=wall,
        time_ub=t_ub,
        time_root=t_root,
        time_tree=t_tree,
        schedule=incumbent,
        node_trace=node_trace,
        cg_trace=cg_trace,
    )
