"""Pricing: minimum reduced-cost machine schedules on the flow graph.

Every pricer runs a label-correcting pass over the graph in topological
(time) order.  A label is a (val, last) pair: accumulated cost plus the job
of the final arc; predecessor fields are carried along so the optimal path
can be read back without re-scanning.  Arc costs are w_j*(q+p_j) - lambda_j
for job arcs and 0 for loss arcs; a path's cost minus lambda_0 is exactly
the reduced cost of the machine schedule it spells.

Pricers:

* ``price_lca``   -- min over all paths (jobs may repeat freely).
* ``price_lcp``   -- min over paths without immediate job repeats, states
                     indexed by (node, last job); the O(n^2 T) reference.
* ``price_lc2l``  -- same optimum as ``price_lcp`` in O(nT) by keeping the
                     two best labels with distinct last jobs per node.
* ``heur_elem``   -- greedy single-label search returning an elementary
                     schedule (each job at most once), or None.
* ``heur_1cycle`` -- greedy single-label search avoiding immediate repeats.

``reduce_arcs`` prunes arcs whose reduced cost can never help (the per-job
worth limit y_j = lambda_j/w_j - p_j and the lambda_j <= 0 rule) and, for the
free-repeat pricer only, drops jobs dominated by a cheaper compatible job.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .timegraph import Arc, FlowGraph

__all__ = [
    "ArcReduction",
    "DualSolution",
    "PricedColumn",
    "heur_1cycle",
    "heur_elem",
    "price_lca",
    "price_lcp",
    "price_lc2l",
    "reduce_arcs",
]

_VALUE_CHECK_TOL = 1e-7


@dataclass(frozen=True)
class DualSolution:
    """Master duals: lam[j-1] for the cover row of job j, lam0 for the machine row."""

    lam: tuple[float, ...]
    lam0: float

    def __post_init__(self):
        if any(v < -1e-7 for v in self.lam):
            raise ValueError("job duals must be nonnegative")
        if self.lam0 > 1e-7:
            raise ValueError("machine dual must be nonpositive")
        object.__setattr__(self, "lam", tuple(max(0.0, v) for v in self.lam))
        object.__setattr__(self, "lam0", min(0.0, self.lam0))


@dataclass(frozen=True)
class PricedColumn:
    """A machine schedule produced by a pricer.

    ``starts`` is the ordered (job, start tick) sequence, ``cost`` the true
    schedule cost sum w_j*(start+p_j), and ``reduced_cost`` the pricer's
    value cost - lam0 - sum coverage_j * lam_j.
    """

    starts: tuple[tuple[int, int], ...]
    cost: int
    reduced_cost: float
    coverage: tuple[int, ...]

    @property
    def jobs(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.starts)

    def is_elementary(self) -> bool:
        return all(c <= 1 for c in self.coverage)


@dataclass
class ArcReduction:
    """Filtered arc view: ``keep`` flags the kernel's incoming-arc table."""

    graph: FlowGraph = field(repr=False)
    keep: np.ndarray = field(repr=False)
    dropped_jobs: tuple[int, ...]
    y: tuple[float, ...]

    def kept_arcs(self, job_id: int) -> list[Arc]:
        kern = self.graph.kernel
        out = []
        for k in np.nonzero(self.keep & (kern.in_job == job_id))[0]:
            tail = int(kern.in_tail_time[k])
            out.append(Arc(tail, tail + int(kern.job_p[job_id]), job_id))
        out.sort(key=lambda a: a.tail)
        return out


def _dominates(i, j, lam, p, r, w, T, y) -> bool:
    """True when every arc of j can be replaced by an arc of i at no extra cost."""
    if lam[i] <= 0.0 or lam[j] <= 0.0:
        return False
    if r[i] > r[j] or p[i] > p[j]:
        return False
    if w[i] * (r[j] + p[i]) - lam[i] > w[j] * (r[j] + p[j]) - lam[j]:
        return False
    qcap = min(float(T - p[j]), y[j])
    return w[i] * (qcap + p[i]) - lam[i] <= w[j] * (qcap + p[j]) - lam[j]


def reduce_arcs(graph: FlowGraph, duals: DualSolution, *, dominance: bool = True) -> ArcReduction:
    """Remove job arcs that cannot appear in a negative reduced-cost schedule.

    Kept arcs are exactly those with negative cost: tail < y_j with
    lambda_j > 0.  With ``dominance`` (used by the free-repeat pricer only),
    a job dominated by another is dropped entirely; mutually-dominating twins
    keep the smaller id so at least one survives.
    """
    kern = graph.kernel
    n = kern.n_jobs
    lam = np.zeros(n + 1)
    lam[1:] = duals.lam
    w = kern.job_w.astype(np.float64)
    p = kern.job_p
    r = kern.job_r
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(w[: n + 1] > 0, lam / np.maximum(w, 1.0) - p, -np.inf)
    keep = (lam[kern.in_job] > 0.0) & (kern.in_tail_time < y[kern.in_job])

    dropped = [j for j in range(1, n + 1) if duals.lam[j - 1] <= 0.0]
    if dominance:
        for j in range(1, n + 1):
            if lam[j] <= 0.0:
                continue
            for i in range(1, n + 1):
                if i == j or not _dominates(i, j, lam, p, r, w, graph.T, y):
                    continue
                if i < j or not _dominates(j, i, lam, p, r, w, graph.T, y):
                    dropped.append(j)
                    break
        dom_mask = np.zeros(n + 1, dtype=bool)
        for j in dropped:
            dom_mask[j] = True
        keep &= ~dom_mask[kern.in_job]
    return ArcReduction(graph, keep, tuple(sorted(set(dropped))), tuple(float(v) for v in y[1:]))


def _arc_costs(kern, duals: DualSolution, keep: Optional[np.ndarray]) -> np.ndarray:
    lam = np.zeros(kern.n_jobs + 1)
    lam[1:] = duals.lam
    cost = kern.in_base - lam[kern.in_job]
    if keep is not None:
        cost = np.where(keep, cost, np.inf)
    return cost


INF = np.inf


@njit(cache=True)
def _lca_kernel(nn, src, in_ptr, in_tail, cost, seg_lo, seg_hi):
    F = np.full(nn, INF)
    pn = np.full(nn, -1, dtype=np.int64)
    pk = np.full(nn, -1, dtype=np.int64)
    F[src] = 0.0
    for u in range(nn):
        best = F[u]
        bn = pn[u]
        bk = pk[u]
        for q in range(seg_lo[u], seg_hi[u]):  # loss arcs into u
            if F[q] < best:
                best = F[q]
                bn = q
                bk = -1
        for k in range(in_ptr[u], in_ptr[u + 1]):  # job arcs into u
            c = cost[k]
            if c == INF:
                continue
            t = in_tail[k]
            if F[t] == INF:
                continue
            v = F[t] + c
            if v <= best:
                best = v
                bn = t
                bk = k
        F[u] = best
        pn[u] = bn
        pk[u] = bk
    return F, pn, pk


@njit(cache=True)
def _lc2l_kernel(nn, src, in_ptr, in_tail, in_job, cost, seg_lo, seg_hi):
    f1v = np.full(nn, INF)
    f2v = np.full(nn, INF)
    f1l = np.zeros(nn, dtype=np.int64)
    f2l = np.zeros(nn, dtype=np.int64)
    f1pn = np.full(nn, -1, dtype=np.int64)
    f2pn = np.full(nn, -1, dtype=np.int64)
    f1ps = np.zeros(nn, dtype=np.int64)
    f2ps = np.zeros(nn, dtype=np.int64)
    f1pk = np.full(nn, -1, dtype=np.int64)
    f2pk = np.full(nn, -1, dtype=np.int64)
    f1v[src] = 0.0
    for u in range(nn):
        b1v = f1v[u]; b1l = f1l[u]; b1n = f1pn[u]; b1s = f1ps[u]; b1k = f1pk[u]
        b2v = f2v[u]; b2l = f2l[u]; b2n = f2pn[u]; b2s = f2ps[u]; b2k = f2pk[u]
        for q in range(seg_lo[u], seg_hi[u]):
            for s in range(2):
                if s == 0:
                    v = f1v[q]; l = f1l[q]
                else:
                    v = f2v[q]; l = f2l[q]
                if v == INF:
                    continue
                if v < b1v:
                    if l != b1l:
                        b2v = b1v; b2l = b1l; b2n = b1n; b2s = b1s; b2k = b1k
                    b1v = v; b1l = l; b1n = q; b1s = s + 1; b1k = -1
                elif v < b2v and l != b1l:
                    b2v = v; b2l = l; b2n = q; b2s = s + 1; b2k = -1
        for k in range(in_ptr[u], in_ptr[u + 1]):
            c = cost[k]
            if c == INF:
                continue
            t = in_tail[k]
            j = in_job[k]
            if f1l[t] == j:
                base = f2v[t]
                slot = 2
            else:
                base = f1v[t]
                slot = 1
            if base == INF:
                continue
            v = base + c
            if v < b1v:
                if j != b1l:
                    b2v = b1v; b2l = b1l; b2n = b1n; b2s = b1s; b2k = b1k
                b1v = v; b1l = j; b1n = t; b1s = slot; b1k = k
            elif v < b2v and j != b1l:
                b2v = v; b2l = j; b2n = t; b2s = slot; b2k = k
        f1v[u] = b1v; f1l[u] = b1l; f1pn[u] = b1n; f1ps[u] = b1s; f1pk[u] = b1k
        f2v[u] = b2v; f2l[u] = b2l; f2pn[u] = b2n; f2ps[u] = b2s; f2pk[u] = b2k
    return f1v, f1l, f1pn, f1ps, f1pk, f2v, f2l, f2pn, f2ps, f2pk


@njit(cache=True)
def _lcp_kernel(nn, src, n, in_ptr, in_tail, in_job, cost, seg_lo, seg_hi):
    F = np.full((nn, n + 1), INF)
    pn = np.full((nn, n + 1), -1, dtype=np.int64)
    pl = np.full((nn, n + 1), -1, dtype=np.int64)
    pk = np.full((nn, n + 1), -1, dtype=np.int64)
    F[src, 0] = 0.0
    for u in range(nn):
        for q in range(seg_lo[u], seg_hi[u]):
            for l in range(n + 1):
                if F[q, l] < F[u, l]:
                    F[u, l] = F[q, l]
                    pn[u, l] = q
                    pl[u, l] = l
                    pk[u, l] = -1
        for k in range(in_ptr[u], in_ptr[u + 1]):
            c = cost[k]
            if c == INF:
                continue
            t = in_tail[k]
            j = in_job[k]
            best = INF
            bl = -1
            for l in range(n + 1):
                if l != j and F[t, l] < best:
                    best = F[t, l]
                    bl = l
            if best == INF:
                continue
            v = best + c
            if v < F[u, j]:
                F[u, j] = v
                pn[u, j] = t
                pl[u, j] = bl
                pk[u, j] = k
    return F, pn, pl, pk


@njit(cache=True)
def _helem_kernel(nn, src, lanes, in_ptr, in_tail, in_job, cost, seg_lo, seg_hi):
    F = np.full(nn, INF)
    used = np.zeros((nn, lanes), dtype=np.uint64)
    pn = np.full(nn, -1, dtype=np.int64)
    pk = np.full(nn, -1, dtype=np.int64)
    F[src] = 0.0
    for u in range(nn):
        best = F[u]
        bn = pn[u]
        bk = pk[u]
        for q in range(seg_lo[u], seg_hi[u]):
            if F[q] < best:
                best = F[q]
                bn = q
                bk = -1
        for k in range(in_ptr[u], in_ptr[u + 1]):
            c = cost[k]
            if c == INF:
                continue
            t = in_tail[k]
            if F[t] == INF:
                continue
            j = in_job[k]
            lane = (j - 1) >> 6
            bit = np.uint64(1) << np.uint64((j - 1) & 63)
            if used[t, lane] & bit:
                continue
            v = F[t] + c
            if v <= best:
                best = v
                bn = t
                bk = k
        if bn >= 0:
            F[u] = best
            for lane in range(lanes):
                used[u, lane] = used[bn, lane]
            if bk >= 0:
                j = in_job[bk]
                used[u, (j - 1) >> 6] |= np.uint64(1) << np.uint64((j - 1) & 63)
            pn[u] = bn
            pk[u] = bk
    return F, used, pn, pk


@njit(cache=True)
def _h1c_kernel(nn, src, in_ptr, in_tail, in_job, cost, seg_lo, seg_hi):
    F = np.full(nn, INF)
    last = np.zeros(nn, dtype=np.int64)
    pn = np.full(nn, -1, dtype=np.int64)
    pk = np.full(nn, -1, dtype=np.int64)
    F[src] = 0.0
    for u in range(nn):
        best = F[u]
        bn = pn[u]
        bk = pk[u]
        bl = last[u]
        for q in range(seg_lo[u], seg_hi[u]):
            if F[q] < best:
                best = F[q]
                bn = q
                bk = -1
                bl = last[q]
        for k in range(in_ptr[u], in_ptr[u + 1]):
            c = cost[k]
            if c == INF:
                continue
            t = in_tail[k]
            if F[t] == INF:
                continue
            j = in_job[k]
            if last[t] == j:
                continue
            v = F[t] + c
            if v <= best:
                best = v
                bn = t
                bk = k
                bl = j
        if bn >= 0:
            F[u] = best
            last[u] = bl
            pn[u] = bn
            pk[u] = bk
    return F, last, pn, pk


def _make_column(graph: FlowGraph, starts: list[tuple[int, int]], duals: DualSolution, value: float) -> PricedColumn:
    inst = graph.instance
    coverage = [0] * inst.n
    cost = 0
    for j, start in starts:
        coverage[j - 1] += 1
        cost += inst.job(j).w * (start + inst.job(j).p)
    rc = cost - duals.lam0 - sum(c * l for c, l in zip(coverage, duals.lam))
    if abs(rc - value) > _VALUE_CHECK_TOL * max(1.0, abs(value)):
        raise AssertionError(f"pricer value {value} disagrees with recomputed reduced cost {rc}")
    return PricedColumn(tuple(starts), cost, value, tuple(coverage))


def _walk_single(kern, pn, pk) -> list[tuple[int, int]]:
    starts = []
    u = kern.sink
    while u != kern.src:
        k = pk[u]
        if k >= 0:
            starts.append((int(kern.in_job[k]), int(kern.in_tail_time[k])))
        u = int(pn[u])
        if u < 0:
            raise AssertionError("broken predecessor chain")
    starts.reverse()
    return starts


def _exact_keep(graph: FlowGraph, duals: DualSolution, reduce: bool, dominance: bool) -> Optional[np.ndarray]:
    """Reduction mask for an exact pricer, only where its proof applies.

    The worth-limit and lambda rules replace arcs by idle and left-justify
    the rest, which can sink completions below a raised window floor, so they
    need every lower bound at its root value; the dominance substitution can
    additionally overshoot a tightened ceiling, so it needs the full root
    windows.
    """
    if not (reduce and graph.lo_at_root):
        return None
    return reduce_arcs(graph, duals, dominance=dominance and graph.hi_at_root).keep


def price_lca(graph: FlowGraph, duals: DualSolution, *, reduce: bool = True) -> PricedColumn:
    """Minimum reduced cost over all source-to-sink paths (repeats allowed)."""
    kern = graph.kernel
    keep = _exact_keep(graph, duals, reduce, dominance=True)
    cost = _arc_costs(kern, duals, keep)
    F, pn, pk = _lca_kernel(kern.nn, kern.src, kern.in_ptr, kern.in_tail, cost, kern.seg_lo, kern.seg_hi)
    value = float(F[kern.sink]) - duals.lam0
    return _make_column(graph, _walk_single(kern, pn, pk), duals, value)


def price_lcp(graph: FlowGraph, duals: DualSolution, *, reduce: bool = True) -> PricedColumn:
    """Minimum reduced cost over paths without 1-cycles, by (node, last job) states."""
    kern = graph.kernel
    keep = _exact_keep(graph, duals, reduce, dominance=False)
    cost = _arc_costs(kern, duals, keep)
    F, pn, pl, pk = _lcp_kernel(
        kern.nn, kern.src, kern.n_jobs, kern.in_ptr, kern.in_tail, kern.in_job, cost, kern.seg_lo, kern.seg_hi
    )
    l_star = int(np.argmin(F[kern.sink]))
    value = float(F[kern.sink, l_star]) - duals.lam0
    starts = []
    u, l = kern.sink, l_star
    while u != kern.src:
        k = pk[u, l]
        if k >= 0:
            starts.append((int(kern.in_job[k]), int(kern.in_tail_time[k])))
        u, l = int(pn[u, l]), int(pl[u, l])
        if u < 0:
            raise AssertionError("broken predecessor chain")
    starts.reverse()
    return _make_column(graph, starts, duals, value)


def price_lc2l(graph: FlowGraph, duals: DualSolution, *, reduce: bool = True) -> PricedColumn:
    """Same optimum as ``price_lcp`` with two labels per node.

    Expanding job j from a node uses the best label there unless its last job
    is j, in which case the second label steps in.  Trailing idle after a job
    (expansion to the next release) is realized by propagating both labels
    along the node's loss arc once the node is final.
    """
    kern = graph.kernel
    keep = _exact_keep(graph, duals, reduce, dominance=False)
    cost = _arc_costs(kern, duals, keep)
    f1v, f1l, f1pn, f1ps, f1pk, f2v, f2l, f2pn, f2ps, f2pk = _lc2l_kernel(
        kern.nn, kern.src, kern.in_ptr, kern.in_tail, kern.in_job, cost, kern.seg_lo, kern.seg_hi
    )
    value = float(f1v[kern.sink]) - duals.lam0
    starts = []
    u, s = kern.sink, 1
    while u != kern.src:
        if s == 1:
            k, nxt_u, nxt_s = int(f1pk[u]), int(f1pn[u]), int(f1ps[u])
        else:
            k, nxt_u, nxt_s = int(f2pk[u]), int(f2pn[u]), int(f2ps[u])
        if k >= 0:
            starts.append((int(kern.in_job[k]), int(kern.in_tail_time[k])))
        u, s = nxt_u, nxt_s
        if u < 0:
            raise AssertionError("broken predecessor chain")
    starts.reverse()
    return _make_column(graph, starts, duals, value)


def heur_elem(graph: FlowGraph, duals: DualSolution, *, eps: float = 1e-6, reduce: bool = True) -> Optional[PricedColumn]:
    """Greedy elementary pricer: each node keeps one label plus its job set.

    Returns None when the best elementary schedule found is not negative
    enough (value >= -eps).
    """
    kern = graph.kernel
    keep = reduce_arcs(graph, duals, dominance=False).keep if reduce else None
    cost = _arc_costs(kern, duals, keep)
    lanes = max(1, (kern.n_jobs + 63) // 64)
    F, _, pn, pk = _helem_kernel(
        kern.nn, kern.src, lanes, kern.in_ptr, kern.in_tail, kern.in_job, cost, kern.seg_lo, kern.seg_hi
    )
    value = float(F[kern.sink]) - duals.lam0
    if value >= -eps:
        return None
    return _make_column(graph, _walk_single(kern, pn, pk), duals, value)


def heur_1cycle(graph: FlowGraph, duals: DualSolution, *, eps: float = 1e-6, reduce: bool = True) -> Optional[PricedColumn]:
    """Greedy 1-cycle-free pricer: one label per node, remembering only the last job."""
    kern = graph.kernel
    keep = reduce_arcs(graph, duals, dominance=False).keep if reduce else None
    cost = _arc_costs(kern, duals, keep)
    F, _, pn, pk = _h1c_kernel(
        kern.nn, kern.src, kern.in_ptr, kern.in_tail, kern.in_job, cost, kern.seg_lo, kern.seg_hi
    )
    value = float(F[kern.sink]) - duals.lam0
    if value >= -eps:
        return None
    return _make_column(graph, _walk_single(kern, pn, pk), duals, value)
