"""Acyclic flow graph over normal-pattern ticks.

A single-machine schedule is a path from the earliest release to the horizon
T: job arcs advance time by the job's processing time, loss arcs jump an
idle machine to the next release date.  Nodes are the ticks reachable by
left-justified schedules (the "normal patterns"), seeded from the distinct
release dates plus T.

The node set is always derived from the unrestricted instance, so that it is
identical at every node of the branch-and-price tree; per-job completion
windows only filter arcs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import Instance, horizon

__all__ = ["Arc", "FlowGraph", "JobWindows", "build_graph", "init_nr"]


@dataclass(frozen=True)
class Arc:
    """Directed arc between two ticks; ``job`` is 0 for loss (idle) arcs."""

    tail: int
    head: int
    job: int = 0


@dataclass(frozen=True)
class JobWindows:
    """Per-job allowed completion-time interval [lo_j, hi_j]."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @classmethod
    def root(cls, instance: Instance, T: Optional[int] = None) -> "JobWindows":
        if T is None:
            T = horizon(instance)
        return cls(tuple(j.r + j.p for j in instance.jobs), tuple(T for _ in instance.jobs))

    def feasible(self, job_id: int) -> bool:
        return self.lo[job_id - 1] <= self.hi[job_id - 1]

    def contains(self, job_id: int, completion: int) -> bool:
        return self.lo[job_id - 1] <= completion <= self.hi[job_id - 1]

    def tightened(self, job_id: int, lo: Optional[int] = None, hi: Optional[int] = None) -> "JobWindows":
        """New windows with job ``job_id`` restricted to [lo, hi] (intersected)."""
        k = job_id - 1
        new_lo = list(self.lo)
        new_hi = list(self.hi)
        if lo is not None:
            new_lo[k] = max(new_lo[k], lo)
        if hi is not None:
            new_hi[k] = min(new_hi[k], hi)
        return JobWindows(tuple(new_lo), tuple(new_hi))


class _Kernel:
    """Flat array view of a graph used by the pricing DP kernels.

    Incoming job arcs are stored CSR-style grouped by head node; the loss
    predecessors of a release node (or T) are the contiguous node-index range
    [seg_lo, seg_hi) whose next release is that node.
    """

    __slots__ = (
        "nn", "node_time", "src", "sink",
        "in_ptr", "in_tail", "in_job", "in_base", "in_tail_time", "in_flat_arc",
        "seg_lo", "seg_hi", "n_jobs", "job_p", "job_r", "job_w",
    )

    def __init__(self, graph: "FlowGraph"):
        inst = graph.instance
        nodes = graph.nodes
        self.nn = len(nodes)
        self.node_time = np.asarray(nodes, dtype=np.int64)
        idx = {t: i for i, t in enumerate(nodes)}
        self.src = idx[graph.r_min]
        self.sink = idx[graph.T]
        n = inst.n
        self.n_jobs = n
        self.job_p = np.zeros(n + 1, dtype=np.int64)
        self.job_r = np.zeros(n + 1, dtype=np.int64)
        self.job_w = np.zeros(n + 1, dtype=np.int64)
        for j in inst.jobs:
            self.job_p[j.id] = j.p
            self.job_r[j.id] = j.r
            self.job_w[j.id] = j.w

        tails, heads, jobs = [], [], []
        for arcs in graph.arcs_by_job:
            for a in arcs:
                tails.append(idx[a.tail])
                heads.append(idx[a.head])
                jobs.append(a.job)
        na = len(tails)
        tails = np.asarray(tails, dtype=np.int64)
        heads = np.asarray(heads, dtype=np.int64)
        jobs = np.asarray(jobs, dtype=np.int64)
        order = np.lexsort((tails, jobs, heads)) if na else np.empty(0, dtype=np.int64)
        self.in_tail = tails[order]
        self.in_job = jobs[order]
        in_head = heads[order]
        self.in_ptr = np.zeros(self.nn + 1, dtype=np.int64)
        np.add.at(self.in_ptr, in_head + 1, 1)
        np.cumsum(self.in_ptr, out=self.in_ptr)
        self.in_tail_time = self.node_time[self.in_tail]
        head_time = self.node_time[in_head]
        self.in_base = (self.job_w[self.in_job] * head_time).astype(np.float64)
        self.in_flat_arc = order  # original flat position, for debugging

        # loss-arc predecessor segments
        self.seg_lo = np.zeros(self.nn, dtype=np.int64)
        self.seg_hi = np.zeros(self.nn, dtype=np.int64)
        targets = sorted(set(graph.releases) | {graph.T})
        boundary = [idx[t] for t in targets if t in idx]
        prev = None
        for b in boundary:
            if prev is not None:
                self.seg_lo[b] = prev
                self.seg_hi[b] = b
            prev = b


@dataclass
class FlowGraph:
    """Normal-pattern graph G = (N, A) for one search-tree node."""

    instance: Instance
    nodes: tuple[int, ...]
    arcs_by_job: tuple[tuple[Arc, ...], ...]
    loss_arcs: tuple[Arc, ...]
    nr: dict[int, int]
    T: int
    r_min: int
    releases: tuple[int, ...]
    windows: JobWindows
    jobs_without_arcs: tuple[int, ...]
    # window state relative to the root; arc-reduction arguments rely on
    # left-justification, which raised completion lower bounds invalidate
    lo_at_root: bool = True
    hi_at_root: bool = True
    _kernel: Optional[_Kernel] = field(default=None, repr=False, compare=False)

    @property
    def kernel(self) -> _Kernel:
        if self._kernel is None:
            self._kernel = _Kernel(self)
        return self._kernel

    def arcs(self, job_id: int) -> tuple[Arc, ...]:
        return self.arcs_by_job[job_id - 1]

    def dump_text(self) -> str:
        """Plain-text dump of N and A for golden-file comparisons."""
        lines = [f"T={self.T} rmin={self.r_min}"]
        lines.append("N: " + " ".join(str(t) for t in self.nodes))
        for j in self.instance.jobs:
            pairs = " ".join(f"({a.tail},{a.head})" for a in self.arcs_by_job[j.id - 1])
            lines.append(f"A{j.id}: {pairs}")
        pairs = " ".join(f"({a.tail},{a.head})" for a in self.loss_arcs)
        lines.append(f"A0: {pairs}")
        return "\n".join(lines) + "\n"


def _next_release(nodes, releases, T) -> dict[int, int]:
    targets = sorted(set(releases) | {T})
    nr = {}
    i = 0
    for q in nodes:
        if q >= T:
            continue
        while targets[i] <= q:
            i += 1
        nr[q] = targets[i]
    return nr


def init_nr(graph: FlowGraph) -> dict[int, int]:
    """Next-release vector: nr[p] = min{t in R + {T} : t > p} for p in N, p < T."""
    return _next_release(graph.nodes, graph.releases, graph.T)


def build_graph(instance: Instance, windows: Optional[JobWindows] = None) -> FlowGraph:
    """Build the graph, keeping only job arcs whose completion lies in the window.

    The node set is the root normal-pattern set regardless of windows.  A job
    arc (q, q+p_j, j) is kept iff q >= r_j, q + p_j <= T and
    lo_j <= q + p_j <= hi_j.  Every node q < T gets one loss arc to nr(q);
    T, being the sink, gets none.
    """
    T = horizon(instance)
    if windows is None:
        windows = JobWindows.root(instance, T)
    releases = tuple(sorted({j.r for j in instance.jobs}))

    reach = bytearray(T + 1)
    for q in releases:
        reach[q] = 1
    reach[T] = 1
    jobs = instance.jobs
    for q in range(T + 1):
        if reach[q]:
            for j in jobs:
                if q >= j.r and q + j.p <= T:
                    reach[q + j.p] = 1
    nodes = tuple(q for q in range(T + 1) if reach[q])

    arcs_by_job = []
    no_arcs = []
    for j in jobs:
        lo = windows.lo[j.id - 1]
        hi = windows.hi[j.id - 1]
        arcs = tuple(
            Arc(q, q + j.p, j.id)
            for q in nodes
            if q >= j.r and q + j.p <= T and lo <= q + j.p <= hi
        )
        arcs_by_job.append(arcs)
        if not arcs:
            no_arcs.append(j.id)

    nr = _next_release(nodes, releases, T)
    loss = tuple(Arc(q, nr[q], 0) for q in nodes if q < T)
    lo_at_root = all(windows.lo[j.id - 1] <= j.r + j.p for j in jobs)
    hi_at_root = all(windows.hi[j.id - 1] >= T for j in jobs)
    return FlowGraph(
        instance=instance,
        nodes=nodes,
        arcs_by_job=tuple(arcs_by_job),
        loss_arcs=loss,
        nr=nr,
        T=T,
        r_min=nodes[0],
        releases=releases,
        windows=windows,
        jobs_without_arcs=tuple(no_arcs),
        lo_at_root=lo_at_root,
        hi_at_root=hi_at_root,
    )
