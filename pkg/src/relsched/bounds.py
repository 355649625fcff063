"""Primal bounds: constructive heuristic with local search, and the
exhaustive oracle used for verification on small instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .instance import Instance

__all__ = [
    "FullSchedule",
    "OracleLimitError",
    "erd_wspt_machines",
    "heuristic_ub",
    "oracle_opt",
    "trivial_lb",
]


class OracleLimitError(ValueError):
    """The exhaustive oracle refuses instances above its job cap."""


@dataclass(frozen=True)
class FullSchedule:
    """A complete schedule: per machine an ordered (job, start) sequence."""

    machines: tuple[tuple[tuple[int, int], ...], ...]
    objective: int

    @classmethod
    def from_machines(cls, instance: Instance, orders: list[list[int]]) -> "FullSchedule":
        """Timed schedule from per-machine job orders.

        Starts are forced to max(previous completion, release date), which is
        optimal for a fixed sequence.
        """
        machines = []
        total = 0
        for order in orders:
            t = 0
            seq = []
            for j in order:
                job = instance.job(j)
                start = max(t, job.r)
                seq.append((j, start))
                t = start + job.p
                total += job.w * t
            machines.append(tuple(seq))
        return cls(tuple(machines), total)

    def validate(self, instance: Instance) -> None:
        if len(self.machines) > instance.m:
            raise AssertionError("schedule uses more machines than available")
        seen = [0] * instance.n
        total = 0
        for machine in self.machines:
            t = 0
            for j, start in machine:
                job = instance.job(j)
                if start < job.r:
                    raise AssertionError(f"job {j} starts before release")
                if start < t:
                    raise AssertionError(f"job {j} overlaps its predecessor")
                t = start + job.p
                seen[j - 1] += 1
                total += job.w * t
        if any(c != 1 for c in seen):
            raise AssertionError("each job must appear exactly once")
        if total != self.objective:
            raise AssertionError(f"objective {self.objective} != recomputed {total}")

    def orders(self) -> list[list[int]]:
        return [[j for j, _ in machine] for machine in self.machines]


def trivial_lb(instance: Instance) -> int:
    """Every job completes no earlier than r_j + p_j."""
    return sum(j.w * (j.r + j.p) for j in instance.jobs)


def erd_wspt_machines(instance: Instance) -> list[list[int]]:
    """Earliest-release + weighted-shortest-processing-time list construction.

    Repeatedly takes the least-loaded machine; among jobs released by that
    time (advancing to the next release if none is) the one with the best
    w/p ratio goes next, ties broken by smaller id.
    """
    m = instance.m
    ready = [0] * m
    remaining = set(range(1, instance.n + 1))
    orders: list[list[int]] = [[] for _ in range(m)]
    while remaining:
        k = min(range(m), key=lambda i: (ready[i], i))
        t = ready[k]
        avail = [j for j in remaining if instance.job(j).r <= t]
        if not avail:
            t = min(instance.job(j).r for j in remaining)
            avail = [j for j in remaining if instance.job(j).r <= t]
        # best w/p ratio == smallest p/w; compare p_a*w_b vs p_b*w_a
        best = None
        for j in avail:
            if best is None:
                best = j
                continue
            a, b = instance.job(j), instance.job(best)
            if a.p * b.w < b.p * a.w or (a.p * b.w == b.p * a.w and j < best):
                best = j
        orders[k].append(best)
        remaining.remove(best)
        ready[k] = max(t, instance.job(best).r) + instance.job(best).p
    return orders


def _retime(instance: Instance, order: list[int]) -> tuple[tuple[int, int], ...]:
    t = 0
    seq = []
    for j in order:
        job = instance.job(j)
        start = max(t, job.r)
        seq.append((j, start))
        t = start + job.p
    return tuple(seq)


def _machine_cost(instance: Instance, order: list[int]) -> int:
    t = 0
    total = 0
    for j in order:
        job = instance.job(j)
        t = max(t, job.r) + job.p
        total += job.w * t
    return total


def heuristic_ub(instance: Instance, move_budget: int = 20000) -> FullSchedule:
    """Constructive ERD+WSPT schedule improved by first-improvement local
    search over intra-machine adjacent swaps and single-job reinsertions.

    Deterministic: fixed scan order, stops at a full pass without improvement
    or once ``move_budget`` accepted moves have been applied.
    """
    orders = erd_wspt_machines(instance)
    costs = [_machine_cost(instance, o) for o in orders]
    moves = 0

    def improved_once() -> bool:
        nonlocal moves
        m = len(orders)
        # (a) adjacent swaps inside a machine
        for k in range(m):
            order = orders[k]
            for i in range(len(order) - 1):
                cand = order[:i] + [order[i + 1], order[i]] + order[i + 2:]
                c = _machine_cost(instance, cand)
                if c < costs[k]:
                    orders[k] = cand
                    costs[k] = c
                    moves += 1
                    return True
        # (b) move one job to another machine (any position)
        for a in range(m):
            for i in range(len(orders[a])):
                j = orders[a][i]
                rest = orders[a][:i] + orders[a][i + 1:]
                c_rest = _machine_cost(instance, rest)
                for b in range(m):
                    if b == a:
                        continue
                    for pos in range(len(orders[b]) + 1):
                        cand = orders[b][:pos] + [j] + orders[b][pos:]
                        c_cand = _machine_cost(instance, cand)
                        if c_rest + c_cand < costs[a] + costs[b]:
                            orders[a] = rest
                            orders[b] = cand
                            costs[a] = c_rest
                            costs[b] = c_cand
                            moves += 1
                            return True
        return False

    while moves < move_budget and improved_once():
        pass
    return FullSchedule.from_machines(instance, orders)


def oracle_opt(instance: Instance, cap: int = 9) -> FullSchedule:
    """Exact optimum by exhaustive search; refuses more than ``cap`` jobs.

    Enumerates job-to-machine assignments in canonical form (machine labels
    are interchangeable), solves each machine's sequencing by enumeration
    with admissible partial-cost pruning, and memoizes per job subset.
    """
    n = instance.n
    if n > cap:
        raise OracleLimitError(f"oracle limited to {cap} jobs, instance has {n}")
    m = min(instance.m, n)
    jobs = instance.jobs

    best_single: dict[frozenset, tuple[int, tuple[int, ...]]] = {}

    def single_machine(subset: frozenset) -> tuple[int, tuple[int, ...]]:
        """Optimal (cost, order) for one machine processing ``subset``."""
        hit = best_single.get(subset)
        if hit is not None:
            return hit
        items = sorted(subset)
        best_cost = None
        best_order: tuple[int, ...] = ()

        def rec(remaining: list[int], t: int, cost: int, prefix: list[int]):
            nonlocal best_cost, best_order
            if not remaining:
                if best_cost is None or cost < best_cost:
                    best_cost = cost
                    best_order = tuple(prefix)
                return
            bound = cost + sum(
                jobs[j - 1].w * (max(jobs[j - 1].r, t) + jobs[j - 1].p) for j in remaining
            )
            if best_cost is not None and bound >= best_cost:
                return
            for idx, j in enumerate(remaining):
                job = jobs[j - 1]
                done = max(t, job.r) + job.p
                rec(remaining[:idx] + remaining[idx + 1:], done, cost + job.w * done, prefix + [j])

        rec(items, 0, 0, [])
        best_single[subset] = (best_cost, best_order)
        return best_cost, best_order

    lone = [jobs[k].w * (jobs[k].r + jobs[k].p) for k in range(n)]
    best_value: Optional[int] = None
    best_assign: Optional[list[list[int]]] = None

    def assign(k: int, buckets: list[list[int]], used: int, partial: int, tail_lb: int):
        nonlocal best_value, best_assign
        if best_value is not None and partial + tail_lb >= best_value:
            return
        if k == n:
            if best_value is None or partial < best_value:
                best_value = partial
                best_assign = [list(b) for b in buckets]
            return
        limit = min(used + 1, m)
        for b in range(limit):
            buckets[b].append(k + 1)
            sub_costs = single_machine(frozenset(buckets[b]))[0]
            old = single_machine(frozenset(buckets[b][:-1]))[0] if len(buckets[b]) > 1 else 0
            assign(
                k + 1,
                buckets,
                max(used, b + 1),
                partial + sub_costs - old,
                tail_lb - lone[k],
            )
            buckets[b].pop()

    assign(0, [[] for _ in range(m)], 0, 0, sum(lone))
    orders = [list(single_machine(frozenset(b))[1]) for b in best_assign if b]
    while len(orders) < instance.m:
        orders.append([])
    return FullSchedule.from_machines(instance, orders)
