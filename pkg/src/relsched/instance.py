"""Problem data model, random instance generator and plain-text instance I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "GenParams",
    "Instance",
    "InstanceFormatError",
    "Job",
    "generate",
    "horizon",
    "read_instance",
    "write_instance",
]


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""


@dataclass(frozen=True)
class Job:
    """One job: integer processing time, release date and weight."""

    id: int  # 1-based
    p: int
    r: int
    w: int

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"job id must be >= 1, got {self.id}")
        if self.p < 1:
            raise ValueError(f"job {self.id}: processing time must be >= 1, got {self.p}")
        if self.r < 0:
            raise ValueError(f"job {self.id}: release date must be >= 0, got {self.r}")
        if self.w < 1:
            raise ValueError(f"job {self.id}: weight must be >= 1, got {self.w}")


@dataclass(frozen=True)
class Instance:
    """A set of jobs to be scheduled on ``m`` identical parallel machines.

    ``meta`` carries generator parameters when the instance was drawn by
    :func:`generate`; it is ignored by equality and not serialized.
    """

    jobs: tuple[Job, ...]
    m: int
    meta: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if not self.jobs:
            raise ValueError("instance needs at least one job")
        if self.m < 1:
            raise ValueError(f"machine count must be >= 1, got {self.m}")
        ids = [j.id for j in self.jobs]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("job ids must be 1..n without gaps")

    @property
    def n(self) -> int:
        return len(self.jobs)

    def job(self, job_id: int) -> Job:
        return self.jobs[job_id - 1]


@dataclass(frozen=True)
class GenParams:
    """Parameters of the random generator.

    ``alpha`` controls release-date tightness: releases are uniform on
    [0, floor(alpha * n * 50.5 / m)], so larger alpha spreads them out.
    """

    n: int
    m: int
    alpha: float
    pmax: int = 100
    wmax: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.pmax < 1:
            raise ValueError(f"pmax must be >= 1, got {self.pmax}")
        if self.wmax < 1:
            raise ValueError(f"wmax must be >= 1, got {self.wmax}")


# Child-stream keys: p, w and r are drawn from independent substreams of the
# seed so each field's draws do not depend on the order the others are drawn.
_P_STREAM, _W_STREAM, _R_STREAM = 0, 1, 2


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def release_bound(params: GenParams) -> int:
    """Upper end (inclusive) of the release-date range: floor(alpha*n*50.5/m)."""
    return math.floor(params.alpha * params.n * 50.5 / params.m)


def generate(params: GenParams) -> Instance:
    """Draw a random instance; the same seed yields the identical instance.

    p ~ U[1, pmax], w ~ U[1, wmax], r ~ U[0, floor(alpha*n*50.5/m)], all
    integers, inclusive on both ends, from a PCG64 stream per field.
    """
    n = params.n
    p = _stream(params.seed, _P_STREAM).integers(1, params.pmax + 1, size=n)
    w = _stream(params.seed, _W_STREAM).integers(1, params.wmax + 1, size=n)
    r = _stream(params.seed, _R_STREAM).integers(0, release_bound(params) + 1, size=n)
    jobs = tuple(Job(i + 1, int(p[i]), int(r[i]), int(w[i])) for i in range(n))
    meta = {"alpha": params.alpha, "pmax": params.pmax, "wmax": params.wmax, "seed": params.seed}
    return Instance(jobs, params.m, meta)


def horizon(instance: Instance) -> int:
    """Length of the planning horizon.

    T = floor((1/m) * sum(p) + ((m-1)/m) * pmax) + rmax, computed in exact
    integer arithmetic.  Every instance admits an optimal schedule finishing
    by T.
    """
    total_p = sum(j.p for j in instance.jobs)
    p_max = max(j.p for j in instance.jobs)
    r_max = max(j.r for j in instance.jobs)
    return (total_p + (instance.m - 1) * p_max) // instance.m + r_max


def write_instance(instance: Instance, path) -> None:
    """Write the plain-text format: line 1 ``n m``, then n lines ``p r w``."""
    lines = [f"{instance.n} {instance.m}"]
    lines.extend(f"{j.p} {j.r} {j.w}" for j in instance.jobs)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _ints(line: str, count: int, lineno: int, what: str) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise InstanceFormatError(
            f"line {lineno}: expected {count} integers for {what}, got {line!r}"
        )
    try:
        return [int(tok) for tok in parts]
    except ValueError:
        raise InstanceFormatError(
            f"line {lineno}: expected {count} integers for {what}, got {line!r}"
        ) from None


def read_instance(path) -> Instance:
    """Parse the plain-text format written by :func:`write_instance`."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    # trailing blank lines are tolerated, nothing else
    while raw and not raw[-1].strip():
        raw.pop()
    if not raw:
        raise InstanceFormatError("line 1: empty instance file")
    n, m = _ints(raw[0], 2, 1, "'n m' header")
    body = raw[1:]
    if len(body) != n:
        raise InstanceFormatError(
            f"line {len(raw)}: job count mismatch: header declares {n} jobs, found {len(body)} job lines"
        )
    jobs = []
    for k, line in enumerate(body):
        p, r, w = _ints(line, 3, k + 2, "'p r w' job line")
        try:
            jobs.append(Job(k + 1, p, r, w))
        except ValueError as exc:
            raise InstanceFormatError(f"line {k + 2}: {exc}") from None
    try:
        return Instance(tuple(jobs), m)
    except ValueError as exc:
        raise InstanceFormatError(f"line 1: {exc}") from None
