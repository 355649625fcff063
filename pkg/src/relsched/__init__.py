"""Solver toolkit for P|rj|sum wj*Cj: scheduling jobs with release dates on
identical parallel machines, minimizing the total weighted completion time.

Pieces: instance model and generator, the normal-pattern flow graph,
time-indexed and arc-flow MILP export, column-generation pricing, a
restricted master with an embedded simplex, primal bounds with a
brute-force oracle, and the branch-and-price driver.
"""

from .instance import GenParams, Instance, Job, generate, horizon, read_instance, write_instance
from .timegraph import Arc, FlowGraph, JobWindows, build_graph, init_nr
from .bounds import FullSchedule, heuristic_ub, oracle_opt
from .bnp import BpConfig, SolveReport, bp_solve

__all__ = [
    "Arc",
    "BpConfig",
    "FlowGraph",
    "FullSchedule",
    "GenParams",
    "Instance",
    "Job",
    "JobWindows",
    "SolveReport",
    "bp_solve",
    "build_graph",
    "generate",
    "heuristic_ub",
    "horizon",
    "init_nr",
    "oracle_opt",
    "read_instance",
    "write_instance",
]
