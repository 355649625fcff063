"""Dense bounded-variable revised simplex.

Solves   min c'x  s.t.  A x {<=,=,>=} b,  lb <= x <= ub.

This is the LP engine behind the restricted master and the MILP relaxation
checks.  The problems it sees are small (tens of rows), so a dense explicit
basis inverse with periodic refactorization is adequate.  Entering variables
follow Dantzig's rule with a Bland fallback once 1000 degenerate steps pile
up.  A caller may pass the basis of a previous solve to warm-start after
column additions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["LinearProgram", "LpResult", "solve_lp"]

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
_PIV_TOL = 1e-10
_DEGEN_STEP = 1e-11
_BLAND_AFTER = 1000
_REFACTOR_EVERY = 150
_WARM_FEAS_TOL = 1e-7


@dataclass
class LinearProgram:
    """min obj'x s.t. a x (senses) rhs, lb <= x <= ub."""

    obj: np.ndarray
    a: np.ndarray
    senses: tuple[str, ...]  # each '<', '=' or '>'
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.obj = np.asarray(self.obj, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        self.lb = np.asarray(self.lb, dtype=np.float64)
        self.ub = np.asarray(self.ub, dtype=np.float64)
        nr, nv = self.a.shape
        if len(self.senses) != nr or self.rhs.shape != (nr,):
            raise ValueError("row dimensions disagree")
        if self.obj.shape != (nv,) or self.lb.shape != (nv,) or self.ub.shape != (nv,):
            raise ValueError("column dimensions disagree")
        if any(s not in ("<", "=", ">") for s in self.senses):
            raise ValueError("senses must be '<', '=' or '>'")


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: Optional[np.ndarray]
    obj: Optional[float]
    duals: Optional[np.ndarray]
    basis: Optional[tuple]
    iterations: int


def _slack_bounds(sense: str) -> tuple[float, float]:
    if sense == "<":
        return 0.0, np.inf
    if sense == ">":
        return -np.inf, 0.0
    return 0.0, 0.0


class _Tableau:
    """Working state: full column matrix, bounds, basis and its inverse."""

    def __init__(self, a_full, lb, ub, b):
        self.a = a_full
        self.lb = lb
        self.ub = ub
        self.b = b
        self.nr = a_full.shape[0]
        self.nc = a_full.shape[1]
        self.basic = None       # int array (nr,)
        self.vstat = None       # int8 (nc,): 0 at-lb, 1 at-ub, 2 basic
        self.b_inv = None
        self.xb = None
        self.iterations = 0

    def nonbasic_values(self) -> np.ndarray:
        vals = np.where(self.vstat == 1, self.ub, self.lb)
        vals[self.vstat == 2] = 0.0
        # unbounded-below variables resting "at lb" sit at 0; our models never
        # produce them nonbasic, but keep the value finite
        vals[~np.isfinite(vals)] = 0.0
        return vals

    def refactor(self):
        basis_mat = self.a[:, self.basic]
        self.b_inv = np.linalg.inv(basis_mat)
        rhs_eff = self.b - self.a @ self.nonbasic_values()
        self.xb = self.b_inv @ rhs_eff

    def values(self) -> np.ndarray:
        x = self.nonbasic_values()
        x[self.basic] = self.xb
        return x


def _run_simplex(t: _Tableau, cost: np.ndarray, max_iterations: int) -> str:
    """Pivot until optimal. Returns 'optimal' | 'unbounded' | 'iteration_limit'.

    Entering rule: Dantzig, falling back to Bland's rule once 1000
    degenerate steps accumulate, which guarantees termination.  Callers with
    heavily degenerate problems should perturb the right-hand side instead
    of relying on the fallback (see the master solver).
    """
    nr = t.nr
    degenerate = 0
    bland = False
    since_refactor = 0
    fixed = t.ub - t.lb <= 0  # variables that can never move
    while True:
        if t.iterations >= max_iterations:
            return "iteration_limit"
        y = cost[t.basic] @ t.b_inv
        d = cost - y @ t.a
        cand_lo = (t.vstat == 0) & ~fixed & (d < -OPT_TOL)
        cand_hi = (t.vstat == 1) & ~fixed & (d > OPT_TOL)
        cand = cand_lo | cand_hi
        if not cand.any():
            return "optimal"
        idx = np.nonzero(cand)[0]
        if bland:
            e = int(idx[0])
        else:
            e = int(idx[np.argmax(np.abs(d[idx]))])
        sigma = 1.0 if t.vstat[e] == 0 else -1.0
        w = t.b_inv @ t.a[:, e]
        direction = sigma * w  # basic values change by -direction * step

        step = t.ub[e] - t.lb[e]  # own bound flip
        leave_row = -1
        pos = direction > _PIV_TOL
        neg = direction < -_PIV_TOL
        limits = np.full(nr, np.inf)
        if pos.any():
            limits[pos] = (t.xb[pos] - t.lb[t.basic[pos]]) / direction[pos]
        if neg.any():
            limits[neg] = (t.xb[neg] - t.ub[t.basic[neg]]) / direction[neg]
        np.maximum(limits, 0.0, out=limits)
        row_min = limits.min() if nr else np.inf
        if row_min < step:
            step = row_min
            ties = np.nonzero(limits <= row_min + 1e-12)[0]
            if bland:
                leave_row = int(ties[np.argmin(t.basic[ties])])
            else:
                best = ties[np.argmax(np.abs(direction[ties]))]
                leave_row = int(best)
        if not np.isfinite(step):
            return "unbounded"

        t.iterations += 1
        since_refactor += 1
        if step <= _DEGEN_STEP:
            degenerate += 1
            if degenerate > _BLAND_AFTER:
                bland = True
        else:
            degenerate = 0

        if leave_row < 0:
            # bound flip: entering variable jumps to its other bound
            t.xb -= direction * step
            t.vstat[e] = 1 - t.vstat[e]
            continue

        enter_val = (t.lb[e] if sigma > 0 else t.ub[e]) + sigma * step
        t.xb -= direction * step
        lv = int(t.basic[leave_row])
        t.vstat[lv] = 0 if direction[leave_row] > 0 else 1
        if not np.isfinite(t.lb[lv]) and t.vstat[lv] == 0:
            t.vstat[lv] = 1  # leaving toward its only finite bound
        t.basic[leave_row] = e
        t.vstat[e] = 2
        t.xb[leave_row] = enter_val

        if since_refactor >= _REFACTOR_EVERY:
            t.refactor()
            since_refactor = 0
        else:
            piv = w[leave_row]
            row = t.b_inv[leave_row] / piv
            t.b_inv -= np.outer(w, row)
            t.b_inv[leave_row] = row


def solve_lp(lp: LinearProgram, basis: Optional[tuple] = None, max_iterations: int = 200_000) -> LpResult:
    """Two-phase solve; ``basis`` from a previous result warm-starts phase 2.

    A warm start that stalls (rare numerical cycling on very degenerate
    problems) is abandoned and the problem re-solved cold, which follows a
    different pivot trajectory.  The returned duals are one per original
    row, signed for the original senses (so for a minimization, '>=' rows
    give nonnegative duals and '<=' rows nonpositive ones).
    """
    if basis is not None:
        warm = _solve_lp_once(lp, basis, min(20_000, max_iterations))
        if warm.status != "iteration_limit":
            return warm
    return _solve_lp_once(lp, None, max_iterations)


def _solve_lp_once(lp: LinearProgram, basis: Optional[tuple], max_iterations: int) -> LpResult:
    nr, nv = lp.a.shape
    ns = nv + nr  # structural + slack
    a_full = np.zeros((nr, ns + nr))  # + artificials (filled at phase-1 setup)
    a_full[:, :nv] = lp.a
    a_full[:, nv:ns] = np.eye(nr)
    lb = np.empty(ns + nr)
    ub = np.empty(ns + nr)
    lb[:nv] = lp.lb
    ub[:nv] = lp.ub
    for i, sense in enumerate(lp.senses):
        lb[nv + i], ub[nv + i] = _slack_bounds(sense)
    lb[ns:] = 0.0
    ub[ns:] = np.inf

    if np.any(lb[:ns] > ub[:ns]):
        return LpResult("infeasible", None, None, None, None, 0)
    if np.any(~np.isfinite(lb[:ns]) & ~np.isfinite(ub[:ns])):
        raise ValueError("free variables are not supported")

    t = _Tableau(a_full, lb, ub, lp.rhs.copy())
    cost2 = np.zeros(ns + nr)
    cost2[:nv] = lp.obj

    warm_ok = False
    if basis is not None:
        basic, vstat = basis
        if (
            len(basic) == nr
            and max(basic) < ns
            and len(vstat) == ns
            and np.count_nonzero(vstat == 2) == nr
        ):
            t.basic = np.array(basic, dtype=np.int64)
            t.vstat = np.concatenate([np.asarray(vstat, dtype=np.int8), np.zeros(nr, np.int8)])
            # artificials pinned out of play
            ub[ns:] = 0.0
            try:
                t.refactor()
                if np.all(t.xb >= lb[t.basic] - _WARM_FEAS_TOL) and np.all(
                    t.xb <= ub[t.basic] + _WARM_FEAS_TOL
                ):
                    warm_ok = True
            except np.linalg.LinAlgError:
                warm_ok = False
        if not warm_ok:
            ub[ns:] = np.inf

    if not warm_ok:
        # phase 1: artificial basis with unit costs
        t.vstat = np.zeros(ns + nr, dtype=np.int8)
        at_ub = ~np.isfinite(lb[:ns])
        t.vstat[:ns][at_ub] = 1
        t.vstat[ns:] = 2
        t.basic = np.arange(ns, ns + nr, dtype=np.int64)
        resid = lp.rhs - a_full[:, :ns] @ t.nonbasic_values()[:ns]
        sign = np.where(resid < 0, -1.0, 1.0)
        a_full[:, ns:] = np.diag(sign)
        t.b_inv = np.diag(sign)  # inverse of the diagonal sign matrix
        t.xb = np.abs(resid)
        cost1 = np.zeros(ns + nr)
        cost1[ns:] = 1.0
        status = _run_simplex(t, cost1, max_iterations)
        if status == "iteration_limit":
            return LpResult(status, None, None, None, None, t.iterations)
        phase1_obj = float(cost1[t.basic] @ t.xb)
        if phase1_obj > 1e-7:
            return LpResult("infeasible", None, None, None, None, t.iterations)
        # drive artificials out of the basis where possible
        for row in range(nr):
            v = int(t.basic[row])
            if v < ns:
                continue
            pivot_row = t.b_inv[row] @ a_full[:, :ns]
            choices = np.nonzero((np.abs(pivot_row) > 1e-7) & (t.vstat[:ns] != 2))[0]
            if len(choices) == 0:
                ub[v] = 0.0  # redundant row: artificial stays, fixed at 0
                continue
            e = int(choices[0])
            w = t.b_inv @ a_full[:, e]
            t.vstat[v] = 0
            t.basic[row] = e
            t.vstat[e] = 2
            piv = w[row]
            brow = t.b_inv[row] / piv
            t.b_inv -= np.outer(w, brow)
            t.b_inv[row] = brow
            t.xb = t.b_inv @ (t.b - a_full @ t.nonbasic_values())
        ub[ns:] = 0.0

    status = _run_simplex(t, cost2, max_iterations)
    if status != "optimal":
        return LpResult(status, None, None, None, None, t.iterations)

    t.refactor()  # tighten values before reporting
    x_full = t.values()
    x = x_full[:nv]
    obj = float(lp.obj @ x)
    y = cost2[t.basic] @ t.b_inv
    if np.any(t.basic >= ns):
        out_basis = None  # artificial stuck in basis: not reusable
    else:
        out_basis = (t.basic.copy(), t.vstat[:ns].copy())
    return LpResult("optimal", x, obj, np.asarray(y), out_basis, t.iterations)
