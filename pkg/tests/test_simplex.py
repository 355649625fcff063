import numpy as np
import pytest
from scipy.optimize import linprog

from relsched.simplex import LinearProgram, solve_lp


def scipy_solve(lp: LinearProgram):
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for row, sense, rhs in zip(lp.a, lp.senses, lp.rhs):
        if sense == "<":
            a_ub.append(row)
            b_ub.append(rhs)
        elif sense == ">":
            a_ub.append(-row)
            b_ub.append(-rhs)
        else:
            a_eq.append(row)
            b_eq.append(rhs)
    bounds = [(l if np.isfinite(l) else None, u if np.isfinite(u) else None)
              for l, u in zip(lp.lb, lp.ub)]
    return linprog(
        lp.obj,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
    )


def test_tiny_known_lp():
    # min -x - y st x + y <= 1, x,y in [0,1]: optimum -1
    lp = LinearProgram(
        obj=np.array([-1.0, -1.0]),
        a=np.array([[1.0, 1.0]]),
        senses=("<",),
        rhs=np.array([1.0]),
        lb=np.zeros(2),
        ub=np.ones(2),
    )
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.obj == pytest.approx(-1.0, abs=1e-9)


def test_equality_and_bounds():
    # min x1 + 2 x2 st x1 + x2 = 2, x2 <= 1.5 -> x = (0.5, 1.5)? no: min puts x1 high
    lp = LinearProgram(
        obj=np.array([1.0, 2.0]),
        a=np.array([[1.0, 1.0]]),
        senses=("=",),
        rhs=np.array([2.0]),
        lb=np.zeros(2),
        ub=np.array([np.inf, 1.5]),
    )
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.obj == pytest.approx(2.0, abs=1e-9)
    assert res.x[0] == pytest.approx(2.0, abs=1e-9)


def test_infeasible_detected():
    lp = LinearProgram(
        obj=np.zeros(1),
        a=np.array([[1.0], [1.0]]),
        senses=(">", "<"),
        rhs=np.array([3.0, 1.0]),
        lb=np.zeros(1),
        ub=np.full(1, np.inf),
    )
    assert solve_lp(lp).status == "infeasible"


def test_unbounded_detected():
    lp = LinearProgram(
        obj=np.array([-1.0]),
        a=np.array([[0.0]]),
        senses=("<",),
        rhs=np.array([1.0]),
        lb=np.zeros(1),
        ub=np.full(1, np.inf),
    )
    assert solve_lp(lp).status == "unbounded"


def _random_lp(rng, nr, nv):
    a = rng.normal(size=(nr, nv)).round(3)
    x0 = rng.uniform(0.0, 2.0, size=nv).round(3)  # a point the rows are anchored on
    senses = tuple(rng.choice(["<", "=", ">"]) for _ in range(nr))
    slack = rng.uniform(0.0, 1.0, size=nr).round(3)
    b = a @ x0
    b = np.where([s == "<" for s in senses], b + slack, b)
    b = np.where([s == ">" for s in senses], b - slack, b)
    ub = np.where(rng.random(nv) < 0.5, rng.uniform(2.0, 5.0, size=nv), np.inf)
    return LinearProgram(
        obj=rng.normal(size=nv).round(3),
        a=a,
        senses=senses,
        rhs=b,
        lb=np.zeros(nv),
        ub=ub,
    )


def test_random_lps_match_scipy():
    rng = np.random.default_rng(42)
    solved = 0
    for _ in range(120):
        lp = _random_lp(rng, nr=rng.integers(1, 6), nv=rng.integers(1, 9))
        mine = solve_lp(lp)
        ref = scipy_solve(lp)
        if ref.status == 2:
            assert mine.status == "infeasible"
        elif ref.status == 3:
            assert mine.status in ("unbounded", "optimal")
        else:
            assert mine.status == "optimal"
            assert mine.obj == pytest.approx(ref.fun, abs=1e-6, rel=1e-7)
            solved += 1
    assert solved > 60


def test_duals_match_scipy_on_inequalities():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(60):
        nv = int(rng.integers(2, 7))
        nr = int(rng.integers(1, 5))
        a = np.abs(rng.normal(size=(nr, nv))).round(3) + 0.1
        lp = LinearProgram(
            obj=np.abs(rng.normal(size=nv)).round(3) + 0.05,
            a=a,
            senses=(">",) * nr,
            rhs=np.abs(rng.normal(size=nr)).round(3) + 0.5,
            lb=np.zeros(nv),
            ub=np.full(nv, np.inf),
        )
        mine = solve_lp(lp)
        ref = scipy_solve(lp)
        assert mine.status == "optimal" and ref.status == 0
        assert mine.obj == pytest.approx(ref.fun, abs=1e-7)
        # strong duality: y'b equals the primal objective
        assert mine.duals @ lp.rhs == pytest.approx(mine.obj, abs=1e-7)
        assert all(y >= -1e-9 for y in mine.duals)  # '>=' rows in a min problem
        checked += 1
    assert checked == 60


def test_warm_start_reuses_basis():
    lp = LinearProgram(
        obj=np.array([3.0, 1.0, 4.0]),
        a=np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]),
        senses=(">", ">"),
        rhs=np.array([1.0, 1.0]),
        lb=np.zeros(3),
        ub=np.full(3, np.inf),
    )
    first = solve_lp(lp)
    again = solve_lp(lp, basis=first.basis)
    assert again.status == "optimal"
    assert again.obj == pytest.approx(first.obj, abs=1e-12)
    assert again.iterations <= first.iterations
