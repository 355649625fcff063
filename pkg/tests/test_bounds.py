import pytest

from oracles import wspt_value

from relsched.bounds import FullSchedule, OracleLimitError, heuristic_ub, oracle_opt, trivial_lb
from relsched.instance import GenParams, Instance, Job, generate


def test_oracle_two_job_example():
    inst = Instance((Job(1, 3, 0, 1), Job(2, 1, 0, 3)), 1)
    assert oracle_opt(inst).objective == 7


def test_oracle_single_job():
    inst = Instance((Job(1, 4, 3, 5),), 2)
    sched = oracle_opt(inst)
    assert sched.objective == 5 * 7


def test_oracle_machines_exceed_jobs():
    jobs = tuple(Job(i + 1, i + 1, 0, 2 * i + 1) for i in range(4))
    inst = Instance(jobs, 6)
    assert oracle_opt(inst).objective == sum(j.w * j.p for j in jobs)


def test_oracle_refuses_large():
    jobs = tuple(Job(i + 1, 1, 0, 1) for i in range(10))
    with pytest.raises(OracleLimitError):
        oracle_opt(Instance(jobs, 2))


def test_oracle_permutation_invariant():
    for seed in range(6):
        inst = generate(GenParams(n=6, m=2, alpha=1.0, pmax=6, wmax=5, seed=seed))
        v1 = oracle_opt(inst).objective
        perm = list(reversed(inst.jobs))
        relabeled = tuple(
            Job(i + 1, j.p, j.r, j.w) for i, j in enumerate(perm)
        )
        v2 = oracle_opt(Instance(relabeled, inst.m)).objective
        assert v1 == v2


def test_oracle_schedule_validates():
    for seed in range(8):
        inst = generate(GenParams(n=6, m=3, alpha=0.7, pmax=7, wmax=6, seed=seed))
        sched = oracle_opt(inst)
        sched.validate(inst)
        assert sched.objective >= trivial_lb(inst)


def test_forced_timing_is_optimal_for_fixed_order():
    # delaying any single start (followers pushed along) never helps
    inst = generate(GenParams(n=5, m=2, alpha=0.8, pmax=6, wmax=4, seed=3))
    sched = oracle_opt(inst)

    def machine_cost(machine, delay_pos):
        t = 0
        total = 0
        for k, (j, _) in enumerate(machine):
            job = inst.job(j)
            start = max(t, job.r) + (1 if k == delay_pos else 0)
            t = start + job.p
            total += job.w * t
        return total

    for machine in sched.machines:
        base = machine_cost(machine, delay_pos=-1)
        for pos in range(len(machine)):
            assert machine_cost(machine, pos) >= base


def test_heuristic_single_machine_no_release_is_wspt():
    jobs = tuple(Job(i + 1, p, 0, w) for i, (p, w) in enumerate([(3, 1), (1, 3), (4, 2), (2, 2)]))
    inst = Instance(jobs, 1)
    sched = heuristic_ub(inst)
    assert sched.objective == wspt_value(inst)


def test_heuristic_feasible_and_above_oracle():
    gaps = []
    for seed in range(25):
        inst = generate(GenParams(n=7, m=2, alpha=1.0, pmax=8, wmax=5, seed=seed))
        sched = heuristic_ub(inst)
        sched.validate(inst)
        opt = oracle_opt(inst).objective
        assert sched.objective >= opt
        gaps.append(100.0 * (sched.objective - opt) / opt)
    # the local search should keep the average gap modest
    assert sum(gaps) / len(gaps) < 10.0


def test_heuristic_deterministic():
    inst = generate(GenParams(n=9, m=3, alpha=0.5, pmax=9, wmax=6, seed=12))
    assert heuristic_ub(inst) == heuristic_ub(inst)


def test_full_schedule_validate_rejects_bad():
    inst = Instance((Job(1, 2, 1, 1),), 1)
    bad = FullSchedule((((1, 0),),), 2)  # starts before its release
    with pytest.raises(AssertionError):
        bad.validate(inst)
