import math

import pytest

from relsched.instance import (
    GenParams,
    Instance,
    InstanceFormatError,
    Job,
    generate,
    horizon,
    read_instance,
    release_bound,
    write_instance,
)


def test_job_invariants():
    with pytest.raises(ValueError):
        Job(1, 0, 0, 1)
    with pytest.raises(ValueError):
        Job(1, 1, -1, 1)
    with pytest.raises(ValueError):
        Job(1, 1, 0, 0)


def test_instance_id_gaps_rejected():
    with pytest.raises(ValueError):
        Instance((Job(1, 1, 0, 1), Job(3, 1, 0, 1)), 1)


def test_generate_release_range_alpha02():
    # n=50, m=2, alpha=0.2 puts every release in [0, 252]
    params = GenParams(n=50, m=2, alpha=0.2, pmax=100, wmax=10, seed=11)
    assert release_bound(params) == 252
    inst = generate(params)
    assert all(0 <= j.r <= 252 for j in inst.jobs)


def test_generate_ranges_bulk():
    # > 10^4 draws per field across seeds
    ps, ws, rs = [], [], []
    bound = release_bound(GenParams(n=3500, m=3, alpha=1.0, pmax=17, wmax=5, seed=0))
    for seed in range(3):
        inst = generate(GenParams(n=3500, m=3, alpha=1.0, pmax=17, wmax=5, seed=seed))
        ps += [j.p for j in inst.jobs]
        ws += [j.w for j in inst.jobs]
        rs += [j.r for j in inst.jobs]
    assert len(ps) > 10_000
    assert min(ps) >= 1 and max(ps) <= 17
    assert min(ws) >= 1 and max(ws) <= 5
    assert min(rs) >= 0 and max(rs) <= bound
    # both ends of the inclusive ranges are actually hit over many draws
    assert 1 in ps and 17 in ps
    assert 1 in ws and 5 in ws
    # narrow release range so the inclusive ends are observable
    narrow = GenParams(n=3500, m=3, alpha=0.0003, pmax=17, wmax=5, seed=1)
    nb = release_bound(narrow)
    nrs = [j.r for j in generate(narrow).jobs]
    assert 1 <= nb <= 30
    assert 0 in nrs and nb in nrs and max(nrs) <= nb


def test_generate_alpha_spreads_releases():
    wide = []
    tight = []
    for seed in range(100):
        wide.append(max(j.r for j in generate(GenParams(20, 2, 3.0, 10, 5, seed)).jobs))
        tight.append(max(j.r for j in generate(GenParams(20, 2, 0.2, 10, 5, seed)).jobs))
    assert max(tight) <= release_bound(GenParams(20, 2, 0.2, 10, 5, 0))
    assert sum(wide) / len(wide) > sum(tight) / len(tight)


def test_generate_deterministic():
    params = GenParams(n=20, m=2, alpha=1.0, pmax=100, wmax=10, seed=7)
    assert generate(params) == generate(params)


def test_horizon_formula():
    inst = Instance((Job(1, 3, 0, 1), Job(2, 5, 2, 1), Job(3, 4, 0, 1)), 2)
    assert horizon(inst) == 10  # floor(12/2 + 5/2) + 2
    one = Instance((Job(1, 3, 1, 1), Job(2, 5, 0, 1)), 1)
    assert horizon(one) == 8 + 1  # m=1 collapses to sum(p) + rmax
    eq = Instance((Job(1, 2, 0, 1), Job(2, 2, 0, 1), Job(3, 2, 0, 1)), 3)
    assert horizon(eq) == 3  # floor(2 + 4/3)


def test_horizon_fits_wspt_schedule():
    from relsched.bounds import heuristic_ub

    for seed in range(30):
        inst = generate(GenParams(n=8, m=2, alpha=1.5, pmax=9, wmax=4, seed=seed))
        T = horizon(inst)
        assert T >= max(j.r + j.p for j in inst.jobs)
        sched = heuristic_ub(inst)
        done = max((s + inst.job(j).p for mach in sched.machines for j, s in mach), default=0)
        assert done <= T


def test_roundtrip(tmp_path):
    inst = Instance((Job(1, 3, 0, 2), Job(2, 1, 5, 1), Job(3, 2, 2, 4)), 2)
    path = tmp_path / "inst.txt"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_read_malformed_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 1\n3 0 2\np= x\n")
    with pytest.raises(InstanceFormatError, match="line 3"):
        read_instance(path)


def test_read_count_mismatch(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("5 1\n1 0 1\n1 0 1\n1 0 1\n1 0 1\n")
    with pytest.raises(InstanceFormatError, match="job count mismatch"):
        read_instance(path)


def test_release_bound_floor():
    # 0.2*50*50.5/2 = 252.5 floors to 252
    assert release_bound(GenParams(50, 2, 0.2, 100, 10, 0)) == 252
    assert release_bound(GenParams(20, 2, 1.0, 100, 10, 0)) == math.floor(20 * 50.5 / 2)
