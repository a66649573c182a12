"""Acceptance criteria, one test per criterion.

Each test prints a PASS line with its headline numbers (visible under
pytest -s). Criterion 8 is the desk-scale routing experiment and
dominates the runtime; everything else is seconds.
"""

import json
import time

import numpy as np
import pytest

import helpers
from salb import cli
from salb.balance import (
    brute_force_salb,
    greedy,
    initial_partition,
    mmin,
    modular_approx,
    mst_lower_bound,
    smlb_lower_bound,
)
from salb.interp import SampleCollection, edmonds_greedy, interp_eval, interp_oracle
from salb.metric import (
    bird_weights,
    facility_location,
    mst_beta_oracle,
    mst_oracle,
    random_euclidean_metric,
)
from salb.mlb import mlb_problem, solve_mlb_exact, solve_mlb_lst
from salb.mrr import generate_instance, mst_beta_pseudo_curvature, rtc_oracles
from salb.setfn import GroundSet, audit


@pytest.fixture(scope="module")
def salb_instances():
    """50 seeded tree-cost balancing instances: n <= 8, m in {2, 3},
    waiting time 0 or 5. Shared by criteria 5 and 6."""
    out = []
    for seed in range(50):
        m = 2 + seed % 2
        n = 5 + seed % 4
        beta = 0.0 if seed % 2 == 0 else 5.0
        metrics = [random_euclidean_metric(1000 + seed * 7 + r, n, extent=10.0) for r in range(m)]
        suite = [mst_beta_oracle(mtr, 0, beta) for mtr in metrics]
        out.append((seed, metrics, beta, suite))
    return out


@pytest.fixture(scope="module")
def salb_optima(salb_instances):
    return {seed: brute_force_salb(suite) for seed, _, _, suite in salb_instances}


def test_criterion_01_fixture_exactness(msta, mstb, fl_inst):
    t0 = time.time()
    gs = GroundSet(3)
    ga = mst_oracle(msta)
    assert ga(gs.mask([1, 3])) == 10.0
    assert ga(gs.full_mask) == 9.0
    gb = mst_oracle(mstb)
    assert gb(gs.mask([1])) == 5.0
    assert gb(gs.mask([1, 2])) == 6.0
    assert gb(gs.mask([1, 3])) == 6.0
    assert gb(gs.mask([2, 3])) == 6.0
    assert gb(gs.full_mask) == 9.0
    assert facility_location(fl_inst, gs.mask([2])) == 2.0
    assert facility_location(fl_inst, gs.mask([1, 2])) == 3.0
    assert facility_location(fl_inst, gs.full_mask) == 5.0
    elapsed = time.time() - t0
    assert elapsed < 1.0
    print(f"\nCRITERION 1 PASS: fixture values exact ({elapsed:.3f}s)")


def test_criterion_02_interpolation(quad):
    t0 = time.time()
    gs = quad.ground
    coll = SampleCollection(gs, tuple((m, quad(m)) for m in range(1, 7)))
    for i in (1, 2, 3):
        assert interp_eval(coll, gs.mask([i])) == pytest.approx(6.0, abs=1e-7)
    for pair in ([1, 2], [1, 3], [2, 3]):
        assert interp_eval(coll, gs.mask(pair)) == pytest.approx(10.0, abs=1e-7)
    assert interp_eval(coll, gs.full_mask) == pytest.approx(15.0, abs=1e-7)
    g = interp_oracle(coll)
    assert audit(g, "subadditive").holds is True
    assert audit(g, "nondecreasing").holds is True
    assert audit(g, "submodular").holds is False
    elapsed = time.time() - t0
    assert elapsed < 1.0
    print(f"\nCRITERION 2 PASS: interpolation values and audits ({elapsed:.3f}s)")


def test_criterion_03_counterexample_suite(mstb, fl_inst):
    g = mst_oracle(mstb)
    gs = g.ground
    m1 = modular_approx(g, gs.mask([1]), "remove_at_ground")
    assert m1(gs.full_mask) == 7.0 < g(gs.full_mask) == 9.0
    m2 = modular_approx(g, gs.full_mask, "add_at_empty")
    assert m2(gs.mask([1])) == 3.0 < g(gs.mask([1])) == 5.0
    from salb.metric import facility_oracle

    for oracle in (g, facility_oracle(fl_inst)):
        rep = audit(oracle, "submodular")
        assert rep.holds is False
        w = rep.witness
        s, t = w.sets[0], w.sets[1]
        lhs = oracle(s) + oracle(t)
        rhs = oracle(s | t) + oracle(s & t)
        assert lhs < rhs - 1e-9  # the witness re-verifies
    print("\nCRITERION 3 PASS: majorization counterexamples and submodularity witnesses")


def test_criterion_04_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    lst_checked = 0
    for trial in range(100):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(1, 9))
        offsets = rng.uniform(0, 2, m)
        costs = rng.uniform(-1, 5, (m, n)) if trial % 2 else rng.uniform(0, 5, (m, n))
        p = mlb_problem(offsets, costs)
        part, val = solve_mlb_exact(p)
        want_a, want_v = helpers.mlb_opt_by_enumeration(p)
        assert abs(val - want_v) < 1e-9
        assert part.assignment == want_a
        if (costs >= 0).all():
            _, lst_val = solve_mlb_lst(p)
            assert want_v - 1e-9 <= lst_val <= 2 * want_v + 1e-7
            lst_checked += 1
    elapsed = time.time() - t0
    assert elapsed < 30.0
    print(f"\nCRITERION 4 PASS: 100 exact==enumeration, {lst_checked} rounding runs in [OPT, 2 OPT] ({elapsed:.1f}s)")


def test_criterion_05_approximation_factor(salb_instances, salb_optima):
    t0 = time.time()
    violations = 0
    for seed, metrics, beta, suite in salb_instances:
        opt_part, opt = salb_optima[seed]
        trace = mmin(suite, initial_partition(suite))
        worst_part = max(mask.bit_count() for mask in opt_part.parts())
        bound = 2 * worst_part * opt
        if trace.best_objective > bound + 1e-9:
            violations += 1
    elapsed = time.time() - t0
    assert violations == 0
    assert elapsed < 120.0
    print(f"\nCRITERION 5 PASS: factor bound held on 50/50 instances ({elapsed:.1f}s)")


def test_criterion_06_lower_bound_validity(salb_instances, salb_optima):
    t0 = time.time()
    violations = 0
    for seed, metrics, beta, suite in salb_instances:
        _, opt = salb_optima[seed]
        for part in (greedy(suite), mmin(suite, initial_partition(suite)).best_partition):
            cert = mst_lower_bound(metrics, beta, part)
            if cert.value > opt + 1e-9:
                violations += 1
        # companion submodular suites on the same seeds
        fs = [helpers.coverage_oracle(seed * 11 + r, suite[0].ground.n) for r in range(len(suite))]
        _, sub_opt = brute_force_salb(fs)
        sub_cert = smlb_lower_bound(fs, greedy(fs))
        if sub_cert.value > sub_opt + 1e-9:
            violations += 1
        # core property of the tree cost shares, all subsets
        for mtr in metrics:
            bw = bird_weights(mtr)
            g = mst_oracle(mtr)
            for mask in GroundSet(mtr.n).subsets():
                if bw.share(mask) > g(mask) + 1e-9:
                    violations += 1
    assert violations == 0
    elapsed = time.time() - t0
    print(f"\nCRITERION 6 PASS: zero lower-bound or core violations on 50 instances ({elapsed:.1f}s)")


def test_criterion_07_prefix_greedy(quad):
    fixtures = [quad] + [helpers.coverage_oracle(seed, 6) for seed in range(20)]
    rng = np.random.default_rng(7)
    for f in fixtures:
        n = f.ground.n
        order = tuple(int(x) for x in rng.permutation(n) + 1)
        w = edmonds_greedy(f, order)
        prefix = 0
        for v in order:
            prefix |= 1 << (v - 1)
            tight = sum(w[i - 1] for i in f.ground.elements(prefix))
            assert tight == pytest.approx(f(prefix), abs=1e-9)
        for mask in f.ground.subsets():
            assert sum(w[i - 1] for i in f.ground.elements(mask)) <= f(mask) + 1e-9
    print("\nCRITERION 7 PASS: prefix tightness and polytope membership on 21 fixtures")


def test_criterion_08_desk_scale_experiment(tmp_path):
    t0 = time.time()
    out = tmp_path / "desk"
    code = cli.main([
        "experiment", "--seeds", "1:20", "--m", "5", "--n", "50", "--beta", "0,60",
        "--algo", "GREEDY,MMIN_GREEDY", "--out", str(out),
    ])
    assert code == 0
    rows = (out / "report.csv").read_text().strip().split("\n")[1:]
    assert len(rows) == 20 * 2 * 2
    table = {}
    for row in rows:
        f = row.split(",")
        table[(int(f[0]), float(f[4]), f[1])] = {
            "rtc": float(f[5]), "rpc": float(f[6]), "lb": float(f[7]), "alpha": float(f[8]),
        }
    improvements = []
    for seed in range(1, 21):
        for beta in (0.0, 60.0):
            g = table[(seed, beta, "GREEDY")]
            m = table[(seed, beta, "MMIN_GREEDY")]
            assert m["rtc"] <= g["rtc"] + 1e-9, (seed, beta)
            improvements.append((g["rtc"] - m["rtc"]) / g["rtc"])
    for key, vals in table.items():
        assert np.isfinite(vals["alpha"]) and vals["alpha"] >= 1.0
        assert vals["lb"] <= vals["rtc"] + 1e-9
    # per-robot path cost within twice the robot's tree cost
    for trace_file in (out / "traces").glob("*.json"):
        trace = json.loads(trace_file.read_text())
        inst = generate_instance(trace["seed"], trace["m"], trace["n"], trace["beta"])
        oracles = rtc_oracles(inst)
        from salb.setfn import Partition

        part = Partition(tuple(trace["assignment"]), trace["m"])
        for j, pth in enumerate(trace["paths"]):
            rtc_j = oracles[j](part.part(j))
            assert pth["cost"] <= 2 * rtc_j + 1e-9, (trace_file.name, j)
    mean_improvement = float(np.mean(improvements))
    elapsed = time.time() - t0
    assert mean_improvement > 0.0
    assert elapsed < 600.0
    print(
        f"\nCRITERION 8 PASS: 40/40 never-worse, mean improvement "
        f"{100 * mean_improvement:.2f}%, per-robot paths within 2x tree cost ({elapsed:.0f}s)"
    )


def test_criterion_09_pseudo_curvature():
    inst0 = generate_instance(1, 5, 12, 0.0)
    assert mst_beta_pseudo_curvature(inst0) == 1.0
    values = [mst_beta_pseudo_curvature(generate_instance(1, 5, 12, b)) for b in (0.0, 10.0, 30.0, 60.0)]
    assert all(values[k + 1] < values[k] for k in range(3))
    print(f"\nCRITERION 9 PASS: surrogate curvature 1 at beta=0, strictly decreasing {['%.4f' % v for v in values]}")


def test_criterion_10_reproducibility(tmp_path, monkeypatch):
    monkeypatch.setenv("SALB_THREADS", "2")
    outputs = []
    for name in ("run1", "run2"):
        inst_dir = tmp_path / name / "instances"
        exp_dir = tmp_path / name / "exp"
        assert cli.main(["gen", "--seeds", "1:3", "--m", "3", "--n", "12", "--beta", "0", "--out", str(inst_dir)]) == 0
        assert cli.main([
            "experiment", "--seeds", "1:3", "--m", "3", "--n", "12", "--beta", "0,10",
            "--algo", "GREEDY,MMIN,MMIN_GREEDY,AUCTION_PATH", "--out", str(exp_dir),
        ]) == 0
        instance_bytes = {p.name: p.read_bytes() for p in sorted(inst_dir.glob("*.json"))}
        outputs.append((instance_bytes, (exp_dir / "report.csv").read_bytes(), (exp_dir / "summary.csv").read_bytes()))
    assert outputs[0][0] == outputs[1][0]
    assert outputs[0][1] == outputs[1][1]
    assert outputs[0][2] == outputs[1][2]
    print("\nCRITERION 10 PASS: byte-identical instances, report, and summary across runs")
