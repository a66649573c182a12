import numpy as np
import pytest

import helpers
from salb.balance import brute_force_salb
from salb.metric import mst
from salb.mrr import (
    ALGORITHMS,
    MrrInstance,
    PipelineConfig,
    RobotPath,
    auction_path,
    generate_instance,
    insertion_extend,
    instance_from_json,
    instance_to_json,
    mst_beta_pseudo_curvature,
    path_cost,
    report_to_dict,
    rtc_oracles,
    run_pipeline,
    shortcut_path,
    verify_report,
)
SMALL_CFG = PipelineConfig(max_iters=10)


class TestInstances:
    def test_generation_is_deterministic(self):
        a = generate_instance(1, 5, 50, 0.0)
        b = generate_instance(1, 5, 50, 0.0)
        assert instance_to_json(a) == instance_to_json(b)
        assert np.array_equal(a.dist, b.dist)

    def test_json_roundtrip(self):
        inst = generate_instance(9, 3, 7, 12.5)
        again = instance_from_json(instance_to_json(inst))
        assert again.m == 3 and again.n == 7 and again.beta == 12.5 and again.seed == 9
        assert np.allclose(again.dist, inst.dist)

    def test_hand_metric_has_no_json(self, mrr2):
        with pytest.raises(ValueError):
            instance_to_json(mrr2)

    def test_robot_views_are_metrics(self, mrr2):
        from salb.metric import validate_metric

        for j in range(mrr2.m):
            validate_metric(mrr2.robot_metric(j).d)

    def test_invalid_shapes(self):
        with pytest.raises(ValueError):
            MrrInstance(0, 1, 0.0, np.zeros((1, 1)))
        with pytest.raises(ValueError):
            MrrInstance(1, 1, -1.0, np.zeros((2, 2)))
        with pytest.raises(ValueError):
            MrrInstance(2, 2, 0.0, np.zeros((3, 3)))


class TestRtcOracles:
    def test_singleton_is_root_distance(self, mrr2):
        oracles = rtc_oracles(mrr2)
        for j, g in enumerate(oracles):
            for t in range(1, 4):
                assert g(1 << (t - 1)) == mrr2.robot_metric(j).d[0, t]

    def test_mrr2_matches_tree_fixture(self, mrr2):
        g = rtc_oracles(mrr2)[0]
        gs = g.ground
        assert g(gs.mask([1])) == 5.0
        assert g(gs.mask([1, 2])) == 6.0
        assert g(gs.full_mask) == 9.0

    def test_beta_accounting(self):
        inst = generate_instance(2, 2, 3, 10.0)
        g0 = rtc_oracles(generate_instance(2, 2, 3, 0.0))[0]
        g10 = rtc_oracles(inst)[0]
        full = (1 << 3) - 1
        assert g10(full) == pytest.approx(g0(full) + 30.0, abs=1e-9)


class TestShortcut:
    def test_star_tree(self):
        # unit star: root to three leaves, pairwise leaf distance 2
        d = np.ones((4, 4)) * 2.0
        np.fill_diagonal(d, 0.0)
        d[0, 1:] = 1.0
        d[1:, 0] = 1.0
        from salb.metric import validate_metric

        metric = validate_metric(d)
        tree = mst(metric, 0, 0b111)
        path = shortcut_path(metric, tree)
        assert path.visits == (1, 2, 3)
        assert path.cost == 5.0 <= 2 * tree.cost

    def test_single_target(self, mrr2):
        metric = mrr2.robot_metric(0)
        tree = mst(metric, 0, 0b001)
        path = shortcut_path(metric, tree)
        assert path.visits == (1,) and path.cost == tree.cost == 5.0

    def test_path_shaped_tree_is_free(self):
        pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]
        from salb.metric import euclidean_metric

        metric = euclidean_metric(pts)
        tree = mst(metric, 0, 0b111)
        path = shortcut_path(metric, tree)
        assert path.cost == pytest.approx(tree.cost, abs=1e-12)

    @pytest.mark.parametrize("seed", range(15))
    def test_doubling_bound_random(self, seed):
        inst = generate_instance(seed, 1, 7, 0.0)
        metric = inst.robot_metric(0)
        full = (1 << 7) - 1
        tree = mst(metric, 0, full)
        path = shortcut_path(metric, tree)
        assert path.cost <= 2 * tree.cost + 1e-9
        assert sorted(path.visits) == list(range(1, 8))

    def test_beta_added_per_visit(self, mrr2):
        metric = mrr2.robot_metric(0)
        tree = mst(metric, 0, 0b011)
        a = shortcut_path(metric, tree, beta=0.0)
        b = shortcut_path(metric, tree, beta=7.0)
        assert b.cost == pytest.approx(a.cost + 14.0, abs=1e-12)


class TestInsertion:
    def test_empty_path(self, mrr2):
        metric = mrr2.robot_metric(0)
        p = insertion_extend(metric, RobotPath((), 0.0), 2, 0.0)
        assert p.visits == (2,) and p.cost == 3.0

    def test_colinear_insertion(self):
        from salb.metric import euclidean_metric

        pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]
        metric = euclidean_metric(pts)
        base = RobotPath((1, 3), path_cost(metric, (1, 3), 0.0))
        p = insertion_extend(metric, base, 2, 0.0)
        assert p.visits == (1, 2, 3)
        assert p.cost == pytest.approx(3.0, abs=1e-12)

    def test_all_slots_evaluated(self):
        # brute-force every slot and compare
        rng = np.random.default_rng(3)
        from salb.metric import euclidean_metric

        pts = rng.uniform(0, 10, (6, 2))
        metric = euclidean_metric(pts)
        base_visits = (2, 4, 1)
        base = RobotPath(base_visits, path_cost(metric, base_visits, 0.0))
        got = insertion_extend(metric, base, 5, 0.0)
        want = min(
            (path_cost(metric, base_visits[:k] + (5,) + base_visits[k:], 0.0), k)
            for k in range(4)
        )
        assert got.cost == pytest.approx(want[0], abs=1e-9)

    def test_ties_take_earliest_slot(self):
        d = np.zeros((3, 3))  # all distances zero: every slot ties
        inst_metric = type("M", (), {"d": d})()
        base = RobotPath((1,), 0.0)
        p = insertion_extend(inst_metric, base, 2, 0.0)
        assert p.visits == (2, 1)

    def test_duplicate_target_rejected(self, mrr2):
        metric = mrr2.robot_metric(0)
        with pytest.raises(ValueError):
            insertion_extend(metric, RobotPath((2,), 3.0), 2, 0.0)


class TestAuction:
    def test_single_target_goes_to_nearest_robot(self):
        inst = generate_instance(5, 3, 1, 0.0)
        paths, part = auction_path(inst)
        nearest = int(np.argmin(inst.dist[:3, 3]))
        assert part.assignment == (nearest,)

    def test_single_robot_is_pure_insertion(self):
        inst = generate_instance(6, 1, 5, 0.0)
        paths, part = auction_path(inst)
        assert sorted(paths[0].visits) == [1, 2, 3, 4, 5]
        assert part.assignment == (0,) * 5

    def test_matches_independent_replay(self):
        # independent reimplementation of the auction rule
        inst = generate_instance(11, 2, 4, 0.0)
        paths, part = auction_path(inst)

        metrics = [inst.robot_metric(j) for j in range(2)]
        ref_paths = [(), ()]
        unassigned = [1, 2, 3, 4]
        ref_assign = {}
        while unassigned:
            bids = []
            for j in (0, 1):
                for t in unassigned:
                    best = None
                    for k in range(len(ref_paths[j]) + 1):
                        visits = ref_paths[j][:k] + (t,) + ref_paths[j][k:]
                        c = path_cost(metrics[j], visits, 0.0)
                        if best is None or c < best[0] - 1e-15:
                            best = (c, visits)
                    bids.append((best[0], t, j, best[1]))
            cost, t, j, visits = min(bids)
            ref_paths[j] = visits
            ref_assign[t] = j
            unassigned.remove(t)
        assert part.assignment == tuple(ref_assign[t] for t in (1, 2, 3, 4))
        for j in (0, 1):
            assert paths[j].visits == ref_paths[j]

    def test_every_target_assigned_once(self):
        inst = generate_instance(13, 3, 9, 5.0)
        paths, part = auction_path(inst)
        seen = [t for p in paths for t in p.visits]
        assert sorted(seen) == list(range(1, 10))
        for j, p in enumerate(paths):
            assert p.cost == pytest.approx(path_cost(inst.robot_metric(j), p.visits, 5.0), abs=1e-9)


class TestPseudoCurvature:
    def test_beta_zero_is_exactly_one(self):
        assert mst_beta_pseudo_curvature(generate_instance(1, 5, 12, 0.0)) == 1.0

    def test_strictly_decreasing_in_beta(self):
        vals = [mst_beta_pseudo_curvature(generate_instance(1, 5, 12, b)) for b in (0, 10, 30, 60, 120)]
        assert all(vals[k + 1] < vals[k] for k in range(len(vals) - 1))

    def test_no_targets(self):
        assert mst_beta_pseudo_curvature(generate_instance(1, 2, 0, 0.0)) == 0.0


class TestPipelines:
    @pytest.mark.parametrize("algo", ALGORITHMS)
    def test_reports_recompute(self, algo):
        inst = generate_instance(21, 3, 8, 0.0)
        rep = run_pipeline(inst, algo, SMALL_CFG)
        verify_report(inst, rep)
        assert rep.lb <= rep.rtc + 1e-9
        assert rep.alpha_max >= 1.0

    @pytest.mark.parametrize("algo", ALGORITHMS)
    def test_beta_reports_recompute(self, algo):
        inst = generate_instance(22, 3, 8, 15.0)
        rep = run_pipeline(inst, algo, SMALL_CFG)
        verify_report(inst, rep)
        assert rep.lb <= rep.rtc + 1e-9

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            run_pipeline(generate_instance(1, 2, 2, 0.0), "SIMULATED_ANNEALING")

    def test_best_so_far_guarantee(self):
        for seed in range(5):
            inst = generate_instance(seed, 3, 9, 0.0)
            rg = run_pipeline(inst, "GREEDY", SMALL_CFG)
            rmg = run_pipeline(inst, "MMIN_GREEDY", SMALL_CFG)
            assert rmg.rtc <= rg.rtc + 1e-12

    def test_lb_below_brute_force_small(self):
        inst = generate_instance(31, 2, 7, 0.0)
        _, opt = brute_force_salb(rtc_oracles(inst))
        for algo in ALGORITHMS:
            rep = run_pipeline(inst, algo, SMALL_CFG)
            assert rep.lb <= opt + 1e-9
            assert rep.rtc >= opt - 1e-9

    def test_shortcut_paths_within_double_tree(self):
        inst = generate_instance(41, 3, 9, 0.0)
        rep = run_pipeline(inst, "GREEDY", SMALL_CFG)
        for j, p in enumerate(rep.paths):
            tree = mst(inst.robot_metric(j), 0, rep.partition.part(j))
            assert p.cost <= 2 * tree.cost + 1e-9

    def test_paths_beat_tour_lower_bound(self):
        # every emitted path is at least the optimal open tour
        inst = generate_instance(43, 2, 6, 0.0)
        for algo in ALGORITHMS:
            rep = run_pipeline(inst, algo, SMALL_CFG)
            for j, p in enumerate(rep.paths):
                metric = inst.robot_metric(j)
                best = helpers.best_open_tour(metric.d, 0, list(p.visits))
                assert p.cost >= best - 1e-9

    def test_no_targets(self):
        inst = generate_instance(3, 2, 0, 0.0)
        for algo in ALGORITHMS:
            rep = run_pipeline(inst, algo, SMALL_CFG)
            assert rep.rtc == 0.0 and rep.rpc == 0.0 and rep.lb == 0.0
            assert rep.alpha_max == 1.0

    def test_mrr2_greedy_regression(self, mrr2):
        rep = run_pipeline(mrr2, "GREEDY", SMALL_CFG)
        assert rep.partition.assignment == (0, 0, 1)
        assert rep.rtc == 6.0
        verify_report(mrr2, rep)

    def test_report_dict_fields(self):
        inst = generate_instance(51, 2, 5, 7.0)
        rep = run_pipeline(inst, "MMIN", SMALL_CFG)
        d = report_to_dict(rep)
        assert d["algo"] == "MMIN" and d["beta"] == 7.0
        assert d["trace"] is not None and d["cert"] is not None
        assert len(d["paths"]) == 2
        assert d["iters"] == rep.iters > 0
