import math

import numpy as np
import pytest

from conftest import random_request
from gmssc.costs import sw_cost_closed
from gmssc.errors import DimensionError, GMSSCError
from gmssc.model import DSMatrix, Instance, Permutation, Request, requests_from_lists
from gmssc.opgd import (
    OnlineLearner,
    StepRule,
    offline_subgradient_descent,
    offline_sw_optimum,
    opgd_init,
    opgd_step,
    relaxed_regret_curve,
    run_online,
)
from gmssc.rounding_rand import MSSC_PARAMS, randomized_rounder
from gmssc.subgradient import random_ds_matrix, sw_subgradient_k1


class TestInitAndStep:
    def test_init(self):
        s = opgd_init(3)
        assert s.t == 1 and np.allclose(s.a.entries, 1 / 3)
        assert np.array_equal(opgd_init(1).a.entries, [[1.0]])
        for n in (1, 2, 4, 8):
            DSMatrix(opgd_init(n).a.entries, tol=0.0)

    def test_paper_step_value(self):
        assert StepRule().eta(1, 2, 0.1) == pytest.approx(0.2 / 2**4.5)
        assert StepRule().eta(1, 2, 0.1) == pytest.approx(0.008839, abs=1e-6)

    def test_custom_rule_equals_paper_rule(self):
        for n in (2, 3, 6):
            for t in (1, 5, 100):
                assert StepRule.from_bounds(n, 0.1).eta(t, n, 0.1) == pytest.approx(StepRule().eta(t, n, 0.1))

    def test_custom_rule_validation(self):
        with pytest.raises(ValueError):
            StepRule("custom")
        with pytest.raises(ValueError):
            StepRule("other")

    def test_zero_gradient_keeps_matrix(self):
        s = opgd_init(4)
        s2 = opgd_step(s, np.zeros((4, 4)))
        assert s2.t == 2 and np.array_equal(s2.a.entries, s.a.entries)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            opgd_step(opgd_init(3), np.zeros((4, 4)))

    def test_step_stays_feasible(self, rng):
        s = opgd_init(5, step_rule=StepRule.for_sw(5, 3))
        for _ in range(30):
            r = random_request(rng, 5, max_size=3, demand=1)
            s = opgd_step(s, sw_subgradient_k1(s.a, r))
        assert s.t == 31
        assert np.abs(s.a.entries.sum(axis=0) - 1).max() <= 1e-9
        assert s.a.entries.min() >= -1e-9


class TestRunOnline:
    def test_empty(self):
        assert run_online(Instance(3, ())) == []

    def test_repeated_request_concentrates(self):
        inst = requests_from_lists(4, [[1]] * 500)
        learner = OnlineLearner(4, sw_cost_closed, sw_subgradient_k1, step_rule=StepRule.for_sw(4, 1))
        for r in inst.requests:
            learner.play()
            learner.observe(r)
        assert learner.matrix.entries[0, 0] >= 0.9

    def test_traces(self, rng):
        inst = Instance(5, tuple(random_request(rng, 5, max_size=3, demand=1) for _ in range(40)))
        tr = run_online(inst, rounder=randomized_rounder(MSSC_PARAMS), step_rule=StepRule.for_sw(5, 3), seed=3)
        assert [x.t for x in tr] == list(range(1, 41))
        assert all(x.relaxed_cost >= 0 and x.rounded_cost >= 1 for x in tr)
        again = run_online(inst, rounder=randomized_rounder(MSSC_PARAMS), step_rule=StepRule.for_sw(5, 3), seed=3)
        assert tr == again

    def test_no_rounder_gives_nan(self):
        tr = run_online(requests_from_lists(3, [[1]]))
        assert math.isnan(tr[0].rounded_cost)

    def test_baselines_recorded(self):
        tr = run_online(requests_from_lists(3, [[3], [2]]), baselines={"id": Permutation.identity(3)})
        assert [x.baseline_costs["id"] for x in tr] == [3.0, 2.0]

    def test_no_lookahead(self, rng):
        # iterates and permutations of a prefix run equal those of the full run
        reqs = tuple(random_request(rng, 6, max_size=3, demand=1) for _ in range(30))
        rule = StepRule.for_sw(6, 3)
        full = run_online(Instance(6, reqs), rounder=randomized_rounder(MSSC_PARAMS), step_rule=rule, seed=9)
        part = run_online(Instance(6, reqs[:12]), rounder=randomized_rounder(MSSC_PARAMS), step_rule=rule, seed=9)
        assert full[:12] == part

    def test_observe_before_play(self):
        learner = OnlineLearner(3, sw_cost_closed, sw_subgradient_k1)
        with pytest.raises(RuntimeError):
            learner.observe(Request(frozenset({1})))

    def test_oracle_error_names_round(self):
        inst = Instance(3, (Request(frozenset({1})), Request(frozenset({1, 2}), 2)))
        with pytest.raises(GMSSCError, match="round 2"):
            run_online(inst)


class TestOffline:
    def test_lp_optimum_matches_subgradient_descent(self, rng):
        for _ in range(2):
            reqs = [random_request(rng, 5, max_size=3, demand=1) for _ in range(10)]
            exact, a = offline_sw_optimum(5, reqs)
            approx, _ = offline_subgradient_descent(5, reqs, iters=2000)
            assert exact <= approx + 1e-9
            assert approx - exact <= 0.02
            assert np.mean([sw_cost_closed(a, r) for r in reqs]) == pytest.approx(exact, abs=1e-7)

    def test_lp_optimum_below_random_matrices(self, rng):
        reqs = [random_request(rng, 4, max_size=2, demand=1) for _ in range(10)]
        exact, _ = offline_sw_optimum(4, reqs)
        for _ in range(50):
            b = random_ds_matrix(4, rng)
            assert exact <= np.mean([sw_cost_closed(b, r) for r in reqs]) + 1e-9

    def test_single_request(self):
        val, _ = offline_sw_optimum(4, [Request(frozenset({2}))])
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_regret_curve(self):
        tr = run_online(requests_from_lists(3, [[1]] * 4))
        curve = relaxed_regret_curve(tr, lambda t: 1.0, [2, 4])
        assert len(curve) == 2 and all(c >= 0 for c in curve)
