import itertools
import math

import numpy as np
import pytest

from conftest import random_perm, random_request
from gmssc.baselines import (
    brute_force_opt,
    flt_greedy,
    mwu_permutations,
    random_perm_baseline,
    total_cost,
)
from gmssc.errors import DeskScaleError, WrongDemandError
from gmssc.model import Instance, Permutation, Request, requests_from_lists


def random_instance(rng, n, T, demand_one=True, max_size=None):
    return Instance(n, tuple(random_request(rng, n, max_size=max_size, demand=1 if demand_one else None) for _ in range(T)))


def local_search(inst, rng, restarts=5):
    """Swap-neighbourhood descent from random starts; an upper bound on the optimum."""
    best = math.inf
    for _ in range(restarts):
        order = list(random_perm(rng, inst.n).order)
        cur = total_cost(Permutation(tuple(order)), inst)
        improved = True
        while improved:
            improved = False
            for i, j in itertools.combinations(range(inst.n), 2):
                order[i], order[j] = order[j], order[i]
                c = total_cost(Permutation(tuple(order)), inst)
                if c < cur:
                    cur, improved = c, True
                else:
                    order[i], order[j] = order[j], order[i]
        best = min(best, cur)
    return best


class TestFLT:
    def test_majority_first(self):
        assert flt_greedy(requests_from_lists(3, [[1], [1], [2]])).order[0] == 1

    def test_single_request(self):
        pi = flt_greedy(requests_from_lists(5, [[2, 4, 5]]))
        assert pi.order[0] in {2, 4, 5}

    def test_ties_to_smallest_id(self):
        assert flt_greedy(requests_from_lists(4, [[3, 4], [2, 3]])).order == (3, 1, 2, 4)

    def test_rejects_demand(self):
        with pytest.raises(WrongDemandError):
            flt_greedy(Instance(3, (Request(frozenset({1, 2}), 2),)))

    def test_within_four_of_optimum(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 8))
            inst = random_instance(rng, n, int(rng.integers(1, 15)))
            pi = flt_greedy(inst)
            _, opt = brute_force_opt(inst)
            assert sorted(pi.order) == list(range(1, n + 1))
            assert opt <= total_cost(pi, inst) <= 4 * opt


class TestBruteForce:
    def test_empty(self):
        pi, c = brute_force_opt(Instance(4, ()))
        assert pi == Permutation.identity(4) and c == 0

    def test_lexicographic_tie(self):
        assert brute_force_opt(requests_from_lists(3, [[3]])) == (Permutation((3, 1, 2)), 1)

    def test_never_beaten_by_local_search(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            inst = random_instance(rng, n, int(rng.integers(1, 10)), demand_one=False)
            pi, c = brute_force_opt(inst)
            assert c == total_cost(pi, inst)
            assert c <= local_search(inst, rng)

    def test_cap(self):
        with pytest.raises(DeskScaleError):
            brute_force_opt(Instance(9, ()))


class TestRandom:
    def test_singleton_mean(self):
        n = 9
        res = random_perm_baseline(requests_from_lists(n, [[4]] * 10**4), seed=0)
        assert abs(np.mean(res.costs) - (n + 1) / 2) <= 0.03 * (n + 1) / 2

    def test_n1_and_total(self):
        res = random_perm_baseline(requests_from_lists(1, [[1]] * 5), seed=3)
        assert res.costs == (1.0,) * 5 and res.total_cost == 5

    def test_reproducible(self, rng):
        inst = random_instance(rng, 6, 30)
        assert random_perm_baseline(inst, 7) == random_perm_baseline(inst, 7)
        res = random_perm_baseline(inst, 7)
        assert res.permutation_at(3) == res.permutations[2]


class TestMWU:
    def test_empty_is_uniform(self):
        res = mwu_permutations(Instance(3, ()))
        assert np.allclose(res.final, 1 / 6)

    def test_concentrates(self):
        inst = requests_from_lists(4, [[2]] * 2000)
        res = mwu_permutations(inst, eta=0.1)
        optimal = res.permutations[:, 0] == 2
        assert res.final[optimal].sum() >= 0.99

    def test_regret_envelope(self, rng):
        for _ in range(5):
            n = int(rng.integers(2, 6))
            T = 300
            inst = random_instance(rng, n, T)
            eta = 0.1
            res = mwu_permutations(inst, eta)
            _, opt = brute_force_opt(inst)
            gap = res.expected_costs.mean() - opt / T
            envelope = n * math.log(math.factorial(n)) / (eta * T) + eta * n
            assert -envelope <= gap <= envelope

    def test_default_eta_and_cap(self):
        inst = requests_from_lists(3, [[1]] * 16)
        assert mwu_permutations(inst).eta == pytest.approx(math.sqrt(math.log(6) / 16))
        with pytest.raises(DeskScaleError):
            mwu_permutations(Instance(7, ()))
