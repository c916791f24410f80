import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmssc.errors import DimensionError, InfeasibleMatrixError, InstanceFormatError, InvalidRequestError
from gmssc.model import (
    DSMatrix,
    Instance,
    Permutation,
    Request,
    access_cost,
    access_cost_matrix_form,
    matrix_to_perm,
    parse_instance,
    perm_to_matrix,
    requests_from_lists,
    serialize_instance,
)


def req(items, k=1):
    return Request(frozenset(items), k)


@st.composite
def perm_and_request(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    order = draw(st.permutations(range(1, n + 1)))
    items = draw(st.sets(st.integers(1, n), min_size=1))
    k = draw(st.integers(1, len(items)))
    return Permutation(tuple(order)), Request(frozenset(items), k)


def naive_access_cost(order, items, k):
    seen = 0
    for i, e in enumerate(order, start=1):
        seen += e in items
        if seen >= k:
            return i
    raise AssertionError("demand never met")


class TestPermutation:
    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            Permutation((1, 1, 3))
        with pytest.raises(ValueError):
            Permutation((0, 1))

    def test_positions(self):
        p = Permutation((3, 1, 2))
        assert p.position_of(3) == 1
        assert p.position_of(2) == 3


class TestRequest:
    @pytest.mark.parametrize("items,k", [((), 1), ((1, 2), 0), ((1, 2), 3), ((0,), 1)])
    def test_invalid(self, items, k):
        with pytest.raises(InvalidRequestError):
            Request(frozenset(items), k)

    def test_outside_universe(self):
        with pytest.raises(InvalidRequestError):
            access_cost(Permutation.identity(3), req({4}))


class TestAccessCost:
    def test_examples(self):
        ident = Permutation.identity(8)
        assert access_cost(ident, req({3, 5}, 2)) == 5
        assert access_cost(ident, req({1})) == 1
        assert access_cost(Permutation((5, 4, 3, 2, 1)), req({2, 4})) == 2

    @settings(max_examples=300, deadline=None)
    @given(perm_and_request())
    def test_matches_naive_and_matrix_form(self, pr):
        pi, r = pr
        c = access_cost(pi, r)
        assert c == naive_access_cost(pi.order, r.items, r.demand)
        assert access_cost_matrix_form(perm_to_matrix(pi), r) == c
        assert r.demand <= c <= pi.n

    @settings(max_examples=100, deadline=None)
    @given(perm_and_request(), st.randoms(use_true_random=False))
    def test_invariant_to_shuffling_other_items(self, pr, rnd):
        pi, r = pr
        order = list(pi.order)
        slots = [i for i, e in enumerate(order) if e not in r.items]
        others = [order[i] for i in slots]
        rnd.shuffle(others)
        for i, e in zip(slots, others):
            order[i] = e
        assert access_cost(Permutation(tuple(order)), r) == access_cost(pi, r)


class TestMatrixForm:
    def test_uniform_n4(self):
        # 1 + 3/4 + 1/2 + 1/4
        assert access_cost_matrix_form(np.full((4, 4), 0.25), req({1})) == pytest.approx(2.5, abs=1e-12)

    def test_full_demand(self):
        n = 5
        r = req(range(1, n + 1), n)
        assert access_cost_matrix_form(perm_to_matrix(Permutation((2, 4, 1, 5, 3))), r) == n

    def test_shape_mismatch(self):
        with pytest.raises((DimensionError, InvalidRequestError)):
            access_cost_matrix_form(np.eye(2), req({3}))
        with pytest.raises(DimensionError):
            access_cost_matrix_form(np.ones((2, 3)), req({1}))

    def test_fractional_against_exact_arithmetic(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            num = rng.integers(0, 5, size=(n, n))
            r = req(set(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False) + 1), 1)
            a = num / 7.0
            k = Fraction(r.demand)
            tot = Fraction(0)
            for i in range(n):
                before = sum(Fraction(int(num[e - 1, j]), 7) for e in r.items for j in range(i))
                tot += min(Fraction(1), max(Fraction(0), k - before))
            assert access_cost_matrix_form(a, r) == pytest.approx(float(tot), abs=1e-12)


class TestMatrices:
    def test_perm_to_matrix_examples(self):
        assert np.array_equal(perm_to_matrix(Permutation.identity(3)).entries, np.eye(3))
        assert np.array_equal(perm_to_matrix(Permutation((2, 1))).entries, [[0, 1], [1, 0]])

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 10))
            pi = Permutation(tuple((rng.permutation(n) + 1).tolist()))
            assert matrix_to_perm(perm_to_matrix(pi)) == pi

    def test_uniform_valid(self):
        for n in (1, 2, 3, 4, 8):
            DSMatrix(np.full((n, n), 1.0 / n), tol=0.0)
        assert DSMatrix.uniform(7).n == 7

    def test_infeasible(self):
        with pytest.raises(InfeasibleMatrixError):
            DSMatrix(np.array([[0.6, 0.5], [0.4, 0.5]]))
        with pytest.raises(InfeasibleMatrixError):
            DSMatrix(np.array([[1.5, -0.5], [-0.5, 1.5]]))

    def test_entries_read_only(self):
        a = DSMatrix.uniform(3)
        with pytest.raises(ValueError):
            a.entries[0, 0] = 1.0


class TestSerialization:
    def test_empty(self):
        inst = parse_instance(b'{"n": 3, "requests": []}')
        assert inst.n == 3 and inst.T == 0

    def test_demand_zero_names_request(self):
        doc = {"n": 3, "requests": [{"items": [1], "k": 1}, {"items": [2], "k": 0}]}
        with pytest.raises(InstanceFormatError, match="request 1"):
            parse_instance(json.dumps(doc))

    @pytest.mark.parametrize(
        "req_obj",
        [{"items": [1, 1], "k": 1}, {"items": [4], "k": 1}, {"items": [1], "k": 2}, {"k": 1}, {"items": [1], "k": 1, "x": 0}],
    )
    def test_malformed_request(self, req_obj):
        doc = {"n": 3, "requests": [req_obj]}
        with pytest.raises(InstanceFormatError, match="request 0"):
            parse_instance(json.dumps(doc))

    def test_not_json(self):
        with pytest.raises(InstanceFormatError):
            parse_instance(b"n = 3")

    def test_round_trip_random(self):
        rng = np.random.default_rng(11)
        n = 12
        reqs = []
        for _ in range(50):
            size = int(rng.integers(1, n + 1))
            items = frozenset((rng.choice(n, size=size, replace=False) + 1).tolist())
            reqs.append(Request(items, int(rng.integers(1, size + 1))))
        inst = Instance(n, tuple(reqs))
        data = serialize_instance(inst)
        assert parse_instance(data) == inst
        assert serialize_instance(parse_instance(data)) == data

    def test_requests_from_lists(self):
        inst = requests_from_lists(4, [[1, 2], [3]])
        assert inst.T == 2 and inst.requests[1] == req({3})
