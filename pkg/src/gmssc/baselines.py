"""Reference competitors for the online experiments."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DeskScaleError, WrongDemandError
from .model import Instance, Permutation, access_cost

BRUTE_FORCE_MAX_N = 8
MWU_MAX_N = 6


@dataclass(frozen=True)
class BaselineResult:
    """Costs of a baseline on an instance.

    ``permutations`` holds one entry for a fixed permutation or one per round.
    """

    name: str
    permutations: tuple[Permutation, ...]
    costs: tuple[float, ...]
    total_cost: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_cost", float(sum(self.costs)))

    def permutation_at(self, t: int) -> Permutation:
        """Permutation played in round ``t`` (1-indexed)."""
        return self.permutations[0] if len(self.permutations) == 1 else self.permutations[t - 1]


def _require_demand_one(inst: Instance, what: str):
    for i, r in enumerate(inst.requests):
        if r.demand != 1:
            raise WrongDemandError(f"{what} supports demand 1 only; request {i} has demand {r.demand}")


def flt_greedy(inst: Instance) -> Permutation:
    """Greedy for min-sum set cover: take the item hitting most uncovered requests."""
    _require_demand_one(inst, "flt_greedy")
    n = inst.n
    if not inst.requests:
        return Permutation.identity(n)
    inc = np.zeros((len(inst.requests), n), dtype=np.int64)
    for t, r in enumerate(inst.requests):
        inc[t, r.index] = 1
    uncovered = np.ones(len(inst.requests), dtype=bool)
    avail = np.ones(n, dtype=bool)
    order = []
    while uncovered.any():
        hits = inc[uncovered].sum(axis=0)
        hits[~avail] = -1
        e = int(np.argmax(hits))  # first maximum, i.e. smallest id
        order.append(e + 1)
        avail[e] = False
        uncovered &= inc[:, e] == 0
    order += [e + 1 for e in range(n) if avail[e]]
    return Permutation(tuple(order))


def total_cost(pi: Permutation, inst: Instance) -> int:
    return sum(access_cost(pi, r) for r in inst.requests)


def _all_costs(inst: Instance, perms: np.ndarray) -> np.ndarray:
    """``(n!, T)`` access costs for the permutations in ``perms`` (rows, 0-indexed items)."""
    P, n = perms.shape
    pos = np.empty_like(perms)
    pos[np.arange(P)[:, None], perms] = np.arange(1, n + 1)[None, :]
    out = np.empty((P, len(inst.requests)), dtype=np.int64)
    for t, r in enumerate(inst.requests):
        sub = pos[:, r.index]
        out[:, t] = np.partition(sub, r.demand - 1, axis=1)[:, r.demand - 1]
    return out


def _perm_table(n: int) -> np.ndarray:
    # itertools yields in lexicographic order
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def brute_force_opt(inst: Instance, max_n: int = BRUTE_FORCE_MAX_N) -> tuple[Permutation, int]:
    """Exact best fixed permutation; ties go to the lexicographically smallest."""
    n = inst.n
    if n > max_n:
        raise DeskScaleError("permutations for brute force", math.factorial(n), math.factorial(max_n))
    perms = _perm_table(n)
    totals = _all_costs(inst, perms).sum(axis=1) if inst.requests else np.zeros(len(perms), dtype=np.int64)
    i = int(np.argmin(totals))
    return Permutation(tuple((perms[i] + 1).tolist())), int(totals[i])


def random_perm_baseline(inst: Instance, seed: int) -> BaselineResult:
    """A fresh uniformly random permutation every round."""
    rng = np.random.default_rng(seed)
    perms, costs = [], []
    for r in inst.requests:
        pi = Permutation(tuple((rng.permutation(inst.n) + 1).tolist()))
        perms.append(pi)
        costs.append(float(access_cost(pi, r)))
    return BaselineResult("random", tuple(perms), tuple(costs))


@dataclass(frozen=True)
class MWUResult:
    """Per-round distributions over the ``n!`` permutations (lexicographic order)."""

    permutations: np.ndarray  # (n!, n), 1-indexed items
    distributions: np.ndarray  # (T + 1, n!); row t is the distribution played in round t + 1
    expected_costs: np.ndarray  # (T,)
    eta: float

    @property
    def final(self) -> np.ndarray:
        return self.distributions[-1]


def mwu_permutations(inst: Instance, eta: Optional[float] = None, max_n: int = MWU_MAX_N) -> MWUResult:
    """Hedge over all permutations with losses ``access_cost / n`` in ``[0, 1]``.

    The default rate is ``sqrt(ln(n!) / T)``.
    """
    n = inst.n
    if n > max_n:
        raise DeskScaleError("permutation experts for MWU", math.factorial(n), math.factorial(max_n))
    perms = _perm_table(n)
    P, T = len(perms), inst.T
    if eta is None:
        eta = math.sqrt(math.log(P) / T) if T > 0 and P > 1 else 0.0
    costs = _all_costs(inst, perms).astype(float) if T else np.zeros((P, 0))
    dists = np.empty((T + 1, P))
    expected = np.empty(T)
    logw = np.zeros(P)
    for t in range(T + 1):
        w = np.exp(logw - logw.max())
        dists[t] = w / w.sum()
        if t == T:
            break
        expected[t] = float(dists[t] @ costs[:, t])
        logw -= eta * costs[:, t] / n
    return MWUResult(perms + 1, dists, expected, eta)
