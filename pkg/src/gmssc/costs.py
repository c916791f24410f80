"""Relaxed access costs of a doubly stochastic matrix.

Two relaxations are provided:

* the fractional access cost (FAC), the value of a configuration LP in which
  a distribution over placements of the request's items is charged a large
  penalty for disagreeing with the matrix;
* the SW cost, an LP over per-position coverage levels, with an O(n |R|)
  closed form when the demand is one.

Both are exact at desk scale: configurations and item subsets are enumerated
explicitly and the LPs are solved densely.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy import sparse

from .errors import DeskScaleError, DimensionError, WrongDemandError
from .lp import solve_lp
from .model import MatrixLike, Request, as_array

DEFAULT_EPSILON = 0.1
CONFIG_CAP = 10**6
SUBSET_CAP = 2**20


@dataclass(frozen=True)
class Configuration:
    """Injective placement of a request's items, as sorted ``(item, position)`` pairs."""

    assignment: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted((int(e), int(j)) for e, j in dict(self.assignment).items()))
        positions = [j for _, j in pairs]
        if len(set(positions)) != len(positions):
            raise ValueError(f"two items share a position in {pairs}")
        if any(j < 1 for j in positions):
            raise ValueError("positions are 1-indexed")
        object.__setattr__(self, "assignment", pairs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Configuration":
        return cls(tuple(mapping.items()))

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(j for _, j in self.assignment)

    def __len__(self):
        return len(self.assignment)


@dataclass(frozen=True)
class FACResult:
    value: float
    primal_weights: dict[Configuration, float]
    penalty: float
    epsilon: float
    max_mismatch: float
    """Largest ``|A_ej - sum_{F : (e, j) in F} y_F|`` over the request's rows."""


@dataclass(frozen=True)
class SWResult:
    value: float
    z: np.ndarray


def config_cost(f: Configuration, demand: int) -> int:
    """Access cost shared by all permutations agreeing with ``f``."""
    if not 1 <= demand <= len(f):
        raise ValueError(f"demand {demand} outside [1, {len(f)}]")
    return sorted(f.positions)[demand - 1]


def _check_config_count(k: int, n: int, cap: int) -> int:
    if k > n:
        raise ValueError(f"request of size {k} does not fit {n} positions")
    count = math.perm(n, k)
    if count > cap:
        raise DeskScaleError(f"configurations of a size-{k} request over {n} positions", count, cap)
    return count


@lru_cache(maxsize=64)
def _config_table(k: int, n: int, demand: int) -> tuple[np.ndarray, np.ndarray]:
    """All placements of ``k`` sorted items as a 0-indexed position array, plus costs."""
    positions = np.array(list(itertools.permutations(range(n), k)), dtype=np.int64)
    positions = positions.reshape(-1, k)
    costs = np.sort(positions, axis=1)[:, demand - 1] + 1
    positions.flags.writeable = False
    costs.flags.writeable = False
    return positions, costs.astype(float)


def enumerate_configs(r: Request, n: int, cap: int = CONFIG_CAP) -> list[Configuration]:
    """All ``n! / (n - |R|)!`` configurations, in lexicographic order of positions."""
    _check_config_count(len(r), n, cap)
    items = sorted(r.items)
    positions, _ = _config_table(len(items), n, 1)
    return [Configuration(tuple(zip(items, (row + 1).tolist()))) for row in positions]


def _incidence(k: int, n: int, positions: np.ndarray) -> np.ndarray:
    """Matrix ``M`` with ``M[e * n + j, F] = 1`` iff configuration F puts item e at j."""
    count = positions.shape[0]
    M = np.zeros((k * n, count))
    cols = np.repeat(np.arange(count), k)
    rows = (np.tile(np.arange(k), count) * n + positions.ravel())
    M[rows, cols] = 1.0
    return M


def penalty_weight(n: int, epsilon: float) -> float:
    return n**4 / epsilon


def fac_value(
    a: MatrixLike, r: Request, epsilon: float = DEFAULT_EPSILON, cap: int = CONFIG_CAP
) -> FACResult:
    """Fractional access cost via the configuration LP.

    The absolute mismatch terms are linearised with one slack per (item,
    position) pair of the request: ``s >= A - My`` and ``s >= My - A``.
    """
    m = as_array(a)
    n = m.shape[0]
    r.check_universe(n)
    k = len(r)
    _check_config_count(k, n, cap)
    positions, costs = _config_table(k, n, r.demand)
    count = costs.size
    M = _incidence(k, n, positions)
    target = m[r.index].ravel()
    P = penalty_weight(n, epsilon)

    I = np.eye(k * n)
    A_ub = np.block([[M, -I], [-M, -I]])
    b_ub = np.concatenate([target, -target])
    A_eq = np.concatenate([np.ones(count), np.zeros(k * n)])[None, :]
    c = np.concatenate([costs, np.full(k * n, P)])
    x, _ = solve_lp(c, A_ub, b_ub, A_eq, [1.0])

    y = np.maximum(x[:count], 0.0)
    mismatch = np.abs(target - M @ y)
    penalty = P * float(mismatch.sum())
    value = float(costs @ y) + penalty
    items = sorted(r.items)
    weights = {
        Configuration(tuple(zip(items, (positions[i] + 1).tolist()))): float(y[i])
        for i in np.flatnonzero(y > 0)
    }
    return FACResult(
        value=value,
        primal_weights=weights,
        penalty=penalty,
        epsilon=float(epsilon),
        max_mismatch=float(mismatch.max(initial=0.0)),
    )


def prefix_before(m: np.ndarray) -> np.ndarray:
    """``out[..., i] = sum_{j < i} m[..., j]`` along the last axis (0-indexed)."""
    out = np.zeros_like(m, dtype=float)
    np.cumsum(m[..., :-1], axis=-1, out=out[..., 1:])
    return out


def sw_cost_closed(a: MatrixLike, r: Request) -> float:
    """Demand-one SW cost: ``sum_i (1 - mass of R before position i)_+``."""
    if r.demand != 1:
        raise WrongDemandError(f"closed form needs demand 1, got {r.demand}")
    m = as_array(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    r.check_universe(m.shape[0])
    before = prefix_before(m[r.index].sum(axis=0))
    return float(np.maximum(1.0 - before, 0.0).sum())


def sw_cost(a: MatrixLike, r: Request, cap: int = SUBSET_CAP) -> SWResult:
    """SW cost as an explicit LP with one constraint per (subset M of R, position)."""
    m = as_array(a)
    n = m.shape[0]
    r.check_universe(n)
    k = len(r)
    if 2**k > cap:
        raise DeskScaleError(f"subsets of a size-{k} request", 2**k, cap)

    before = prefix_before(m[r.index])  # k x n
    masks = np.arange(2**k)
    in_M = ((masks[:, None] >> np.arange(k)) & 1).astype(float)  # 2^k x k
    coef = r.demand - in_M.sum(axis=1)  # K - |M|
    rhs = (1.0 - in_M) @ before  # 2^k x n, mass of R \ M before each position

    rows = 2**k * n
    A_ub = sparse.csr_matrix(
        (np.repeat(coef, n), (np.arange(rows), np.tile(np.arange(n), 2**k))),
        shape=(rows, n),
    )
    z, _ = solve_lp(-np.ones(n), A_ub, rhs.ravel(), bounds=(0.0, 1.0))
    z = np.clip(z, 0.0, 1.0)
    return SWResult(value=float(n - z.sum()), z=z)
