"""Subgradient oracles for the relaxed costs, and an empirical checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .costs import (
    CONFIG_CAP,
    DEFAULT_EPSILON,
    _check_config_count,
    _config_table,
    _incidence,
    penalty_weight,
    prefix_before,
)
from .errors import WrongDemandError
from .lp import solve_lp
from .model import MatrixLike, Request, as_array


@dataclass(frozen=True)
class SubgradientMatrix:
    """Subgradient with the same ``(item, position)`` layout as the matrix.

    ``bound`` is the declared Frobenius-norm bound, when the oracle has one.
    """

    entries: np.ndarray
    bound: Optional[float] = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def covering_index(a: MatrixLike, r: Request) -> int:
    """Smallest ``i`` with ``sum_{j <= i} sum_{e in R} A_ej >= 1``, else ``n``."""
    m = as_array(a)
    cum = np.cumsum(m[r.index].sum(axis=0))
    hit = np.flatnonzero(cum >= 1.0)
    return int(hit[0]) + 1 if hit.size else m.shape[0]


def sw_subgradient_k1(a: MatrixLike, r: Request) -> SubgradientMatrix:
    """Subgradient of the demand-one SW cost.

    On the linear piece containing ``A`` the cost is
    ``i* - sum_{j < i*} (i* - j) * mass_j``, so the requested rows get
    ``-(i* - j)`` for ``j < i*`` and every other entry is zero.
    """
    if r.demand != 1:
        raise WrongDemandError(f"closed-form subgradient needs demand 1, got {r.demand}")
    m = as_array(a)
    n = m.shape[0]
    r.check_universe(n)
    istar = covering_index(m, r)
    g = np.zeros((n, n))
    j = np.arange(1, n + 1)
    g[r.index] = -np.maximum(istar - j, 0).astype(float)
    return SubgradientMatrix(g)


@dataclass(frozen=True)
class DualSolution:
    lam: float
    g: np.ndarray
    value: float


def fac_dual(
    a: MatrixLike, r: Request, epsilon: float = DEFAULT_EPSILON, cap: int = CONFIG_CAP
) -> DualSolution:
    """Solve the dual of the configuration LP over all enumerated configurations.

    maximize ``lam + sum A_ej lam_ej`` subject to
    ``lam + sum_{(e, j) in F} lam_ej <= C_F`` for every configuration and
    ``|lam_ej| <= n^4 / epsilon``.
    """
    m = as_array(a)
    n = m.shape[0]
    r.check_universe(n)
    k = len(r)
    _check_config_count(k, n, cap)
    positions, costs = _config_table(k, n, r.demand)
    M = _incidence(k, n, positions)
    P = penalty_weight(n, epsilon)
    target = m[r.index].ravel()

    A_ub = np.hstack([np.ones((costs.size, 1)), M.T])
    c = np.concatenate([[1.0], target])
    bounds = [(None, None)] + [(-P, P)] * (k * n)
    x, _ = solve_lp(c, A_ub, costs, bounds=bounds, maximize=True)
    lam = float(x[0])
    lam_ej = np.clip(x[1:], -P, P)
    g = np.zeros((n, n))
    g[r.index] = lam_ej.reshape(k, n)
    return DualSolution(lam=lam, g=g, value=lam + float(target @ lam_ej))


def fac_subgradient_exact(
    a: MatrixLike, r: Request, epsilon: float = DEFAULT_EPSILON, cap: int = CONFIG_CAP
) -> SubgradientMatrix:
    n = as_array(a).shape[0]
    sol = fac_dual(a, r, epsilon, cap)
    return SubgradientMatrix(sol.g, bound=n**5 / epsilon)


def random_ds_matrix(n: int, rng: np.random.Generator, count: Optional[int] = None) -> np.ndarray:
    """Dirichlet(1) mixture of ``count`` (default ``2n``) random permutation matrices."""
    count = 2 * n if count is None else count
    w = rng.dirichlet(np.ones(count))
    m = np.zeros((n, n))
    cols = np.arange(n)
    for weight in w:
        m[rng.permutation(n), cols] += weight
    return m


@dataclass(frozen=True)
class SubgradientReport:
    trials: int
    violations: int
    worst_violation: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def __bool__(self):
        return self.ok


def verify_subgradient(
    cost: Callable[[np.ndarray], float],
    a: MatrixLike,
    g,
    trials: int = 100,
    tol: float = 1e-9,
    rng: Optional[np.random.Generator] = None,
) -> SubgradientReport:
    """Check ``cost(B) >= cost(A) + <g, B - A> - tol`` on random DS matrices B.

    ``worst_violation`` is the largest ``cost(A) + <g, B - A> - cost(B)``
    observed (negative when every check passed with room to spare).
    """
    rng = np.random.default_rng() if rng is None else rng
    m = as_array(a)
    gm = np.asarray(g, dtype=float)
    base = cost(m)
    worst = -np.inf
    bad = 0
    for _ in range(trials):
        b = random_ds_matrix(m.shape[0], rng)
        gap = base + float(np.sum(gm * (b - m))) - cost(b)
        worst = max(worst, gap)
        if gap > tol:
            bad += 1
    return SubgradientReport(trials=trials, violations=bad, worst_violation=float(worst), tol=tol)


def central_difference(
    cost: Callable[[np.ndarray], float], a: MatrixLike, direction: np.ndarray, h: float = 1e-5
) -> float:
    """Central finite-difference estimate of the derivative of ``cost`` along ``direction``."""
    m = as_array(a)
    return (cost(m + h * direction) - cost(m - h * direction)) / (2 * h)
