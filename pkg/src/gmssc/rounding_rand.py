"""Randomized rounding of doubly stochastic matrices to permutations.

A scale ``alpha`` is drawn with density ``2 alpha``, the matrix is multiplied
by ``z / alpha`` and pushed through the doubling transform, and each item
gets an index by inverting its cumulative row at an independent uniform
threshold. Items are output in increasing index order.

``z = 5.03`` is the general-demand scheme and ``z = 1.6783`` the demand-one
scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import MatrixLike, Permutation, Request, as_array


@dataclass(frozen=True)
class RoundingParams:
    scale_constant: float
    tie_rule: str = "uniform"

    def __post_init__(self):
        if not self.scale_constant > 0:
            raise ValueError("scale_constant must be positive")
        if self.tie_rule != "uniform":
            raise ValueError(f"unsupported tie rule {self.tie_rule!r}")


GMSSC_PARAMS = RoundingParams(5.03)
MSSC_PARAMS = RoundingParams(1.6783)


def guarantee_factor(z: float) -> float:
    """Expected-cost factor ``4z / (1 - 2 e^{-z}) + 1`` of the demand-one analysis."""
    return 4 * z / (1 - 2 * math.exp(-z)) + 1


def sample_alpha(rng: np.random.Generator, size: Optional[int] = None):
    """Draw from density ``2 alpha`` on (0, 1) as the square root of a uniform."""
    u = rng.random(size)
    if size is None:
        while u == 0.0:
            u = rng.random()
        return math.sqrt(u)
    while np.any(u == 0.0):
        u[u == 0.0] = rng.random(int(np.sum(u == 0.0)))
    return np.sqrt(u)


def double_matrix(m) -> np.ndarray:
    """For ``j = 1 .. floor(n/2)`` in order, add column ``j`` into column ``2j``.

    Columns are updated in place, so column 4 receives the already enlarged
    column 2, and so on.
    """
    b = np.array(m, dtype=float, copy=True)
    if np.any(b < 0):
        raise ValueError("doubling expects a nonnegative matrix")
    n = b.shape[1]
    for j in range(1, n // 2 + 1):
        b[:, 2 * j - 1] += b[:, j - 1]
    return b


def rounding_matrix(a: MatrixLike, params: RoundingParams, alpha: float) -> np.ndarray:
    """The matrix ``double((z / alpha) * A)`` that the indices are read from."""
    return double_matrix((params.scale_constant / alpha) * as_array(a))


def _effective_indices(strict_prefix: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """``i_e = max{i : strict_prefix[e, i-1] < threshold_e}`` for a batch of thresholds.

    ``strict_prefix`` is ``n x n`` with first column zero; ``thresholds`` is
    ``S x n`` with entries in (0, 1]. Returns 1-indexed indices, shape ``S x n``.
    """
    S, n = thresholds.shape
    out = np.empty((S, n), dtype=np.int64)
    for e in range(n):
        out[:, e] = np.searchsorted(strict_prefix[e], thresholds[:, e], side="left")
    return out


def sample_orders(a: MatrixLike, params: RoundingParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` permutations at once; row ``s`` lists items (1-indexed) in order.

    The doubling transform is linear, so ``double((z/alpha) A) = (z/alpha) double(A)``
    and the per-sample scale can be folded into the thresholds.
    """
    m = as_array(a)
    n = m.shape[0]
    d = double_matrix(m)
    strict = np.zeros((n, n))
    np.cumsum(d[:, :-1], axis=1, out=strict[:, 1:])
    alphas = sample_alpha(rng, size)
    u = 1.0 - rng.random((size, n))  # (0, 1]
    thresholds = u * (alphas / params.scale_constant)[:, None]
    idx = _effective_indices(strict, thresholds)
    ties = rng.random((size, n))
    return np.argsort(idx + ties, axis=1, kind="stable") + 1


def round_randomized(a: MatrixLike, params: RoundingParams, rng: np.random.Generator) -> Permutation:
    """One draw from the rounding distribution, following the scheme step by step."""
    m = as_array(a)
    n = m.shape[0]
    alpha = sample_alpha(rng)
    b = rounding_matrix(m, params, alpha)
    strict = np.zeros((n, n))
    np.cumsum(b[:, :-1], axis=1, out=strict[:, 1:])
    u = 1.0 - rng.random(n)
    idx = _effective_indices(strict, u[None, :])[0]
    ties = rng.random(n)
    order = np.lexsort((ties, idx)) + 1
    return Permutation(tuple(order.tolist()))


def _batch_access_costs(orders: np.ndarray, r: Request) -> np.ndarray:
    S, n = orders.shape
    pos = np.empty_like(orders)
    rows = np.arange(S)[:, None]
    pos[rows, orders - 1] = np.arange(1, n + 1)[None, :]
    sub = pos[:, r.index]
    return np.partition(sub, r.demand - 1, axis=1)[:, r.demand - 1]


def expected_cost_estimate(
    a: MatrixLike,
    params: RoundingParams,
    r: Request,
    samples: int,
    rng: np.random.Generator,
    batch: int = 50_000,
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the access cost of a rounded permutation."""
    if samples < 1:
        raise ValueError("need at least one sample")
    r.check_universe(as_array(a).shape[0])
    costs = []
    left = samples
    while left > 0:
        s = min(batch, left)
        costs.append(_batch_access_costs(sample_orders(a, params, rng, s), r))
        left -= s
    c = np.concatenate(costs).astype(float)
    stderr = float(c.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(c.mean()), stderr


def i_R_alpha(a: MatrixLike, r: Request, alpha: float) -> int:
    """First position by which the request's cumulative mass reaches ``alpha`` (``n`` if never)."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    m = as_array(a)
    cum = np.cumsum(m[r.index].sum(axis=0))
    hit = np.flatnonzero(cum >= alpha)
    return int(hit[0]) + 1 if hit.size else m.shape[0]


def randomized_rounder(params: RoundingParams):
    """Adapter with the ``(matrix, rng) -> Permutation`` signature used by the online loop."""

    def rounder(a, rng):
        return round_randomized(a, params, rng)

    return rounder
