"""Euclidean projection onto the Birkhoff polytope.

Dykstra's algorithm alternates between the set of row-stochastic and the set
of column-stochastic nonnegative matrices; both sub-projections reduce to
independent simplex projections. The correction terms make the limit the
Frobenius-nearest doubly stochastic matrix rather than just some point of the
intersection.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .model import DSMatrix, feasibility_violation

log = logging.getLogger(__name__)


class ProjectionWarning(RuntimeWarning):
    """Dykstra iterations hit ``max_iters`` before reaching the tolerance."""


@dataclass(frozen=True)
class ProjectionConfig:
    tol: float = 1e-9
    max_iters: int = 100_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class ProjectionInfo:
    iterations: int
    converged: bool
    violation: float


def _simplex_rows(v: np.ndarray, s: float) -> np.ndarray:
    """Project every row of ``v`` onto ``{x >= 0, sum x = s}`` (sort and threshold)."""
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - s
    k = np.arange(1, v.shape[1] + 1)
    cond = u - css / k > 0
    rho = v.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def simplex_project(v, target_sum: float = 1.0) -> np.ndarray:
    """Euclidean projection of a vector onto ``{x >= 0, sum x = target_sum}``."""
    if target_sum <= 0:
        raise ValueError("target_sum must be positive")
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("input has non-finite entries")
    return _simplex_rows(v[None, :], float(target_sum))[0]


def dykstra_birkhoff(m, tol: float = 1e-9, max_iters: int = 100_000):
    """Run Dykstra's algorithm and return ``(X, ProjectionInfo)``.

    Iteration stops once a full pass moves the iterate and both correction
    terms by less than ``tol`` in Frobenius norm and the row sums are within
    ``tol`` of one (columns are exact after every pass). The iterate alone can
    stall for a pass while the corrections are still moving, so it is not a
    sufficient test.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("input has non-finite entries")
    x = m.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for it in range(1, max_iters + 1):
        y = _simplex_rows(x + p, 1.0)
        p_new = x + p - y
        x_new = _simplex_rows((y + q).T, 1.0).T
        q_new = y + q - x_new
        step = max(np.linalg.norm(x_new - x), np.linalg.norm(p_new - p), np.linalg.norm(q_new - q))
        x, p, q = x_new, p_new, q_new
        if step < tol and np.max(np.abs(x.sum(axis=1) - 1.0)) < tol:
            return x, ProjectionInfo(it, True, feasibility_violation(x))
    return x, ProjectionInfo(max_iters, False, feasibility_violation(x))


def project_birkhoff(m, cfg: ProjectionConfig | None = None) -> DSMatrix:
    """Frobenius-nearest doubly stochastic matrix to ``m``.

    On non-convergence a :class:`ProjectionWarning` is issued and the last
    iterate is returned with its tolerance widened to its actual violation.
    """
    cfg = cfg or ProjectionConfig()
    x, info = dykstra_birkhoff(m, cfg.tol, cfg.max_iters)
    if not info.converged:
        warnings.warn(
            f"Birkhoff projection stopped after {info.iterations} iterations "
            f"(violation {info.violation:.2e})",
            ProjectionWarning,
            stacklevel=2,
        )
    return DSMatrix(x, tol=max(cfg.tol, info.violation))
