"""Deterministic block-greedy rounding of a doubly stochastic matrix.

Positions are filled ``r`` at a time. Each block is an ``r``-subset of the
remaining items that (approximately) minimises the demand-one SW cost of the
block viewed as a single request. Three block solvers are available: exact
enumeration, an FPTAS built on a small dynamic program, and a greedy
target-vector heuristic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .costs import prefix_before
from .errors import DeskScaleError
from .model import MatrixLike, Permutation, as_array

BLOCK_CAP = 10**6
_TIE = 1e-12


@dataclass(frozen=True)
class BlockSolver:
    kind: str = "exact"
    r: int = 1
    alpha: float = 0.0
    cap: int = BLOCK_CAP

    def __post_init__(self):
        if self.kind not in ("exact", "fptas", "heuristic"):
            raise ValueError(f"unknown block solver {self.kind!r}")
        if self.r < 1:
            raise ValueError("block size must be at least 1")
        if self.kind == "fptas" and not self.alpha > 0:
            raise ValueError("fptas needs alpha > 0")

    @property
    def approx_factor(self) -> float:
        return 1.0 + self.alpha if self.kind == "fptas" else 1.0


def prefix_matrix(a: MatrixLike) -> np.ndarray:
    """``B[e, i] = sum_{j < i} A[e, j]`` (0-indexed), the mass of each item before each position."""
    return prefix_before(as_array(a))


def block_cost(a: MatrixLike, items: Iterable[int], prefix: Optional[np.ndarray] = None) -> float:
    """``sum_i (1 - sum_{e in S} sum_{j < i} A_ej)_+`` for the item set ``S`` (1-indexed)."""
    B = prefix_matrix(a) if prefix is None else prefix
    idx = np.fromiter(items, dtype=np.int64) - 1
    return float(np.maximum(1.0 - B[idx].sum(axis=0), 0.0).sum())


def _costs_of(B: np.ndarray, combos: np.ndarray) -> np.ndarray:
    return np.maximum(1.0 - B[combos].sum(axis=1), 0.0).sum(axis=1)


def block_exact(a: MatrixLike, rem: Iterable[int], r: int, cap: int = BLOCK_CAP,
                prefix: Optional[np.ndarray] = None) -> frozenset[int]:
    """Exact minimiser over all ``r``-subsets of ``rem``; ties go to the lexicographically first."""
    items = sorted(rem)
    if not 1 <= r <= len(items):
        raise ValueError(f"cannot choose {r} of {len(items)} items")
    count = math.comb(len(items), r)
    if count > cap:
        raise DeskScaleError(f"{r}-subsets of {len(items)} items", count, cap)
    B = prefix_matrix(a) if prefix is None else prefix
    best_cost, best = math.inf, None
    chunk = 1 << 16
    it = itertools.combinations(np.asarray(items) - 1, r)
    while True:
        combos = np.array(list(itertools.islice(it, chunk)), dtype=np.int64)
        if combos.size == 0:
            break
        costs = _costs_of(B, combos.reshape(-1, r))
        i = int(np.flatnonzero(costs <= costs.min() + _TIE)[0])
        if costs[i] < best_cost - _TIE:
            best_cost, best = float(costs[i]), combos[i]
    return frozenset(int(e) + 1 for e in best)


# -- dynamic program for the cardinality-constrained two-knapsack ILP --------


@dataclass(frozen=True)
class DPInstance:
    """minimise ``sum w_e x_e`` s.t. ``sum c_e x_e >= C``, ``sum d_e x_e <= D``, ``sum x_e = r``."""

    triples: tuple[tuple[float, int, int], ...]
    C: int
    D: int
    r: int

    def __post_init__(self):
        triples = tuple((float(w), int(c), int(d)) for w, c, d in self.triples)
        if any(c < 0 or d < 0 for _, c, d in triples):
            raise ValueError("c_e and d_e must be nonnegative integers")
        if self.C < 0 or self.D < 0 or self.r < 0:
            raise ValueError("C, D and r must be nonnegative")
        object.__setattr__(self, "triples", triples)


@dataclass(frozen=True)
class DPResult:
    selection: Optional[frozenset[int]]
    value: float

    @property
    def feasible(self) -> bool:
        return self.selection is not None


def dp_solve(inst: DPInstance) -> DPResult:
    """Exact solution by DP over (chosen count, coverage clamped at C, budget used).

    Selections are 0-indexed positions into ``inst.triples``. Infeasibility is
    reported as ``selection=None`` with value ``inf``.
    """
    m, r, C, D = len(inst.triples), inst.r, inst.C, inst.D
    if r > m:
        return DPResult(None, math.inf)
    val = np.full((r + 1, C + 1, D + 1), np.inf)
    val[0, 0, 0] = 0.0
    # pred[e, k, cov, used]: coverage before item e was taken into this state, -1 if not taken
    pred = np.full((m, r + 1, C + 1, D + 1), -1, dtype=np.int16 if C < 2**15 else np.int32)
    for e, (w, c, d) in enumerate(inst.triples):
        if d > D or r == 0:
            continue
        src = val[:-1, :, : D + 1 - d] + w
        cand = np.full_like(src, np.inf)
        back = np.zeros(src.shape, dtype=pred.dtype)
        if c == 0:
            cand[:] = src
            back[:] = np.arange(C + 1)[None, :, None]
        else:
            lo = max(C - c, 0)
            if lo > 0:
                cand[:, c:C, :] = src[:, :lo, :]
                back[:, c:C, :] = np.arange(lo)[None, :, None]
            tail = src[:, lo:, :]
            cand[:, C, :] = tail.min(axis=1)
            back[:, C, :] = lo + tail.argmin(axis=1)
        cur = val[1:, :, d:]
        better = cand < cur
        cur[better] = cand[better]
        pred[e, 1:, :, d:][better] = back[better]
    finals = val[r, C]
    if not np.isfinite(finals).any():
        return DPResult(None, math.inf)
    used = int(np.argmin(finals))
    value = float(finals[used])
    k, cov, sel = r, C, []
    for e in range(m - 1, -1, -1):
        if k == 0:
            break
        p = int(pred[e, k, cov, used])
        if p < 0:
            continue
        sel.append(e)
        k, cov, used = k - 1, p, used - inst.triples[e][2]
    assert k == 0 and cov == 0 and used == 0, "DP backtrack did not reach the empty state"
    return DPResult(frozenset(sel), value)


def fptas_grid(n: int, r: int, alpha: float) -> int:
    """Number of grid cells ``N`` per unit mass, with cell size ``1/N <= alpha / (n r)``."""
    return max(1, math.ceil(n * r / alpha - 1e-9))


def block_fptas(a: MatrixLike, rem: Iterable[int], r: int, alpha: float,
                prefix: Optional[np.ndarray] = None) -> frozenset[int]:
    """(1 + alpha)-approximate block by rounding prefix masses down to a grid.

    For each boundary ``k`` at which the block's total prefix mass first
    reaches one, the block cost on the grid is additive over items, so the best
    block for that ``k`` is a DP instance. The best candidate over all ``k``
    (by true cost) is returned.
    """
    items = sorted(rem)
    if not 1 <= r <= len(items):
        raise ValueError(f"cannot choose {r} of {len(items)} items")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    B = prefix_matrix(a) if prefix is None else prefix
    n = B.shape[1]
    N = fptas_grid(n, r, alpha)
    idx = np.asarray(items) - 1
    units = np.floor(B[idx] * N + 1e-9).astype(np.int64)  # m x n, nondecreasing
    units = np.maximum.accumulate(np.clip(units, 0, None), axis=1)
    # weight of item e when the crossing happens at (1-indexed) k, in units of 1/(rN)
    head = np.cumsum(N - r * units, axis=1)  # head[:, k-2] = sum_{i < k} (N - r u_i)

    candidates = []
    for k in range(2, n + 2):
        w = head[:, k - 2]
        d = units[:, k - 2]  # mass before the crossing: must total at most N - 1
        if k <= n:
            c = units[:, k - 1]
            C = N
        else:
            c = np.zeros_like(d)
            C = 0
        res = dp_solve(DPInstance(tuple(zip(w.tolist(), c.tolist(), d.tolist())), C, N - 1, r))
        if res.feasible:
            candidates.append(frozenset(items[i] for i in res.selection))
    if not candidates:  # pragma: no cover - the all-items-late case is always feasible
        raise AssertionError("no feasible boundary")
    costs = [block_cost(a, sorted(s), B) for s in candidates]
    best = min(costs)
    return min((s for s, cst in zip(candidates, costs) if cst <= best + _TIE), key=sorted)


def block_heuristic(a: MatrixLike, rem: Iterable[int], r: int,
                    prefix: Optional[np.ndarray] = None) -> frozenset[int]:
    """Greedy target-vector heuristic; no approximation guarantee.

    Each pass picks the item minimising ``sum_j (target_j - mass before j)_+``
    and then lowers the target by that item's prefix-mass row, so the score of
    a pass is exactly the block cost of the items chosen so far plus the
    candidate.
    """
    items = sorted(rem)
    if not 1 <= r <= len(items):
        raise ValueError(f"cannot choose {r} of {len(items)} items")
    B = prefix_matrix(a) if prefix is None else prefix
    target = np.ones(B.shape[1])
    left = np.asarray(items) - 1
    chosen = []
    for _ in range(r):
        scores = np.maximum(target - B[left], 0.0).sum(axis=1)
        i = int(np.flatnonzero(scores <= scores.min() + _TIE)[0])
        e = left[i]
        chosen.append(int(e) + 1)
        target = np.maximum(target - B[e], 0.0)
        left = np.delete(left, i)
    return frozenset(chosen)


def solve_block(a: MatrixLike, rem: Sequence[int], solver: BlockSolver,
                prefix: Optional[np.ndarray] = None) -> frozenset[int]:
    if solver.kind == "exact":
        return block_exact(a, rem, solver.r, cap=solver.cap, prefix=prefix)
    if solver.kind == "fptas":
        return block_fptas(a, rem, solver.r, solver.alpha, prefix=prefix)
    return block_heuristic(a, rem, solver.r, prefix=prefix)


def deterministic_blocks(a: MatrixLike, solver: BlockSolver) -> list[frozenset[int]]:
    """The ``floor(n / r)`` blocks chosen in order; leftovers are not included."""
    m = as_array(a)
    n = m.shape[0]
    if solver.r > n:
        raise ValueError(f"block size {solver.r} exceeds n = {n}")
    B = prefix_matrix(m)
    rem = list(range(1, n + 1))
    blocks = []
    for k in range(n // solver.r):
        try:
            block = solve_block(m, rem, solver, prefix=B)
        except DeskScaleError as exc:
            raise DeskScaleError(f"block {k + 1}: {exc.what}", exc.count, exc.cap) from exc
        except ValueError as exc:
            raise ValueError(f"block {k + 1}: {exc}") from exc
        blocks.append(block)
        rem = [e for e in rem if e not in block]
    return blocks


def round_deterministic(a: MatrixLike, solver: BlockSolver) -> Permutation:
    """Fill positions block by block; each block and the leftovers in ascending item id."""
    n = as_array(a).shape[0]
    blocks = deterministic_blocks(a, solver)
    order = [e for block in blocks for e in sorted(block)]
    placed = set(order)
    order += [e for e in range(1, n + 1) if e not in placed]
    return Permutation(tuple(order))
