"""Online projected gradient descent over doubly stochastic matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

import numpy as np
from scipy import sparse

from .costs import DEFAULT_EPSILON, sw_cost_closed
from .errors import DimensionError, GMSSCError
from .lp import solve_lp
from .model import DSMatrix, Instance, MatrixLike, Permutation, Request, access_cost, as_array
from .projection import ProjectionConfig, project_birkhoff
from .subgradient import sw_subgradient_k1

CostOracle = Callable[[DSMatrix, Request], float]
SubgradientOracle = Callable[[DSMatrix, Request], object]
Rounder = Callable[[DSMatrix, np.random.Generator], Permutation]


@dataclass(frozen=True)
class StepRule:
    """Step size ``eta_t``.

    ``kind="paper"`` uses ``2 eps / (n^4.5 sqrt t)``, the choice matched to the
    FAC subgradient bound; ``kind="custom"`` uses ``D / (G sqrt t)``.
    """

    kind: str = "paper"
    D: Optional[float] = None
    G: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("paper", "custom"):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.kind == "custom" and not (self.D and self.G and self.D > 0 and self.G > 0):
            raise ValueError("custom step rule needs positive D and G")

    def eta(self, t: int, n: int, epsilon: float) -> float:
        if self.kind == "paper":
            return 2.0 * epsilon / (n**4.5 * math.sqrt(t))
        return self.D / (self.G * math.sqrt(t))

    @classmethod
    def from_bounds(cls, n: int, epsilon: float) -> "StepRule":
        """Custom rule with the FAC constants ``D = 2 sqrt n`` and ``G = n^5 / eps``."""
        return cls("custom", D=2.0 * math.sqrt(n), G=n**5 / epsilon)

    @classmethod
    def for_sw(cls, n: int, max_request_size: int) -> "StepRule":
        """Custom rule sized for the demand-one SW subgradient.

        That subgradient has at most ``|R|`` nonzero rows with entries
        ``-(i* - j)``, so its norm is at most ``sqrt(|R| * sum_{m<n} m^2)``.
        """
        G = math.sqrt(max_request_size * (n - 1) * n * (2 * n - 1) / 6)
        return cls("custom", D=2.0 * math.sqrt(n), G=max(G, 1.0))


@dataclass(frozen=True)
class OPGDState:
    t: int
    a: DSMatrix
    epsilon: float = DEFAULT_EPSILON
    step_rule: StepRule = field(default_factory=StepRule)

    @property
    def eta(self) -> float:
        return self.step_rule.eta(self.t, self.a.n, self.epsilon)


@dataclass(frozen=True)
class RoundTrace:
    t: int
    relaxed_cost: float
    rounded_cost: float
    baseline_costs: dict[str, float] = field(default_factory=dict)


def opgd_init(n: int, epsilon: float = DEFAULT_EPSILON, step_rule: Optional[StepRule] = None) -> OPGDState:
    if n < 1:
        raise ValueError("n must be positive")
    return OPGDState(t=1, a=DSMatrix.uniform(n), epsilon=epsilon, step_rule=step_rule or StepRule())


def opgd_step(state: OPGDState, g, proj_cfg: Optional[ProjectionConfig] = None) -> OPGDState:
    """Gradient step with ``eta_t`` followed by projection back onto DS."""
    gm = np.asarray(g, dtype=float)
    if gm.shape != state.a.entries.shape:
        raise DimensionError(f"subgradient shape {gm.shape} != matrix shape {state.a.entries.shape}")
    if not gm.any():
        return OPGDState(state.t + 1, state.a, state.epsilon, state.step_rule)
    moved = state.a.entries - state.eta * gm
    return OPGDState(state.t + 1, project_birkhoff(moved, proj_cfg), state.epsilon, state.step_rule)


class OnlineLearner:
    """Learner of the online protocol, split into ``play`` and ``observe``.

    ``play`` commits to the round's matrix and permutation; ``observe``
    receives the request, charges the relaxed cost and takes the step. The
    permutation therefore only depends on earlier requests.
    """

    def __init__(
        self,
        n: int,
        cost_oracle: CostOracle,
        subgrad_oracle: SubgradientOracle,
        epsilon: float = DEFAULT_EPSILON,
        step_rule: Optional[StepRule] = None,
        proj_cfg: Optional[ProjectionConfig] = None,
    ):
        self.state = opgd_init(n, epsilon, step_rule)
        self.cost_oracle = cost_oracle
        self.subgrad_oracle = subgrad_oracle
        self.proj_cfg = proj_cfg or ProjectionConfig()
        self._committed = False

    @property
    def matrix(self) -> DSMatrix:
        return self.state.a

    def play(self, rounder: Optional[Rounder] = None, rng: Optional[np.random.Generator] = None):
        self._committed = True
        if rounder is None:
            return None
        return rounder(self.state.a, rng)

    def observe(self, r: Request) -> float:
        if not self._committed:
            raise RuntimeError("play() must be called before the request is revealed")
        a = self.state.a
        cost = float(self.cost_oracle(a, r))
        self.state = opgd_step(self.state, self.subgrad_oracle(a, r), self.proj_cfg)
        self._committed = False
        return cost


def run_online(
    inst: Instance,
    cost_oracle: CostOracle = sw_cost_closed,
    subgrad_oracle: SubgradientOracle = sw_subgradient_k1,
    rounder: Optional[Rounder] = None,
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
    step_rule: Optional[StepRule] = None,
    proj_cfg: Optional[ProjectionConfig] = None,
    baselines: Optional[Mapping[str, Permutation]] = None,
) -> list[RoundTrace]:
    """Play the online protocol over ``inst``; one :class:`RoundTrace` per round.

    Without a ``rounder`` no permutation is played and ``rounded_cost`` is NaN.
    Errors raised by the oracles are re-raised with the round number attached.
    """
    rng = np.random.default_rng(seed)
    learner = OnlineLearner(inst.n, cost_oracle, subgrad_oracle, epsilon, step_rule, proj_cfg)
    traces = []
    for t, r in enumerate(inst.requests, start=1):
        pi = learner.play(rounder, rng)
        try:
            relaxed = learner.observe(r)
        except GMSSCError as exc:
            exc.args = (f"round {t}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        rounded = float(access_cost(pi, r)) if pi is not None else math.nan
        extra = {name: float(access_cost(p, r)) for name, p in (baselines or {}).items()}
        traces.append(RoundTrace(t, relaxed, rounded, extra))
    return traces


# -- offline comparators ----------------------------------------------------


def _distinct(requests: Iterable[Request]) -> tuple[list[Request], np.ndarray]:
    counts: dict[Request, int] = {}
    for r in requests:
        counts[r] = counts.get(r, 0) + 1
    reqs = list(counts)
    return reqs, np.array([counts[r] for r in reqs], dtype=float)


def offline_sw_optimum(n: int, requests: Iterable[Request]) -> tuple[float, np.ndarray]:
    """Exact ``min_{A in DS} (1/T) sum_t SW(A, R_t)`` for demand-one requests, by LP.

    Variables are the ``n^2`` matrix entries and one slack
    ``u_{R,i} >= 1 - mass of R before i`` per distinct request and position.
    Returns the average cost and a minimising matrix.
    """
    reqs, counts = _distinct(requests)
    if not reqs:
        return 0.0, np.full((n, n), 1.0 / n)
    if any(r.demand != 1 for r in reqs):
        raise ValueError("offline SW optimum is only defined here for demand-one requests")
    T = counts.sum()
    q = len(reqs)
    nv = n * n + q * n
    rows, cols, vals = [], [], []
    b = []
    row = 0
    for ri, r in enumerate(reqs):
        for i in range(n):
            # -u_{r,i} - sum_{e in R, j < i} A_ej <= -1
            rows.append(row); cols.append(n * n + ri * n + i); vals.append(-1.0)
            for e in r.index:
                for j in range(i):
                    rows.append(row); cols.append(e * n + j); vals.append(-1.0)
            b.append(-1.0)
            row += 1
    A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(row, nv))
    eq_rows, eq_cols = [], []
    for e in range(n):
        for j in range(n):
            eq_rows += [e, n + j]
            eq_cols += [e * n + j, e * n + j]
    A_eq = sparse.csr_matrix((np.ones(len(eq_rows)), (eq_rows, eq_cols)), shape=(2 * n, nv))
    c = np.concatenate([np.zeros(n * n), np.repeat(counts / T, n)])
    x, val = solve_lp(c, A_ub, b, A_eq, np.ones(2 * n))
    return val, x[: n * n].reshape(n, n)


def offline_subgradient_descent(
    n: int,
    requests: Iterable[Request],
    cost_oracle: CostOracle = sw_cost_closed,
    subgrad_oracle: SubgradientOracle = sw_subgradient_k1,
    iters: int = 5000,
    step_rule: Optional[StepRule] = None,
    proj_cfg: Optional[ProjectionConfig] = None,
) -> tuple[float, np.ndarray]:
    """Approximate ``min_{A in DS}`` of the average cost by batch projected subgradient descent.

    Works with any oracle pair; returns the best average cost seen and its matrix.
    """
    reqs, counts = _distinct(requests)
    if not reqs:
        return 0.0, np.full((n, n), 1.0 / n)
    w = counts / counts.sum()
    rule = step_rule or StepRule.for_sw(n, max(len(r) for r in reqs))
    cfg = proj_cfg or ProjectionConfig()

    def avg(a):
        return float(sum(wi * cost_oracle(a, r) for wi, r in zip(w, reqs)))

    a = DSMatrix.uniform(n)
    best_val, best = avg(a), a.entries
    for k in range(1, iters + 1):
        g = sum(wi * np.asarray(subgrad_oracle(a, r)) for wi, r in zip(w, reqs))
        if not np.any(g):
            break
        a = project_birkhoff(a.entries - rule.eta(k, n, 1.0) * g, cfg)
        val = avg(a)
        if val < best_val:
            best_val, best = val, a.entries
    return best_val, best


def relaxed_regret_curve(traces: list[RoundTrace], comparator: Callable[[int], float], checkpoints):
    """``(1/t) sum_{s<=t} relaxed_cost_s - comparator(t)`` at each checkpoint ``t``."""
    costs = np.array([tr.relaxed_cost for tr in traces])
    cum = np.cumsum(costs)
    return [float(cum[t - 1] / t - comparator(t)) for t in checkpoints]
