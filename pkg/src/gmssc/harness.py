"""Experiment orchestration: instance generation, runs across algorithms and seeds, CSV output."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .baselines import brute_force_opt, flt_greedy, mwu_permutations, random_perm_baseline
from .costs import DEFAULT_EPSILON, sw_cost_closed
from .errors import DeskScaleError, GMSSCError
from .model import Instance, Request, access_cost, parse_instance
from .opgd import OnlineLearner, StepRule
from .rounding_det import BlockSolver, round_deterministic
from .rounding_rand import GMSSC_PARAMS, MSSC_PARAMS, RoundingParams, round_randomized
from .subgradient import sw_subgradient_k1

log = logging.getLogger(__name__)

CSV_HEADER = ("algorithm", "seed", "t", "cost", "cum_cost", "avg_cost")
ERROR_HEADER = ("algorithm", "seed", "t", "error")
ALGORITHM_KINDS = ("opgd+det", "opgd+rand", "flt", "random", "mwu", "brute")


class ConfigError(GMSSCError, ValueError):
    """Malformed or inconsistent experiment configuration."""


# -- instance generation -----------------------------------------------------


def generate_anchored(n: int, anchors: Iterable[int], extra: int, T: int, seed: int) -> Instance:
    """Each request is one uniformly chosen anchor plus ``extra`` random non-anchor items; demand 1."""
    anchors = sorted(set(int(x) for x in anchors))
    if not anchors:
        raise ConfigError("anchors must be nonempty")
    if anchors[0] < 1 or anchors[-1] > n:
        raise ConfigError(f"anchors must lie in 1..{n}")
    if extra < 0 or extra > n - len(anchors):
        raise ConfigError(f"cannot draw {extra} companions from {n - len(anchors)} non-anchor items")
    if T < 0:
        raise ConfigError("T must be nonnegative")
    rng = np.random.default_rng(seed)
    pool = np.setdiff1d(np.arange(1, n + 1), anchors)
    anchor_arr = np.asarray(anchors)
    reqs = []
    for _ in range(T):
        a = int(anchor_arr[rng.integers(len(anchor_arr))])
        comp = rng.choice(pool, size=extra, replace=False) if extra else []
        reqs.append(Request(frozenset([a, *map(int, comp)]), 1))
    return Instance(n, tuple(reqs))


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class AlgorithmSpec:
    kind: str
    r: Optional[int] = None
    solver: str = "heuristic"
    alpha: float = 0.25
    params: str = "mssc"
    eta: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise ConfigError(f"unknown algorithm {self.kind!r}; expected one of {', '.join(ALGORITHM_KINDS)}")
        if self.kind == "opgd+det":
            if self.r is None or self.r < 1:
                raise ConfigError("opgd+det needs a block size r >= 1")
            try:
                BlockSolver(self.solver, self.r, self.alpha if self.solver == "fptas" else 0.0)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.kind == "opgd+rand":
            self.rounding_params()

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "opgd+det":
            return f"opgd+det(r={self.r},{self.solver})"
        if self.kind == "opgd+rand":
            return f"opgd+rand({self.params})"
        return self.kind

    def rounding_params(self) -> RoundingParams:
        if self.params == "mssc":
            return MSSC_PARAMS
        if self.params == "gmssc":
            return GMSSC_PARAMS
        try:
            return RoundingParams(float(self.params))
        except ValueError as exc:
            raise ConfigError(f"bad rounding params {self.params!r}") from exc

    @classmethod
    def from_obj(cls, obj) -> "AlgorithmSpec":
        if isinstance(obj, str):
            return cls(kind=obj)
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError(f"algorithm entry must be a name or an object with 'kind': {obj!r}")
        unknown = set(obj) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown algorithm fields {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    T: int
    generator: dict
    algorithms: tuple[AlgorithmSpec, ...]
    seeds: tuple[int, ...] = (0,)
    epsilon: float = DEFAULT_EPSILON
    step_rule: str = "sw"
    output: Optional[str] = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.T < 1:
            raise ConfigError("T must be at least 1")
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        if not self.seeds:
            raise ConfigError("no seeds configured")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.step_rule not in ("sw", "paper"):
            raise ConfigError(f"step_rule must be 'sw' or 'paper', got {self.step_rule!r}")
        kind = self.generator.get("kind")
        if kind == "anchored":
            anchors = self.generator.get("anchors", [])
            extra = self.generator.get("extra", 0)
            if not anchors or min(anchors) < 1 or max(anchors) > self.n:
                raise ConfigError(f"anchors must be a nonempty subset of 1..{self.n}")
            if extra < 0 or extra + 1 > self.n:
                raise ConfigError("extra + 1 must not exceed n")
        elif kind == "file":
            if "path" not in self.generator:
                raise ConfigError("file generator needs a path")
        else:
            raise ConfigError(f"unknown generator kind {kind!r}")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigError("algorithm labels must be unique")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "preset" in d:
            base = preset(d.pop("preset"))
            merged = {**base.to_dict(), **d}
            d = merged
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        try:
            algs = tuple(AlgorithmSpec.from_obj(a) for a in d.pop("algorithms"))
            seeds = tuple(int(s) for s in d.pop("seeds", (0,)))
            return cls(algorithms=algs, seeds=seeds, **d)
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from exc
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        algs = []
        for a in self.algorithms:
            entry = {"kind": a.kind}
            for f in ("r", "solver", "alpha", "params", "eta", "label"):
                v = getattr(a, f)
                if v != AlgorithmSpec.__dataclass_fields__[f].default:
                    entry[f] = v
            algs.append(entry)
        return {
            "n": self.n,
            "T": self.T,
            "generator": dict(self.generator),
            "algorithms": algs,
            "seeds": list(self.seeds),
            "epsilon": self.epsilon,
            "step_rule": self.step_rule,
            "output": self.output,
        }


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(obj)


def _paper_preset(anchors, extra) -> ExperimentConfig:
    size = extra + 1
    return ExperimentConfig(
        n=20,
        T=5000,
        generator={"kind": "anchored", "anchors": list(anchors), "extra": extra},
        algorithms=(
            AlgorithmSpec("random"),
            AlgorithmSpec("opgd+det", r=size, solver="heuristic"),
            AlgorithmSpec("opgd+rand", params="mssc"),
            AlgorithmSpec("flt"),
        ),
        seeds=(0, 1, 2, 3, 4),
    )


PRESETS = {
    "paper-repro-a": lambda: _paper_preset([1, 2], 4),
    "paper-repro-b": lambda: _paper_preset([1, 2, 3, 4, 5], 9),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


# -- results ---------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    seed: int
    t: int
    cost: float
    cum_cost: float
    avg_cost: float


@dataclass(frozen=True)
class RunError:
    algorithm: str
    seed: int
    t: int
    message: str
    desk_scale: bool = False


@dataclass
class ResultsTable:
    rows: list[ResultRow] = field(default_factory=list)
    errors: list[RunError] = field(default_factory=list)

    def add_series(self, algorithm: str, seed: int, costs: Sequence[float]):
        cum = 0.0
        for t, c in enumerate(costs, start=1):
            cum += float(c)
            self.rows.append(ResultRow(algorithm, seed, t, float(c), cum, cum / t))

    def sort(self):
        self.rows.sort(key=lambda r: (r.algorithm, r.seed, r.t))
        self.errors.sort(key=lambda e: (e.algorithm, e.seed, e.t))

    def algorithms(self) -> list[str]:
        return sorted({r.algorithm for r in self.rows})

    def series(self, algorithm: str, seed: int) -> list[ResultRow]:
        return [r for r in self.rows if r.algorithm == algorithm and r.seed == seed]

    def final_averages(self) -> dict[str, dict[int, float]]:
        """Last recorded time-average cost per algorithm and seed."""
        out: dict[str, dict[int, tuple[int, float]]] = {}
        for r in self.rows:
            cur = out.setdefault(r.algorithm, {}).get(r.seed)
            if cur is None or r.t > cur[0]:
                out[r.algorithm][r.seed] = (r.t, r.avg_cost)
        return {a: {s: v[1] for s, v in d.items()} for a, d in out.items()}

    def seed_averaged_finals(self) -> dict[str, float]:
        return {a: float(np.mean(list(d.values()))) for a, d in self.final_averages().items()}


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def table_to_csv(table: ResultsTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in table.rows:
        w.writerow([r.algorithm, r.seed, r.t, _fmt(r.cost), _fmt(r.cum_cost), _fmt(r.avg_cost)])
    return buf.getvalue()


def errors_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".errors.csv")


def emit_csv(table: ResultsTable, path) -> None:
    """Write the table; recorded failures go to a sibling ``<stem>.errors.csv``."""
    path = Path(path)
    path.write_text(table_to_csv(table))
    if table.errors:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ERROR_HEADER)
        for e in table.errors:
            w.writerow([e.algorithm, e.seed, e.t, e.message])
        errors_path(path).write_text(buf.getvalue())


def read_csv(path) -> ResultsTable:
    path = Path(path)
    table = ResultsTable()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for line_no, row in enumerate(reader, start=2):
            try:
                alg, seed, t, cost, cum, avg = row
                table.rows.append(ResultRow(alg, int(seed), int(t), float(cost), float(cum), float(avg)))
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
    ep = errors_path(path)
    if ep.exists():
        with ep.open(newline="") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            for alg, seed, t, msg in reader:
                table.errors.append(RunError(alg, int(seed), int(t), msg))
    return table


def summarize(table: ResultsTable) -> str:
    """Per-algorithm final time-average costs as CSV; regret against ``brute`` when it was run.

    Recorded failures follow as ``#`` comment lines.
    """
    finals = table.final_averages()
    ref = finals.get("brute")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "seeds", "final_avg_cost", "regret_vs_brute"])
    for alg in sorted(finals):
        per_seed = finals[alg]
        mean = float(np.mean(list(per_seed.values())))
        regret = ""
        if ref is not None:
            common = sorted(set(per_seed) & set(ref))
            if common:
                regret = _fmt(float(np.mean([per_seed[s] - ref[s] for s in common])))
        w.writerow([alg, len(per_seed), _fmt(mean), regret])
    for e in table.errors:
        buf.write(f"# error {e.algorithm} seed {e.seed} round {e.t}: {e.message}\n")
    return buf.getvalue()


def emit_summary(table: ResultsTable, path) -> None:
    Path(path).write_text(summarize(table))


# -- running ----------------------------------------------------------------------


def _instance_for(cfg: ExperimentConfig, seed: int) -> Instance:
    g = cfg.generator
    if g["kind"] == "anchored":
        return generate_anchored(cfg.n, g["anchors"], g.get("extra", 0), cfg.T, seed)
    inst = parse_instance(Path(g["path"]).read_bytes())
    if inst.n != cfg.n:
        raise ConfigError(f"{g['path']}: instance has n = {inst.n}, config says {cfg.n}")
    return Instance(inst.n, inst.requests[: cfg.T])


def _rng_for(seed: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, slot]))


def _step_rule(cfg: ExperimentConfig, inst: Instance) -> StepRule:
    if cfg.step_rule == "paper":
        return StepRule()
    return StepRule.for_sw(inst.n, max((len(r) for r in inst.requests), default=1))


def _run_opgd(cfg, inst, seed, specs, slots, table):
    """One OPGD trajectory shared by every rounding variant of this seed."""
    learner = OnlineLearner(inst.n, sw_cost_closed, sw_subgradient_k1, cfg.epsilon, _step_rule(cfg, inst))
    rounders = {}
    for spec, slot in zip(specs, slots):
        rng = _rng_for(seed, slot)
        if spec.kind == "opgd+det":
            solver = BlockSolver(spec.solver, spec.r, spec.alpha if spec.solver == "fptas" else 0.0)
            rounders[spec.name] = (lambda a, _rng, s=solver: round_deterministic(a, s), rng)
        else:
            params = spec.rounding_params()
            rounders[spec.name] = (lambda a, g, p=params: round_randomized(a, p, g), rng)
    costs = {name: [] for name in rounders}
    failed: dict[str, RunError] = {}
    for t, r in enumerate(inst.requests, start=1):
        learner.play()
        for name, (fn, rng) in rounders.items():
            if name in failed:
                continue
            try:
                costs[name].append(access_cost(fn(learner.matrix, rng), r))
            except (GMSSCError, ValueError) as exc:
                failed[name] = RunError(name, seed, t, str(exc), isinstance(exc, DeskScaleError))
        if len(failed) == len(rounders):
            break
        try:
            learner.observe(r)
        except GMSSCError as exc:
            for name in rounders:
                failed.setdefault(name, RunError(name, seed, t, f"round {t}: {exc}"))
            break
    for name in rounders:
        table.add_series(name, seed, costs[name])
        if name in failed:
            table.errors.append(failed[name])


def _run_baseline(spec: AlgorithmSpec, inst: Instance, seed: int, slot: int) -> list[float]:
    if spec.kind == "random":
        return list(random_perm_baseline(inst, int(_rng_for(seed, slot).integers(2**63))).costs)
    if spec.kind == "flt":
        pi = flt_greedy(inst)
    elif spec.kind == "brute":
        pi, _ = brute_force_opt(inst)
    else:
        return mwu_permutations(inst, spec.eta).expected_costs.tolist()
    return [access_cost(pi, r) for r in inst.requests]


def run_experiment(cfg: ExperimentConfig) -> ResultsTable:
    """Run every configured algorithm on every seed's instance.

    A failing algorithm keeps the rounds it completed and gets an entry in
    ``table.errors``; the other algorithms are unaffected. ``flt`` and
    ``brute`` are offline: the permutation is computed from the whole
    instance and played every round.
    """
    table = ResultsTable()
    for seed in cfg.seeds:
        inst = _instance_for(cfg, seed)
        log.info("seed %d: %d requests over %d items", seed, inst.T, inst.n)
        online = [(a, i) for i, a in enumerate(cfg.algorithms) if a.kind.startswith("opgd+")]
        if online:
            _run_opgd(cfg, inst, seed, [a for a, _ in online], [i for _, i in online], table)
        for slot, spec in enumerate(cfg.algorithms):
            if spec.kind.startswith("opgd+"):
                continue
            try:
                table.add_series(spec.name, seed, _run_baseline(spec, inst, seed, slot))
            except (GMSSCError, ValueError) as exc:
                log.warning("%s failed on seed %d: %s", spec.name, seed, exc)
                table.errors.append(RunError(spec.name, seed, 0, str(exc), isinstance(exc, DeskScaleError)))
    table.sort()
    return table


def desk_scale_failures(table: ResultsTable) -> list[RunError]:
    return [e for e in table.errors if e.desk_scale]
