"""Items, permutations, requests and doubly stochastic matrices.

Items and positions are 1-indexed everywhere in the public API. Matrices are
stored as ``numpy`` arrays where entry ``[e - 1, j - 1]`` is the mass of item
``e`` at position ``j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DimensionError,
    InfeasibleMatrixError,
    InstanceFormatError,
    InvalidRequestError,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Permutation:
    """``order[i]`` is the item placed at position ``i + 1``."""

    order: tuple[int, ...]
    _positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        order = tuple(int(x) for x in self.order)
        n = len(order)
        if n == 0 or sorted(order) != list(range(1, n + 1)):
            raise ValueError(f"not a permutation of 1..{n}: {order}")
        pos = np.empty(n, dtype=np.int64)
        pos[np.asarray(order) - 1] = np.arange(1, n + 1)
        pos.flags.writeable = False
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_positions", pos)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def positions(self) -> np.ndarray:
        """Array whose entry ``e - 1`` is the (1-indexed) position of item ``e``."""
        return self._positions

    def position_of(self, item: int) -> int:
        return int(self._positions[item - 1])

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)


@dataclass(frozen=True)
class Request:
    """A set of items together with the number of them that must be reached."""

    items: frozenset[int]
    demand: int = 1

    def __post_init__(self):
        items = frozenset(int(x) for x in self.items)
        if not items:
            raise InvalidRequestError("request has no items")
        if min(items) < 1:
            raise InvalidRequestError(f"item ids must be positive, got {sorted(items)}")
        demand = int(self.demand)
        if not 1 <= demand <= len(items):
            raise InvalidRequestError(
                f"demand {demand} outside [1, {len(items)}] for items {sorted(items)}"
            )
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "demand", demand)

    @property
    def index(self) -> np.ndarray:
        """Sorted 0-indexed item array, convenient for matrix slicing."""
        return np.fromiter(sorted(self.items), dtype=np.int64) - 1

    def check_universe(self, n: int) -> None:
        if max(self.items) > n:
            raise InvalidRequestError(
                f"request items {sorted(self.items)} fall outside 1..{n}"
            )

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class DSMatrix:
    """An ``n x n`` doubly stochastic matrix, feasible up to ``tol``."""

    entries: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
        if self.tol < 0:
            raise ValueError("tolerance must be nonnegative")
        if not np.all(np.isfinite(m)):
            raise InfeasibleMatrixError("matrix has non-finite entries")
        viol = feasibility_violation(m)
        if viol > self.tol:
            raise InfeasibleMatrixError(
                f"matrix is not doubly stochastic: violation {viol:.3e} > tol {self.tol:.1e}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @classmethod
    def uniform(cls, n: int) -> "DSMatrix":
        return cls(np.full((n, n), 1.0 / n), tol=DEFAULT_TOL)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


MatrixLike = Union[DSMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_array(a: MatrixLike) -> np.ndarray:
    if isinstance(a, DSMatrix):
        return a.entries
    return np.asarray(a, dtype=float)


def feasibility_violation(m: np.ndarray) -> float:
    """Largest violation of the box, row-sum and column-sum constraints."""
    m = np.asarray(m, dtype=float)
    return float(
        max(
            np.max(-m, initial=0.0),
            np.max(m - 1.0, initial=0.0),
            np.max(np.abs(m.sum(axis=1) - 1.0)),
            np.max(np.abs(m.sum(axis=0) - 1.0)),
        )
    )


@dataclass(frozen=True)
class Instance:
    n: int
    requests: tuple[Request, ...] = ()

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError(f"universe size must be positive, got {n}")
        requests = tuple(self.requests)
        for t, r in enumerate(requests):
            try:
                r.check_universe(n)
            except InvalidRequestError as exc:
                raise InvalidRequestError(f"request {t}: {exc}") from None
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "requests", requests)

    @property
    def T(self) -> int:
        return len(self.requests)


def access_cost(pi: Permutation, r: Request) -> int:
    """Position by which ``r.demand`` items of the request have appeared in ``pi``."""
    r.check_universe(pi.n)
    pos = pi.positions[r.index]
    if r.demand == 1:
        return int(pos.min())
    return int(np.partition(pos, r.demand - 1)[r.demand - 1])


def access_cost_matrix_form(a: MatrixLike, r: Request) -> float:
    """Evaluate ``sum_i min(1, (K - mass of R before position i)_+)``.

    For the 0/1 matrix of a permutation this equals :func:`access_cost`; it is
    also defined (and used) for fractional matrices.
    """
    m = as_array(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    r.check_universe(m.shape[0])
    mass = m[r.index].sum(axis=0)
    before = np.concatenate(([0.0], np.cumsum(mass)[:-1]))
    return float(np.minimum(1.0, np.maximum(r.demand - before, 0.0)).sum())


def perm_to_matrix(pi: Permutation) -> DSMatrix:
    n = pi.n
    m = np.zeros((n, n))
    m[np.asarray(pi.order) - 1, np.arange(n)] = 1.0
    return DSMatrix(m, tol=0.0)


def matrix_to_perm(a: MatrixLike) -> Permutation:
    """Inverse of :func:`perm_to_matrix` for 0/1 permutation matrices."""
    m = as_array(a)
    n = m.shape[0]
    if not np.array_equal(m, m.round()) or feasibility_violation(m) > 0:
        raise ValueError("matrix is not a permutation matrix")
    return Permutation(tuple(int(e) + 1 for e in np.argmax(m, axis=0)))


# -- instance files ---------------------------------------------------------


def _parse_request(obj, t: int, n: int) -> Request:
    if not isinstance(obj, dict):
        raise InstanceFormatError("expected an object with 'items' and 'k'", t)
    unknown = set(obj) - {"items", "k"}
    if unknown:
        raise InstanceFormatError(f"unknown fields {sorted(unknown)}", t)
    items = obj.get("items")
    k = obj.get("k", 1)
    if not isinstance(items, list) or not items:
        raise InstanceFormatError("'items' must be a non-empty array", t)
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in items):
        raise InstanceFormatError("'items' must contain integers", t)
    if len(set(items)) != len(items):
        raise InstanceFormatError(f"duplicate items in {items}", t)
    if not all(1 <= x <= n for x in items):
        raise InstanceFormatError(f"items {items} fall outside 1..{n}", t)
    if not isinstance(k, int) or isinstance(k, bool):
        raise InstanceFormatError("'k' must be an integer", t)
    if not 1 <= k <= len(items):
        raise InstanceFormatError(f"demand k={k} outside [1, {len(items)}]", t)
    return Request(frozenset(items), k)


def parse_instance(text: Union[bytes, str]) -> Instance:
    """Parse the JSON instance format (see README for the grammar)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"malformed document: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    unknown = set(doc) - {"n", "requests"}
    if unknown:
        raise InstanceFormatError(f"unknown top-level fields {sorted(unknown)}")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InstanceFormatError("'n' must be a positive integer")
    reqs = doc.get("requests", [])
    if not isinstance(reqs, list):
        raise InstanceFormatError("'requests' must be an array")
    return Instance(n, tuple(_parse_request(obj, t, n) for t, obj in enumerate(reqs)))


def serialize_instance(inst: Instance) -> bytes:
    lines = ["{", f'  "n": {inst.n},']
    if not inst.requests:
        lines.append('  "requests": []')
    else:
        lines.append('  "requests": [')
        body = [
            f'    {{"items": {json.dumps(sorted(r.items))}, "k": {r.demand}}}'
            for r in inst.requests
        ]
        lines.append(",\n".join(body))
        lines.append("  ]")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def requests_from_lists(n: int, sets: Iterable[Iterable[int]], demand: int = 1) -> Instance:
    """Build an instance from plain item lists, all with the same demand."""
    return Instance(n, tuple(Request(frozenset(s), demand) for s in sets))
