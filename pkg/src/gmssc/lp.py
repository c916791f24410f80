"""Thin wrapper over the HiGHS dual simplex shipped with scipy."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .errors import SolverError

_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
    "presolve": True,
}


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None), maximize=False):
    """Solve a small dense LP and return ``(x, objective)``.

    Every LP built by this package is feasible and bounded, so any other
    status is reported as :class:`SolverError`.
    """
    c = np.asarray(c, dtype=float)
    sign = -1.0 if maximize else 1.0
    res = linprog(
        sign * c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
        options=_OPTIONS,
    )
    if res.status != 0:
        raise SolverError(f"LP solve failed (status {res.status}): {res.message}")
    return res.x, float(c @ res.x)
