"""Small linear programs shared by the scheme modules.

Two entry points live here.  ``solve_lp`` is a thin, deterministic wrapper
around scipy's HiGHS backend for the handful of generic LPs in the package
(the brute-force scheme oracle, the relaxation LPs, the bicriteria LP).
``solve_slope_lp`` solves the per-slope scheme LP in closed form: when every
segment shares one slope, trading receiver value for sender value happens at
a single fixed exchange rate, so the optimum is a one-dimensional shift from
the sender-optimal corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .prob_oracle import SegmentProb, UniquePointProb

# One tolerance for every feasibility and verification check in the package.
CONSTRAINT_TOL = 1e-8

RowCoeffs = Union[Sequence[float], Mapping[int, float]]


@dataclass(frozen=True)
class LinearProgram:
    """A maximization LP: max objective @ x subject to rows and box bounds.

    Each row is a triple (coeffs, relation, rhs) with relation one of
    "<=", ">=", "=".  Coefficients may be a dense sequence or a sparse
    {index: value} mapping.  ``bounds`` holds one (low, high) box per
    variable, with None for an unbounded side; if omitted entirely, every
    variable defaults to [0, inf).
    """

    objective: tuple[float, ...]
    rows: tuple[tuple[RowCoeffs, str, float], ...]
    bounds: tuple[tuple[float | None, float | None], ...] | None = None


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal", "infeasible", or "unbounded"
    values: tuple[float, ...] | None
    objective: float | None


def _row_triplets(coeffs: RowCoeffs, row_index: int, n_vars: int):
    """Yield (row, col, value) triplets, validating indices and finiteness."""
    if isinstance(coeffs, Mapping):
        items = coeffs.items()
    else:
        if len(coeffs) != n_vars:
            raise ValueError(
                f"row {row_index} has {len(coeffs)} coefficients, expected {n_vars}"
            )
        items = enumerate(coeffs)
    for col, value in items:
        if not 0 <= col < n_vars:
            raise ValueError(f"row {row_index} references variable {col} out of range")
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"row {row_index} has a non-finite coefficient")
        if value != 0.0:
            yield row_index, col, value


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve a small maximization LP deterministically.

    Returns an LpSolution whose status is "optimal", "infeasible", or
    "unbounded".  Values and objective are None unless optimal.
    """
    n_vars = len(lp.objective)
    objective = np.asarray(lp.objective, dtype=float)
    if not np.all(np.isfinite(objective)):
        raise ValueError("objective has a non-finite coefficient")

    ub_rows: list[tuple[int, int, float]] = []
    ub_rhs: list[float] = []
    eq_rows: list[tuple[int, int, float]] = []
    eq_rhs: list[float] = []
    for coeffs, relation, rhs in lp.rows:
        rhs = float(rhs)
        if relation == "<=":
            target, target_rhs, sign = ub_rows, ub_rhs, 1.0
        elif relation == ">=":
            target, target_rhs, sign = ub_rows, ub_rhs, -1.0
        elif relation == "=":
            target, target_rhs, sign = eq_rows, eq_rhs, 1.0
        else:
            raise ValueError(f"unknown relation {relation!r}")
        row_index = len(target_rhs)
        target.extend(
            (r, c, sign * v) for r, c, v in _row_triplets(coeffs, row_index, n_vars)
        )
        target_rhs.append(sign * rhs)

    def as_matrix(triplets, n_rows):
        if n_rows == 0:
            return None
        rows, cols, vals = zip(*triplets) if triplets else ((), (), ())
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_vars))

    bounds = list(lp.bounds) if lp.bounds is not None else [(0.0, None)] * n_vars
    if len(bounds) != n_vars:
        raise ValueError(f"{len(bounds)} bounds given for {n_vars} variables")

    result = linprog(
        -objective,
        A_ub=as_matrix(ub_rows, len(ub_rhs)),
        b_ub=np.asarray(ub_rhs) if ub_rhs else None,
        A_eq=as_matrix(eq_rows, len(eq_rhs)),
        b_eq=np.asarray(eq_rhs) if eq_rhs else None,
        bounds=bounds,
        method="highs",
    )
    if result.status == 0:
        return LpSolution("optimal", tuple(float(v) for v in result.x), -float(result.fun))
    if result.status == 2:
        return LpSolution("infeasible", None, None)
    if result.status == 3:
        return LpSolution("unbounded", None, None)
    raise RuntimeError(f"LP solver failed: {result.message}")


@dataclass(frozen=True)
class SlopeLpResult:
    """Solution of the per-slope scheme LP.

    ``alphas`` holds one weight per input segment, the probability of
    recommending the segment's low-rho endpoint (the one with higher xi).
    All entries are equal: segments of one slope trade at one rate, so any
    split achieving the same receiver value has the same sender value, and
    the uniform split is the canonical representative.
    """

    alphas: tuple[float, ...]
    u_sender: float
    u_receiver: float


def solve_slope_lp(
    segments: Sequence[SegmentProb],
    uniques: Sequence[UniquePointProb],
    rho_e: Fraction | float,
    s,
) -> SlopeLpResult | None:
    """Maximize sender utility at one candidate slope, or None if infeasible.

    The LP is: max sum p_ab (alpha xi_a + (1-alpha) xi_b) + sum p_c xi_c
    subject to the same expression in rho being at least rho_e and every
    alpha in [0,1].  Because every segment shares slope s, each unit of receiver
    value bought by lowering some alpha costs exactly |s| sender value.  So
    the optimum starts at alpha = 1 (all mass on the higher-xi endpoints)
    and shifts uniformly until the receiver constraint is tight.  The LP is
    infeasible exactly when even alpha = 0 everywhere leaves the receiver
    short by more than the tolerance.
    """
    for seg in segments:
        if seg.slope != s:
            raise ValueError(f"segment {seg.a.id}-{seg.b.id} has slope {seg.slope}, not {s}")
    for pt in uniques:
        if pt.s != s:
            raise ValueError(f"unique point {pt.c.id} was computed for slope {pt.s}, not {s}")

    rho_e = float(rho_e)
    sender = sum(seg.p * float(seg.a.xi) for seg in segments)
    receiver = sum(seg.p * float(seg.a.rho) for seg in segments)
    sender += sum(pt.p * float(pt.c.xi) for pt in uniques)
    receiver += sum(pt.p * float(pt.c.rho) for pt in uniques)
    available = sum(seg.p * float(seg.b.rho - seg.a.rho) for seg in segments)

    deficit = rho_e - receiver
    if deficit <= CONSTRAINT_TOL:
        return SlopeLpResult((1.0,) * len(segments), sender, receiver)
    if deficit > available + CONSTRAINT_TOL:
        return None
    shift = min(1.0, deficit / available)  # fraction of the available receiver gain
    slope = float(s)
    return SlopeLpResult(
        alphas=(1.0 - shift,) * len(segments),
        u_sender=sender + slope * shift * available,
        u_receiver=receiver + shift * available,
    )
