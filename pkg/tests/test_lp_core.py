"""Generic LP wrapper and the closed-form single-slope solver."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

import persuade as P
from persuade.lp_core import CONSTRAINT_TOL, LinearProgram, solve_lp, solve_slope_lp
from persuade.model import ActionType, IIDInstance, all_types
from persuade.prob_oracle import (
    SegmentProb,
    UniquePointProb,
    candidate_slopes,
    segment_probabilities,
    unique_probabilities,
)


def test_solve_lp_simple_maximum():
    lp = LinearProgram(objective=(1.0,), rows=(((1.0,), "<=", 1.0),), bounds=((0.0, 2.0),))
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert abs(sol.objective - 1.0) < 1e-9
    assert abs(sol.values[0] - 1.0) < 1e-9


def test_solve_lp_infeasible():
    lp = LinearProgram(objective=(1.0,), rows=(((1.0,), ">=", 2.0),), bounds=((0.0, 1.0),))
    sol = solve_lp(lp)
    assert sol.status == "infeasible"
    assert sol.values is None
    assert sol.objective is None


def test_solve_lp_unbounded():
    lp = LinearProgram(objective=(1.0,), rows=(), bounds=((0.0, None),))
    assert solve_lp(lp).status == "unbounded"


def test_solve_lp_equality_and_mapping_rows():
    lp = LinearProgram(objective=(1.0, 2.0), rows=(({0: 1.0, 1: 1.0}, "=", 1.0),), bounds=None)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert abs(sol.objective - 2.0) < 1e-9
    assert abs(sol.values[1] - 1.0) < 1e-9


def test_solve_lp_two_variable_vertex():
    # max 3x + 2y s.t. x + y <= 4, x <= 2: optimum at (2, 2).
    lp = LinearProgram(
        objective=(3.0, 2.0),
        rows=(((1.0, 1.0), "<=", 4.0), ((1.0, 0.0), "<=", 2.0)),
        bounds=None,
    )
    sol = solve_lp(lp)
    assert abs(sol.objective - 10.0) < 1e-9
    assert abs(sol.values[0] - 2.0) < 1e-9 and abs(sol.values[1] - 2.0) < 1e-9


def tug_inputs(k: int, s):
    inst = P.load_fixture("tug_of_war")
    segs = [seg for seg in segment_probabilities(inst, k) if seg.slope == s and seg.p > 0]
    uniq = unique_probabilities(inst, k, s)
    return segs, uniq


def test_slope_lp_frozen_running_example():
    rho_e = Fraction(1, 3)
    segs, uniq = tug_inputs(2, Fraction(-1))
    res = solve_slope_lp(segs, uniq, rho_e, Fraction(-1))
    assert res is not None
    assert res.alphas == (1.0,)
    assert abs(res.u_sender - 2 / 3) < 1e-12
    assert abs(res.u_receiver - 1 / 3) < 1e-12

    segs3, uniq3 = tug_inputs(3, Fraction(-1))
    res3 = solve_slope_lp(segs3, uniq3, rho_e, Fraction(-1))
    assert res3 is not None
    assert abs(res3.alphas[0] - 2 / 3) < 1e-12
    assert abs(res3.u_sender - 2 / 3) < 1e-12
    assert abs(res3.u_receiver - 1 / 3) < 1e-12


def test_slope_lp_infeasible_slope_returns_none():
    a = ActionType("a", Fraction(0), Fraction(1))
    b = ActionType("b", Fraction(1), Fraction(0))
    inst = IIDInstance(palette=((a, Fraction(1, 2)), (b, Fraction(1, 2))), n=2)
    rho_e = P.best_fixed_action_value(inst)
    assert rho_e == Fraction(1, 2)
    uniq = unique_probabilities(inst, 2, Fraction(0))
    assert solve_slope_lp([], uniq, rho_e, Fraction(0)) is None


def test_slope_lp_rejects_mismatched_inputs():
    a = ActionType("a", Fraction(0), Fraction(1))
    b = ActionType("b", Fraction(1), Fraction(0))
    seg = SegmentProb(a=a, b=b, slope=Fraction(-1), p=1.0)
    with pytest.raises(ValueError, match="slope"):
        solve_slope_lp([seg], [], Fraction(1, 2), Fraction(-2))
    pt = UniquePointProb(c=a, s=Fraction(-1), p=1.0)
    with pytest.raises(ValueError, match="slope"):
        solve_slope_lp([], [pt], Fraction(1, 2), Fraction(-2))


def random_slope_inputs(rng):
    """Synthetic same-slope segment and unique tables with total mass 1."""
    s = -Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 9)))
    n_seg = int(rng.integers(1, 4))
    n_un = int(rng.integers(0, 3))
    raw = rng.random(n_seg + n_un)
    mass = raw / raw.sum()
    segments = []
    for j in range(n_seg):
        rho_a = Fraction(int(rng.integers(0, 5)), 8)
        width = Fraction(int(rng.integers(1, 9)), 8)
        xi_a = Fraction(int(rng.integers(4, 17)), 8)
        a = ActionType(f"a{j}", rho_a, xi_a)
        b = ActionType(f"b{j}", rho_a + width, xi_a + s * width)
        segments.append(SegmentProb(a=a, b=b, slope=s, p=float(mass[j])))
    uniques = []
    for j in range(n_un):
        c = ActionType(
            f"c{j}", Fraction(int(rng.integers(0, 9)), 8), Fraction(int(rng.integers(0, 9)), 8)
        )
        uniques.append(UniquePointProb(c=c, s=s, p=float(mass[n_seg + j])))
    return segments, uniques, s


def test_slope_lp_matches_explicit_lp():
    rng = np.random.default_rng(8)
    agree = 0
    for _ in range(200):
        segments, uniques, s = random_slope_inputs(rng)
        rho_e = float(rng.random()) * 1.2
        closed = solve_slope_lp(segments, uniques, rho_e, s)

        const_sender = sum(seg.p * float(seg.b.xi) for seg in segments)
        const_sender += sum(pt.p * float(pt.c.xi) for pt in uniques)
        const_receiver = sum(seg.p * float(seg.b.rho) for seg in segments)
        const_receiver += sum(pt.p * float(pt.c.rho) for pt in uniques)
        objective = tuple(seg.p * float(seg.a.xi - seg.b.xi) for seg in segments)
        row = tuple(seg.p * float(seg.a.rho - seg.b.rho) for seg in segments)
        lp = LinearProgram(
            objective=objective,
            rows=((row, ">=", rho_e - const_receiver),),
            bounds=tuple((0.0, 1.0) for _ in segments),
        )
        sol = solve_lp(lp)
        if closed is None:
            # The closed form applies a small feasibility tolerance, so only
            # clearly infeasible LPs must agree.
            if sol.status == "optimal":
                slack = const_receiver + sum(
                    r * v for r, v in zip(row, sol.values)
                ) - rho_e
                assert slack < 0 or abs(slack) < 10 * CONSTRAINT_TOL
            else:
                assert sol.status == "infeasible"
        else:
            assert sol.status == "optimal"
            assert abs((sol.objective + const_sender) - closed.u_sender) < 1e-7
            agree += 1
    assert agree > 100


def test_slope_lp_tolerance_band():
    # A deficit within the constraint tolerance keeps alpha at 1.
    a = ActionType("a", Fraction(0), Fraction(1))
    b = ActionType("b", Fraction(1), Fraction(0))
    seg = SegmentProb(a=a, b=b, slope=Fraction(-1), p=1.0)
    res = solve_slope_lp([seg], [], CONSTRAINT_TOL / 2, Fraction(-1))
    assert res is not None and res.alphas == (1.0,)
    assert res.u_sender == 1.0
