"""Exact ground truth for small instances.

Everything here enumerates the full state space, so it only runs when the
raw combination count clears a guard.  It exists to validate the scalable
paths: the brute-force LP is the reference optimum for the slope algorithm
and the relaxation-based schemes, and the persuasiveness check audits any
executable scheme signal by signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Mapping

from .lp_core import CONSTRAINT_TOL, LinearProgram, solve_lp
from .model import (
    DRandomOrderInstance,
    IIDInstance,
    IndependentInstance,
    Instance,
    ProphetSecretaryInstance,
    State,
    TruncatedSymmetricInstance,
    n_slots,
)
from .symmetric_schemes import TabularScheme

__all__ = [
    "PersuasivenessReport",
    "SignalCheck",
    "enumerate_count",
    "enumerate_prior",
    "expected_utilities",
    "optimal_scheme_bruteforce",
    "persuasiveness_check",
]


def enumerate_count(instance: Instance) -> int:
    """Raw combination count an exact enumeration would visit."""
    if isinstance(instance, IIDInstance):
        return len(instance.palette) ** instance.n
    if isinstance(instance, ProphetSecretaryInstance):
        return math.factorial(len(instance.dists)) * math.prod(
            len(d) for d in instance.dists
        )
    if isinstance(instance, DRandomOrderInstance):
        return len(instance.vectors) * math.factorial(len(instance.vectors[0]))
    if isinstance(instance, TruncatedSymmetricInstance):
        return enumerate_count(instance.base)
    if isinstance(instance, IndependentInstance):
        return math.prod(len(d) for d in instance.actions)
    raise TypeError(f"not an instance: {instance!r}")


def enumerate_prior(instance: Instance, state_bound: int = 10**6) -> dict[State, Fraction]:
    """The exact prior over ordered states, as a dict of Fractions.

    States reachable through several histories (different permutations or
    draws) are aggregated.  Raises ValueError when the raw combination
    count exceeds `state_bound` before doing any work.
    """
    count = enumerate_count(instance)
    if count > state_bound:
        raise ValueError(
            f"exact enumeration would visit {count} combinations, over the "
            f"bound of {state_bound}"
        )
    prior: dict[State, Fraction] = {}

    def add(state: State, prob: Fraction) -> None:
        if prob > 0:
            prior[state] = prior.get(state, Fraction(0)) + prob

    if isinstance(instance, IIDInstance):
        for combo in product(instance.palette, repeat=instance.n):
            prob = math.prod((q for _, q in combo), start=Fraction(1))
            add(tuple(t for t, _ in combo), prob)
    elif isinstance(instance, ProphetSecretaryInstance):
        n = len(instance.dists)
        perm_prob = Fraction(1, math.factorial(n))
        for perm in permutations(range(n)):
            for combo in product(*(instance.dists[i] for i in perm)):
                prob = perm_prob * math.prod((q for _, q in combo), start=Fraction(1))
                add(tuple(t for t, _ in combo), prob)
    elif isinstance(instance, DRandomOrderInstance):
        n = len(instance.vectors[0])
        perm_prob = Fraction(1, math.factorial(n))
        for vec, qv in zip(instance.vectors, instance.vector_probs):
            for perm in permutations(range(n)):
                add(tuple(vec[i] for i in perm), qv * perm_prob)
    elif isinstance(instance, TruncatedSymmetricInstance):
        for state, prob in enumerate_prior(instance.base, state_bound).items():
            add(state[: instance.n], prob)
    elif isinstance(instance, IndependentInstance):
        for combo in product(*instance.actions):
            prob = math.prod((q for _, q in combo), start=Fraction(1))
            add(tuple(t for t, _ in combo), prob)
    else:
        raise TypeError(f"not an instance: {instance!r}")

    assert sum(prior.values()) == 1
    return prior


def expected_utilities(
    scheme, instance: Instance, state_bound: int = 10**6
) -> tuple[float, float]:
    """Exact expected (sender, receiver) utilities of an executable scheme."""
    prior = enumerate_prior(instance, state_bound)
    u_sender = 0.0
    u_receiver = 0.0
    for state, prob in prior.items():
        q = float(prob)
        for i, p in scheme.recommendation_distribution(state).items():
            u_sender += q * p * float(state[i].xi)
            u_receiver += q * p * float(state[i].rho)
    return u_sender, u_receiver


# --------------------------------------------------------------------------
# Brute-force optimum
# --------------------------------------------------------------------------

def optimal_scheme_bruteforce(
    instance: Instance, k: int, state_bound: int = 10**5
) -> tuple[TabularScheme, float]:
    """Exactly optimal persuasive k-signal scheme by direct LP over all states.

    Signals recommend slots.  On symmetric instances only the first k slots
    need ever be recommended; on independent instances every k-subset of
    actions is tried and the best kept.  Per subset the LP maximizes
    expected sender utility over per-state recommendation rows, subject to
    obedience: conditioned on any signal, the recommended slot's receiver
    utility beats every alternative slot in expectation.
    """
    n = n_slots(instance)
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside [2, {n}]")
    prior = enumerate_prior(instance, state_bound)
    states = sorted(prior, key=lambda s: tuple(t.id for t in s))

    if isinstance(instance, IndependentInstance):
        subsets = list(combinations(range(n), k))
    else:
        subsets = [tuple(range(k))]

    best: tuple[float, dict[State, dict[int, float]]] | None = None
    for signals in subsets:
        col: dict[tuple[int, int], int] = {}
        objective: list[float] = []
        for si, state in enumerate(states):
            for i in signals:
                col[(si, i)] = len(objective)
                objective.append(float(prior[state] * state[i].xi))

        rows: list[tuple[Mapping[int, float], str, float]] = []
        for si in range(len(states)):
            rows.append(({col[(si, i)]: 1.0 for i in signals}, "=", 1.0))
        for i in signals:
            for j in range(n):
                if j == i:
                    continue
                coeffs = {
                    col[(si, i)]: float(prior[state] * (state[i].rho - state[j].rho))
                    for si, state in enumerate(states)
                }
                rows.append((coeffs, ">=", 0.0))

        solution = solve_lp(
            LinearProgram(
                objective=tuple(objective),
                rows=tuple(rows),
                bounds=((0.0, 1.0),) * len(objective),
            )
        )
        if solution.status != "optimal":
            continue
        if best is not None and solution.objective <= best[0] + 1e-12:
            continue
        table: dict[State, dict[int, float]] = {}
        for si, state in enumerate(states):
            row = {i: solution.values[col[(si, i)]] for i in signals}
            total = sum(max(p, 0.0) for p in row.values())
            table[state] = {
                i: max(p, 0.0) / total for i, p in row.items() if p > 1e-12
            }
        best = (solution.objective, table)

    if best is None:
        raise RuntimeError(
            "every subset LP came back infeasible; recommending the "
            "receiver-best slot is always obedient, so this cannot happen"
        )
    return TabularScheme(table=best[1]), best[0]


# --------------------------------------------------------------------------
# Persuasiveness audit
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SignalCheck:
    """Conditional receiver account of one signal."""

    probability: float
    value: float  # expected receiver utility of obeying
    best_deviation: float  # best expected receiver utility of any slot
    deviation_slot: int
    persuasive: bool


@dataclass(frozen=True)
class PersuasivenessReport:
    persuasive: bool
    signals: Mapping[int, SignalCheck]


def persuasiveness_check(
    scheme, instance: Instance, state_bound: int = 10**6
) -> PersuasivenessReport:
    """Audit a scheme's obedience constraints by exact enumeration.

    For every signal the scheme can send, compares the receiver's expected
    utility from obeying against the best deviation to any of the n slots,
    both conditioned on the signal.  Signals with zero probability carry no
    constraint.  The scheme only needs a recommendation_distribution
    method.
    """
    n = n_slots(instance)
    prior = enumerate_prior(instance, state_bound)
    mass: dict[int, float] = {}
    obey: dict[int, float] = {}
    deviate: dict[int, list[float]] = {}
    for state, prob in prior.items():
        q = float(prob)
        for i, p in scheme.recommendation_distribution(state).items():
            if p <= 0.0:
                continue
            w = q * p
            mass[i] = mass.get(i, 0.0) + w
            obey[i] = obey.get(i, 0.0) + w * float(state[i].rho)
            slots = deviate.setdefault(i, [0.0] * n)
            for j in range(n):
                slots[j] += w * float(state[j].rho)

    signals: dict[int, SignalCheck] = {}
    all_ok = True
    for i in sorted(mass):
        m = mass[i]
        if m <= 1e-15:
            continue
        value = obey[i] / m
        per_slot = [v / m for v in deviate[i]]
        best_j = max(range(n), key=lambda j: (per_slot[j], -j))
        best_dev = per_slot[best_j]
        ok = value >= best_dev - CONSTRAINT_TOL
        all_ok = all_ok and ok
        signals[i] = SignalCheck(
            probability=m,
            value=value,
            best_deviation=best_dev,
            deviation_slot=best_j,
            persuasive=ok,
        )
    return PersuasivenessReport(persuasive=all_ok, signals=signals)
