"""Schemes for instances whose actions draw types independently.

With independent actions the optimal k-signal problem reduces to picking
which k actions may ever be recommended and how much recommendation mass
each gets.  The shared-budget relaxation ``f_of_S`` upper-bounds the
optimum for a fixed action set; ``actions_greedy``, ``actions_reduce`` and
``fptas_select`` pick the set; ``expost_scheme`` turns a relaxation
solution into an executable sequential-acceptance scheme whose expected
utilities have closed forms.

The relaxation is tight only on instances where falling back to the
a-priori receiver-best action can never hurt the receiver.  The sufficient
condition checked here is a designated-quality action whose receiver
utility is deterministic; builders refuse other instances unless forced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lp_core import LinearProgram, solve_lp
from .model import (
    IndependentInstance,
    State,
    TypeDist,
    best_fixed_action_value,
)

__all__ = [
    "ExPostScheme",
    "GiCurve",
    "PreconditionError",
    "RelaxationSolution",
    "actions_greedy",
    "actions_reduce",
    "certified_fallback",
    "check_rhoE_optimality",
    "expost_scheme",
    "expost_scheme_to_dict",
    "f_of_S",
    "fptas_select",
    "g_curve",
    "independent_scheme",
]


class PreconditionError(RuntimeError):
    """Raised when a scheme builder refuses an instance it cannot certify."""


def certified_fallback(instance: IndependentInstance) -> int | None:
    """Lowest-index action whose receiver utility is deterministically the
    best fixed-action value, or None when no action qualifies.

    Recommending such an action is always obedient: no amount of
    conditioning can move its value, while every alternative's conditional
    value stays at or below the prior best.
    """
    if not isinstance(instance, IndependentInstance):
        raise TypeError("certified_fallback requires an independent instance")
    rho_e = best_fixed_action_value(instance)
    for i, dist in enumerate(instance.actions):
        if all(t.rho == rho_e for t, q in dist if q > 0):
            return i
    return None


def check_rhoE_optimality(instance: IndependentInstance) -> bool:
    """Sufficient condition for the shared-budget relaxation to be tight.

    True when some action's receiver utility is deterministic and equal to
    the best fixed-action value: a scheme can then fall back on that action
    without dragging any signal's conditional receiver value below the
    threshold.  False means the condition could not be verified, not that
    the instance is refuted.
    """
    return certified_fallback(instance) is not None


# --------------------------------------------------------------------------
# Per-action value curves
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GiCurve:
    """Concave piecewise-linear value curve of a single action.

    The value at z is the best expected sender utility extractable from the
    action with recommendation mass at most z, keeping the action's
    conditional receiver utility at or above the fixed-action threshold.
    Breakpoints are exact rationals, ascending in z from 0 to 1; each entry
    is (z, value at z, slope to the right).  The final entry sits at z = 1
    with slope 0 as a sentinel.
    """

    breakpoints: tuple[tuple[Fraction, Fraction, Fraction], ...]

    def value(self, z: Fraction | int) -> Fraction:
        z = Fraction(z)
        if not 0 <= z <= 1:
            raise ValueError(f"z={z} outside [0, 1]")
        for bz, bv, bs in reversed(self.breakpoints):
            if bz <= z:
                return bv + bs * (z - bz)
        raise AssertionError("breakpoints do not start at z=0")


def g_curve(dist: TypeDist, rho_e: Fraction) -> GiCurve:
    """Exact value curve of one action against receiver threshold rho_e.

    The curve at z is the optimum of: maximize sum_j x_j xi_j subject to
    0 <= x_j <= q_j, sum_j x_j <= z and sum_j x_j (rho_j - rho_e) >= 0.
    Rather than solving that LP per z, we use its dual: for multipliers
    (y, mu) >= 0 on the mass and quality constraints the dual objective

        z*y + sum_j q_j * max(0, xi_j - y + mu*(rho_j - rho_e))

    is linear in z, the dual optimum sits at a vertex of the multiplier
    space, and there are only O(m^2) vertices (axis hits and pairwise kink
    intersections).  The curve is the exact lower envelope of one line per
    vertex, so every breakpoint and value is a Fraction.
    """
    rho_e = Fraction(rho_e)
    xis = [t.xi for t, _ in dist]
    gammas = [t.rho - rho_e for t, _ in dist]
    qs = [q for _, q in dist]
    zero = Fraction(0)

    candidates: set[tuple[Fraction, Fraction]] = {(zero, zero)}
    for j in range(len(dist)):
        if xis[j] >= 0:
            candidates.add((xis[j], zero))
        if gammas[j] != 0:
            mu = -xis[j] / gammas[j]
            if mu >= 0:
                candidates.add((zero, mu))
    for j, jp in combinations(range(len(dist)), 2):
        if gammas[j] == gammas[jp]:
            continue
        mu = (xis[jp] - xis[j]) / (gammas[j] - gammas[jp])
        y = xis[j] + mu * gammas[j]
        if y >= 0 and mu >= 0:
            candidates.add((y, mu))

    lines: set[tuple[Fraction, Fraction]] = set()
    for y, mu in candidates:
        intercept = sum(
            (q * max(zero, xi - y + mu * g) for q, xi, g in zip(qs, xis, gammas)),
            zero,
        )
        lines.add((y, intercept))
    return GiCurve(_lower_envelope(lines))


def _lower_envelope(
    lines: Iterable[tuple[Fraction, Fraction]],
) -> tuple[tuple[Fraction, Fraction, Fraction], ...]:
    """Exact lower envelope of lines value(z) = intercept + slope*z on [0, 1].

    Walks the envelope left to right: starting from the line that is lowest
    at z = 0 (ties to the shallower slope, which stays lowest just after a
    tie), repeatedly find the earliest crossing where a shallower line dips
    below the active one.  Slopes must be nonnegative.
    """
    best: dict[Fraction, Fraction] = {}
    for slope, intercept in lines:
        if slope < 0:
            raise ValueError("envelope expects nonnegative slopes")
        cur = best.get(slope)
        if cur is None or intercept < cur:
            best[slope] = intercept
    pool = sorted(best.items())
    one = Fraction(1)

    slope, intercept = min(pool, key=lambda li: (li[1], li[0]))
    z = Fraction(0)
    breakpoints: list[tuple[Fraction, Fraction, Fraction]] = []
    while True:
        next_z: Fraction | None = None
        next_line: tuple[Fraction, Fraction] | None = None
        for s2, i2 in pool:
            if s2 >= slope:
                continue
            cross = (i2 - intercept) / (slope - s2)
            if not z < cross < one:
                continue
            if next_z is None or cross < next_z or (cross == next_z and s2 < next_line[0]):
                next_z, next_line = cross, (s2, i2)
        if next_z is None:
            breakpoints.append((z, intercept + slope * z, slope))
            breakpoints.append((one, intercept + slope, Fraction(0)))
            return tuple(breakpoints)
        breakpoints.append((z, intercept + slope * z, slope))
        z = next_z
        slope, intercept = next_line


# --------------------------------------------------------------------------
# The shared-budget relaxation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RelaxationSolution:
    """Optimum of the shared-budget relaxation over a set of actions.

    One budget z_i per action and one acceptance mass x_ij per action-type
    pair: budgets sum to at most one, each action's acceptances fit inside
    its budget and its type probabilities, and each action's accepted mass
    clears the receiver threshold on average.  After solving, z_i is
    tightened to sum_j x_ij, which the objective cannot see but which makes
    the budgets meaningful arrival probabilities for scheme building.
    """

    actions: tuple[int, ...]
    z: Mapping[int, float]
    x: Mapping[int, Mapping[str, float]]
    per_action: Mapping[int, float]
    objective: float


def f_of_S(instance: IndependentInstance, S: Iterable[int] = ()) -> RelaxationSolution:
    """Solve the shared-budget relaxation over S plus the designated action."""
    if not isinstance(instance, IndependentInstance):
        raise TypeError("f_of_S requires an independent instance")
    n = len(instance.actions)
    actions = sorted(set(S) | {instance.designated})
    for i in actions:
        if not 0 <= i < n:
            raise ValueError(f"action index {i} out of range for {n} actions")
    rho_e = best_fixed_action_value(instance)

    z_col = {a: idx for idx, a in enumerate(actions)}
    x_col: dict[tuple[int, str], int] = {}
    objective: list[float] = [0.0] * len(actions)
    bounds: list[tuple[float, float]] = [(0.0, 1.0)] * len(actions)
    for a in actions:
        for t, q in instance.actions[a]:
            x_col[(a, t.id)] = len(objective)
            objective.append(float(t.xi))
            bounds.append((0.0, float(q)))

    rows: list[tuple[Mapping[int, float], str, float]] = []
    rows.append(({z_col[a]: 1.0 for a in actions}, "<=", 1.0))
    for a in actions:
        fit = {x_col[(a, t.id)]: 1.0 for t, _ in instance.actions[a]}
        fit[z_col[a]] = -1.0
        rows.append((fit, "<=", 0.0))
        quality = {
            x_col[(a, t.id)]: float(t.rho - rho_e) for t, _ in instance.actions[a]
        }
        rows.append((quality, ">=", 0.0))

    solution = solve_lp(
        LinearProgram(objective=tuple(objective), rows=tuple(rows), bounds=tuple(bounds))
    )
    if solution.status != "optimal":
        raise RuntimeError(
            f"relaxation LP unexpectedly {solution.status}; the zero scheme is feasible"
        )

    x: dict[int, dict[str, float]] = {}
    z: dict[int, float] = {}
    per_action: dict[int, float] = {}
    for a in actions:
        row = {}
        for t, q in instance.actions[a]:
            row[t.id] = min(max(solution.values[x_col[(a, t.id)]], 0.0), float(q))
        x[a] = row
        z[a] = sum(row.values())
        per_action[a] = sum(
            row[t.id] * float(t.xi) for t, _ in instance.actions[a]
        )
    return RelaxationSolution(
        actions=tuple(actions),
        z=z,
        x=x,
        per_action=per_action,
        objective=solution.objective,
    )


# --------------------------------------------------------------------------
# Action selection
# --------------------------------------------------------------------------

def _validate_k(instance: IndependentInstance, k: int) -> list[int]:
    n = len(instance.actions)
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside [2, {n}]")
    return [i for i in range(n) if i != instance.designated]


def actions_greedy(instance: IndependentInstance, k: int) -> tuple[int, ...]:
    """Pick k-1 actions by greedy marginal gain of the relaxation value.

    Ties go to the lowest action index.  The relaxation value is monotone
    and submodular in the action set, so the greedy set is within the
    classic 1 - (1 - 1/k)^(k-1) style factor of the best set of its size.
    """
    others = _validate_k(instance, k)
    chosen: list[int] = []
    current = f_of_S(instance, ()).objective
    for _ in range(k - 1):
        best_gain = None
        best_i = None
        best_val = None
        for i in others:
            if i in chosen:
                continue
            val = f_of_S(instance, chosen + [i]).objective
            gain = val - current
            if best_gain is None or gain > best_gain + 1e-12:
                best_gain, best_i, best_val = gain, i, val
        chosen.append(best_i)
        current = best_val
    return tuple(chosen)


def actions_reduce(instance: IndependentInstance, k: int) -> tuple[int, ...]:
    """Keep the k-1 actions contributing most to the full relaxation.

    Solves the relaxation once over every non-designated action and keeps
    the largest per-action contributions, ties to the lowest index.  Cheap,
    and still within a (k-1)/(n-1) factor of the full relaxation value.
    """
    others = _validate_k(instance, k)
    relax = f_of_S(instance, others)
    ranked = sorted(others, key=lambda i: (-relax.per_action[i], i))
    return tuple(sorted(ranked[: k - 1]))


@dataclass(frozen=True)
class _PackEntry:
    action: int
    w_r: Fraction  # mass of particles strictly above the guessed marginal
    p_r: Fraction  # curve value collected by those particles
    p_o: Fraction  # value of the plateau exactly at the guessed marginal


def _guess_knapsack(
    designated: _PackEntry,
    others: Sequence[_PackEntry],
    k: int,
    m: Fraction,
    kappa: Fraction,
) -> tuple[int, ...]:
    """Best at-most-(k-1) subset of `others` for one guessed marginal m.

    Values are floored to multiples of kappa so the state space stays
    polynomial; sizes stay exact.  Each packed action commits its above-m
    mass w_r outright, while plateau mass is flexible and fills whatever
    budget remains at rate m per unit.  Returns the chosen action tuple.
    """
    def rounded(p: Fraction) -> int:
        return int(p / kappa)

    # state: (actions chosen, rounded above-m value, rounded plateau value)
    # mapped to the smallest committed mass reaching it, plus the choice set.
    start = (0, rounded(designated.p_r), rounded(designated.p_o))
    states: dict[tuple[int, int, int], tuple[Fraction, tuple[int, ...]]] = {
        start: (designated.w_r, ())
    }
    for entry in others:
        pr_i, po_i = rounded(entry.p_r), rounded(entry.p_o)
        merged = dict(states)
        for (j, pr, po), (size, chosen) in states.items():
            if j >= k - 1:
                continue
            nsize = size + entry.w_r
            if nsize > 1:
                continue
            nstate = (j + 1, pr + pr_i, po + po_i)
            cand = (nsize, chosen + (entry.action,))
            cur = merged.get(nstate)
            if cur is None or cand < cur:
                merged[nstate] = cand
        states = merged

    best_key = None
    best_chosen: tuple[int, ...] = ()
    for (j, pr, po), (size, chosen) in sorted(states.items()):
        value = kappa * pr + min(m * (1 - size), kappa * po)
        key = (value, chosen)
        if best_key is None or value > best_key[0] or (value == best_key[0] and chosen < best_key[1]):
            best_key = (value, chosen)
            best_chosen = chosen
    return best_chosen


def fptas_select(instance: IndependentInstance, k: int, epsilon: float) -> tuple[int, ...]:
    """Pick k-1 actions whose relaxation value is within 1-epsilon of the best set.

    Discretizes every action's value curve into equal-width mass particles,
    guesses the marginal value of the last particle the unknown optimum
    packs, and for each guess solves a rounded knapsack over whole
    above-the-guess prefixes.  Every guess's winning set is then scored by
    the true relaxation and the best one is kept, padded with unused
    lowest-index actions up to exactly k-1.
    """
    others = _validate_k(instance, k)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    rho_e = best_fixed_action_value(instance)
    delta = Fraction(float(epsilon)) / 2
    levels = math.ceil(k / delta)
    tau = Fraction(1, levels)

    participants = others + [instance.designated]
    prefix: dict[int, list[Fraction]] = {}
    marginals: dict[int, list[Fraction]] = {}
    for i in participants:
        curve = g_curve(instance.actions[i], rho_e)
        pref = [curve.value(ell * tau) for ell in range(levels + 1)]
        marg = [pref[ell] - pref[ell - 1] for ell in range(1, levels + 1)]
        assert all(a >= b for a, b in zip(marg, marg[1:])), "value curve not concave"
        prefix[i], marginals[i] = pref, marg

    guesses = sorted(
        {m for marg in marginals.values() for m in marg if m > 0}, reverse=True
    )

    candidates: list[tuple[int, ...]] = [()]
    for m in guesses:
        entries: dict[int, _PackEntry] = {}
        for i in participants:
            marg = marginals[i]
            above = sum(1 for v in marg if v > m)
            plateau = 0
            while above + plateau < levels and marg[above + plateau] == m:
                plateau += 1
            entries[i] = _PackEntry(
                action=i,
                w_r=tau * above,
                p_r=prefix[i][above],
                p_o=m * tau * plateau,
            )
        p_max = max(max(e.p_r, min(m, e.p_o)) for e in entries.values())
        if p_max == 0:
            continue
        kappa = delta * p_max / (2 * k)
        cap = int(2 * k / delta)
        assert all(int(e.p_r / kappa) <= cap for e in entries.values())
        chosen = _guess_knapsack(
            entries[instance.designated],
            [entries[i] for i in others],
            k,
            m,
            kappa,
        )
        candidates.append(tuple(sorted(chosen)))

    best_set: tuple[int, ...] = ()
    best_val = None
    scored: dict[tuple[int, ...], float] = {}
    for S in candidates:
        if S in scored:
            continue
        scored[S] = f_of_S(instance, S).objective
        if best_val is None or scored[S] > best_val + 1e-12:
            best_val, best_set = scored[S], S

    padded = list(best_set)
    for i in others:
        if len(padded) >= k - 1:
            break
        if i not in padded:
            padded.append(i)
    return tuple(sorted(padded))


# --------------------------------------------------------------------------
# Executable scheme
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExPostScheme:
    """Sequential-acceptance scheme realizing a relaxation solution.

    Actions are visited in `order`; the action under inspection is
    recommended with a probability depending only on its own realized type
    (an independent coin).  If every coin fails, the fallback action is
    recommended.  Because coins never look across actions, the expected
    utilities factor exactly into the closed forms stored here.

    `persuasiveness_guaranteed` is False when the scheme was forced onto an
    instance without a deterministic receiver-best action; the fallback
    recommendation may then leave the receiver short of the fixed-action
    threshold.
    """

    order: tuple[int, ...]
    accept: Mapping[int, Mapping[str, float]]
    fallback: int
    u_sender: float
    u_receiver: float
    persuasiveness_guaranteed: bool

    def recommendation_distribution(self, state: State) -> dict[int, float]:
        out: dict[int, float] = {}
        reach = 1.0
        for i in self.order:
            p = self.accept[i].get(state[i].id, 0.0)
            if p > 0.0:
                out[i] = out.get(i, 0.0) + reach * p
            reach *= 1.0 - p
        if reach > 0.0:
            out[self.fallback] = out.get(self.fallback, 0.0) + reach
        return out

    def recommend(self, state: State, rng: np.random.Generator) -> int:
        for i in self.order:
            p = self.accept[i].get(state[i].id, 0.0)
            if p > 0.0 and rng.random() < p:
                return i
        return self.fallback


def expost_scheme(
    instance: IndependentInstance,
    relaxation: RelaxationSolution,
    persuasiveness_guaranteed: bool,
) -> ExPostScheme:
    """Turn a relaxation solution into an executable scheme.

    Actions are ordered by value density (per-action value over budget,
    empty budgets last, ties to the lower index); each is accepted with
    probability x_ij / q_ij on its realized type.  Inspecting denser
    actions first maximizes the closed-form expected sender value among
    orderings of the same solution.

    The fallback is the certified action when one exists: a deterministic
    receiver value cannot be hurt by conditioning on the failed coins, so
    the fallback recommendation stays obedient.  Without a certificate the
    designated action stands in, and obedience is not guaranteed.
    """
    def density(i: int) -> float:
        z = relaxation.z[i]
        return relaxation.per_action[i] / z if z > 1e-15 else 0.0

    order = tuple(sorted(relaxation.actions, key=lambda i: (-density(i), i)))
    accept: dict[int, dict[str, float]] = {}
    for i in relaxation.actions:
        row = {}
        for t, q in instance.actions[i]:
            mass = relaxation.x[i].get(t.id, 0.0)
            row[t.id] = min(mass / float(q), 1.0) if q > 0 else 0.0
        accept[i] = row

    certified = certified_fallback(instance)
    fallback = certified if certified is not None else instance.designated

    u_sender = 0.0
    u_receiver = 0.0
    reach = 1.0
    for i in order:
        u_sender += reach * relaxation.per_action[i]
        u_receiver += reach * sum(
            relaxation.x[i].get(t.id, 0.0) * float(t.rho) for t, _ in instance.actions[i]
        )
        reach *= 1.0 - relaxation.z[i]
    leftover = 1.0 - relaxation.z.get(fallback, 0.0)
    if reach > 0.0 and leftover > 0.0:
        x_row = relaxation.x.get(fallback, {})
        for t, q in instance.actions[fallback]:
            residual = max(float(q) - x_row.get(t.id, 0.0), 0.0)
            u_sender += reach * residual / leftover * float(t.xi)
            u_receiver += reach * residual / leftover * float(t.rho)

    return ExPostScheme(
        order=order,
        accept=accept,
        fallback=fallback,
        u_sender=u_sender,
        u_receiver=u_receiver,
        persuasiveness_guaranteed=persuasiveness_guaranteed,
    )


def independent_scheme(
    instance: IndependentInstance,
    k: int,
    method: str = "greedy",
    epsilon: float | None = None,
    force: bool = False,
) -> ExPostScheme:
    """Select actions, solve the relaxation, and build the executable scheme.

    `method` is one of "greedy", "fptas" (requires `epsilon`) or "reduce".
    Instances without a verified deterministic receiver-best action are
    refused unless `force` is set, because the fallback recommendation can
    then break persuasiveness; forced schemes carry
    persuasiveness_guaranteed=False.
    """
    if not isinstance(instance, IndependentInstance):
        raise TypeError("independent_scheme requires an independent instance")
    verified = check_rhoE_optimality(instance)
    if not verified and not force:
        raise PreconditionError(
            "no action has deterministic receiver utility equal to the best "
            "fixed-action value, so the scheme's fallback cannot be "
            "certified persuasive"
        )
    if method == "greedy":
        S = actions_greedy(instance, k)
    elif method == "reduce":
        S = actions_reduce(instance, k)
    elif method == "fptas":
        if epsilon is None:
            raise ValueError("method 'fptas' requires epsilon")
        S = fptas_select(instance, k, epsilon)
    else:
        raise ValueError(f"unknown method {method!r}")
    relaxation = f_of_S(instance, S)
    return expost_scheme(instance, relaxation, persuasiveness_guaranteed=verified)


def expost_scheme_to_dict(scheme: ExPostScheme) -> dict:
    out = {
        "method": "independent",
        "order": list(scheme.order),
        "accept": {
            str(i): {tid: float(p) for tid, p in sorted(row.items())}
            for i, row in scheme.accept.items()
        },
        "fallback": scheme.fallback,
        "u_sender_lb": scheme.u_sender,
    }
    if not scheme.persuasiveness_guaranteed:
        out["warning"] = "persuasiveness not guaranteed"
    return out
