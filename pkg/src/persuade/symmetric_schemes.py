"""Signaling schemes for symmetric instances.

The central routine is ``slope_algorithm``: for every candidate tangent
slope it asks the probability oracle for the realizable frontier events,
solves the per-slope scheme LP in closed form, and keeps the best feasible
answer.  The returned scheme is compact (a slope and one recommendation
weight per same-slope segment); execution recomputes the realized Pareto
frontier per state and recommends the tangency point, so it runs on state
spaces far too large to tabulate.

Also here: the imitation wrapper that turns the optimal n-signal scheme
into a persuasive k-signal scheme, and the sampling-based bicriteria LP
that trades exact persuasiveness for epsilon slack.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .geometry import (
    NEG_INF,
    SegmentTangent,
    Slope,
    UniqueVertex,
    pareto_frontier,
    point_for_slope,
)
from .lp_core import CONSTRAINT_TOL, LinearProgram, solve_lp, solve_slope_lp
from .model import (
    ActionType,
    State,
    SymmetricInstance,
    best_fixed_action_value,
    format_rational,
    is_symmetric,
    n_slots,
    parse_rational,
    sample_state,
    truncate,
)
from .prob_oracle import (
    SegmentProb,
    candidate_slopes,
    segment_probabilities,
    unique_probabilities,
)

__all__ = [
    "BicriteriaResult",
    "SlopeScheme",
    "SlopeSchemeExecutor",
    "TabularScheme",
    "bicriteria_scheme",
    "execute_slope_scheme",
    "imitation_scheme",
    "slope_algorithm",
    "slope_scheme_from_dict",
    "slope_scheme_to_dict",
]


# --------------------------------------------------------------------------
# The slope algorithm
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeScheme:
    """Optimal direct persuasive scheme for a symmetric instance, in compact form.

    ``alpha`` maps a same-slope segment, keyed by (low-rho endpoint id,
    high-rho endpoint id), to the probability of recommending the low-rho
    (higher-xi) endpoint when that segment is the realized tangent.
    """

    s_star: Slope
    alpha: Mapping[tuple[str, str], float]
    u_sender: float
    u_receiver: float


def slope_algorithm(instance: SymmetricInstance, k: int, threads: int | None = None) -> SlopeScheme:
    """Compute an optimal direct persuasive scheme with k signals.

    Evaluates the closed-form scheme LP at every candidate slope and keeps
    the feasible one with the best sender utility; ties keep the earliest
    candidate in ascending slope order.  The candidate at -inf (recommend
    the receiver-best realized type) is always feasible, so the sweep
    cannot come back empty.
    """
    if not is_symmetric(instance):
        raise TypeError("slope_algorithm requires a symmetric instance")
    n = n_slots(instance)
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside [2, {n}]")

    rho_e = best_fixed_action_value(instance)
    by_slope: dict[Fraction, list[SegmentProb]] = {}
    for seg in segment_probabilities(instance, k):
        by_slope.setdefault(seg.slope, []).append(seg)
    slopes = candidate_slopes(instance, k)

    def evaluate(s: Slope):
        return solve_slope_lp(
            by_slope.get(s, []), unique_probabilities(instance, k, s), rho_e, s
        )

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(evaluate, slopes))
    else:
        results = [evaluate(s) for s in slopes]

    best_s: Slope | None = None
    best = None
    for s, res in zip(slopes, results):
        if res is None:
            continue
        if best is None or res.u_sender > best.u_sender + 1e-12:
            best, best_s = res, s
    if best is None or best_s is None:
        raise AssertionError(
            "no candidate slope gave a feasible LP; the -inf candidate should always be feasible"
        )

    alpha = {
        (seg.a.id, seg.b.id): a
        for seg, a in zip(by_slope.get(best_s, []), best.alphas)
    }
    assert best.u_receiver >= float(rho_e) - CONSTRAINT_TOL
    return SlopeScheme(s_star=best_s, alpha=alpha, u_sender=best.u_sender, u_receiver=best.u_receiver)


def _slots_holding(state: State, k: int, type_id: str) -> list[int]:
    return [i for i in range(k) if state[i].id == type_id]


@dataclass(frozen=True)
class SlopeSchemeExecutor:
    """Runs a SlopeScheme on realized states.

    Per state the executor rebuilds the Pareto frontier of the first k
    types and finds the correspondence of the scheme's slope.  A segment
    tangent recommends the low-rho endpoint with its stored alpha weight;
    a vertex is recommended outright.  When several of the first k slots
    hold the recommended type, the slot is drawn uniformly among them,
    which keeps the scheme symmetric.
    """

    scheme: SlopeScheme
    k: int

    def recommendation_distribution(self, state: State) -> dict[int, float]:
        if len(state) < self.k:
            raise ValueError(f"state has {len(state)} slots, scheme needs {self.k}")
        frontier = pareto_frontier(state[: self.k])
        corr = point_for_slope(frontier, self.scheme.s_star)
        if isinstance(corr, UniqueVertex):
            weights = [(corr.vertex, 1.0)]
        else:
            key = (corr.left.id, corr.right.id)
            alpha = self.scheme.alpha.get(key)
            if alpha is None:
                raise RuntimeError(
                    f"realized segment {key} at slope {self.scheme.s_star} is missing "
                    "from the scheme; the probability oracle and the frontier disagree"
                )
            weights = [(corr.left, alpha), (corr.right, 1.0 - alpha)]
        out: dict[int, float] = {}
        for point, w in weights:
            if w <= 0.0:
                continue
            slots = _slots_holding(state, self.k, point.id)
            if not slots:
                raise RuntimeError(f"type {point.id} on the frontier but not in the state")
            for slot in slots:
                out[slot] = out.get(slot, 0.0) + w / len(slots)
        return out

    def recommend(self, state: State, rng: np.random.Generator) -> int:
        return _sample_slot(self.recommendation_distribution(state), rng)


def _sample_slot(dist: Mapping[int, float], rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    slots = sorted(dist)
    for slot in slots:
        acc += dist[slot]
        if u < acc:
            return slot
    return slots[-1]


def execute_slope_scheme(
    scheme: SlopeScheme,
    instance: SymmetricInstance,
    k: int,
    state: State,
    rng: np.random.Generator,
) -> int:
    """One-shot execution helper; see SlopeSchemeExecutor."""
    if n_slots(instance) < k:
        raise ValueError(f"instance has {n_slots(instance)} slots, need at least {k}")
    return SlopeSchemeExecutor(scheme, k).recommend(state, rng)


def slope_scheme_to_dict(scheme: SlopeScheme) -> dict:
    entries = [
        {"a": a, "b": b, "alpha": alpha}
        for (a, b), alpha in sorted(scheme.alpha.items())
    ]
    s_star = "-inf" if scheme.s_star is NEG_INF else format_rational(scheme.s_star)
    return {
        "method": "slope",
        "s_star": s_star,
        "alpha": entries,
        "u_sender": scheme.u_sender,
        "u_receiver": scheme.u_receiver,
    }


def slope_scheme_from_dict(data: dict) -> SlopeScheme:
    raw = data["s_star"]
    s_star: Slope = NEG_INF if raw == "-inf" else parse_rational(raw)
    alpha = {(e["a"], e["b"]): float(e["alpha"]) for e in data["alpha"]}
    return SlopeScheme(
        s_star=s_star,
        alpha=alpha,
        u_sender=float(data["u_sender"]),
        u_receiver=float(data["u_receiver"]),
    )


# --------------------------------------------------------------------------
# Imitation: k signals riding on the optimal n-signal scheme
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ImitationExecutor:
    """Forward the n-signal recommendation when it lands in the first k slots,
    otherwise recommend one of the first k slots uniformly at random."""

    base: SlopeSchemeExecutor
    k: int

    @property
    def base_scheme(self) -> SlopeScheme:
        return self.base.scheme

    def recommendation_distribution(self, state: State) -> dict[int, float]:
        base_dist = self.base.recommendation_distribution(state)
        out = {i: 0.0 for i in range(self.k)}
        spread = 0.0
        for slot, p in base_dist.items():
            if slot < self.k:
                out[slot] += p
            else:
                spread += p
        for i in range(self.k):
            out[i] += spread / self.k
        return {i: p for i, p in out.items() if p > 0.0}

    def recommend(self, state: State, rng: np.random.Generator) -> int:
        slot = self.base.recommend(state, rng)
        if slot < self.k:
            return slot
        return int(rng.integers(self.k))


def imitation_scheme(instance: SymmetricInstance, k: int, threads: int | None = None) -> ImitationExecutor:
    """Persuasive k-signal scheme built on the optimal n-signal scheme.

    Its sender utility is at least k/n times the n-signal optimum: with
    probability k/n the optimal recommendation already lies in the first k
    slots and is forwarded unchanged.
    """
    n = n_slots(instance)
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside [2, {n}]")
    base = slope_algorithm(instance, n, threads=threads)
    return ImitationExecutor(base=SlopeSchemeExecutor(base, n), k=k)


# --------------------------------------------------------------------------
# Tabular schemes (brute-force output and the bicriteria LP)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TabularScheme:
    """An explicit state-to-recommendation table.

    ``fallback_slots`` enables a deterministic symmetric fallback for states
    missing from the table (used by sampling-based schemes): recommend
    uniformly among the listed slots holding the receiver-best type.  With
    fallback disabled, unknown states are an error.
    """

    table: Mapping[State, Mapping[int, float]]
    fallback_slots: tuple[int, ...] | None = None

    def recommendation_distribution(self, state: State) -> dict[int, float]:
        dist = self.table.get(state)
        if dist is not None:
            return dict(dist)
        if self.fallback_slots is None:
            raise KeyError(f"state not covered by the scheme: {state!r}")
        best = max((state[i] for i in self.fallback_slots), key=lambda t: (t.rho, t.xi))
        slots = [i for i in self.fallback_slots if state[i].rho == best.rho and state[i].xi == best.xi]
        return {i: 1.0 / len(slots) for i in slots}

    def recommend(self, state: State, rng: np.random.Generator) -> int:
        return _sample_slot(self.recommendation_distribution(state), rng)


def _normalized_row(weights: dict[int, float]) -> dict[int, float]:
    cleaned = {slot: max(0.0, w) for slot, w in weights.items()}
    total = sum(cleaned.values())
    if not 1 - 1e-6 <= total <= 1 + 1e-6:
        raise AssertionError(f"recommendation row sums to {total}")
    return {slot: w / total for slot, w in cleaned.items() if w / total > 1e-15}


# --------------------------------------------------------------------------
# Bicriteria LP on a sampled empirical distribution
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BicriteriaResult:
    """Scheme plus its metrics on the empirical sample it was optimized for."""

    scheme: TabularScheme
    u_sender: float
    u_receiver: float
    max_regret: float
    samples: int
    epsilon: float


def bicriteria_scheme(
    instance: SymmetricInstance,
    k: int,
    epsilon: float,
    samples: int,
    rng: np.random.Generator | int | None = None,
) -> BicriteriaResult:
    """Epsilon-persuasive, approximately optimal scheme from sampled states.

    Truncates the instance to its first k slots, draws an empirical sample,
    and solves an LP maximizing empirical sender utility subject to relaxed
    persuasiveness: per recommended slot, the receiver's conditional regret
    against any other slot is at most epsilon.  The LP's recommendation
    variables are shared across all states with the same type multiset and
    split uniformly among slots holding the recommended type, so the scheme
    is symmetric by construction and permutation ties cost nothing.
    """
    if not is_symmetric(instance):
        raise TypeError("bicriteria_scheme requires a symmetric instance")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    for t in _instance_types(instance):
        if not (-1 <= t.rho <= 1 and -1 <= t.xi <= 1):
            raise ValueError(
                f"type {t.id} has utilities outside [-1, 1]; the bicriteria "
                "guarantee is stated for that scaling"
            )
    n = n_slots(instance)
    if not 2 <= k <= n:
        raise ValueError(f"k={k} outside [2, {n}]")
    rng = np.random.default_rng(rng)

    trunc = truncate(instance, k)
    counts: dict[State, int] = {}
    for _ in range(samples):
        state = sample_state(trunc, rng)
        counts[state] = counts.get(state, 0) + 1

    # One recommendation variable per (type multiset, member type).
    multiset_of: dict[State, tuple[str, ...]] = {}
    types_of: dict[tuple[str, ...], dict[str, ActionType]] = {}
    var_index: dict[tuple[tuple[str, ...], str], int] = {}
    for state in counts:
        key = tuple(sorted(t.id for t in state))
        multiset_of[state] = key
        if key not in types_of:
            types_of[key] = {t.id: t for t in state}
            for tid in sorted(types_of[key]):
                var_index[(key, tid)] = len(var_index)

    n_vars = len(var_index)
    objective = [0.0] * n_vars
    for state, count in counts.items():
        key = multiset_of[state]
        w = count / samples
        for tid, t in types_of[key].items():
            objective[var_index[(key, tid)]] += w * float(t.xi)

    rows: list[tuple[Mapping[int, float], str, float]] = []
    for key, members in types_of.items():
        simplex = {var_index[(key, tid)]: 1.0 for tid in members}
        rows.append((simplex, "=", 1.0))
    # Relaxed persuasiveness: for signal slot i and deviation slot j,
    # E[x_i * (rho_i - rho_j + eps)] >= 0 on the empirical distribution.
    # The LP runs on a slightly tightened epsilon so the solver's own
    # feasibility tolerance cannot push realized regret past the promise.
    eps_lp = max(epsilon - 1e-5, 0.0)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            coeffs: dict[int, float] = {}
            for state, count in counts.items():
                key = multiset_of[state]
                w = count / samples
                mult = sum(1 for t in state if t.id == state[i].id)
                col = var_index[(key, state[i].id)]
                gap = float(state[i].rho - state[j].rho) + eps_lp
                coeffs[col] = coeffs.get(col, 0.0) + w * gap / mult
            rows.append((coeffs, ">=", 0.0))

    solution = solve_lp(
        LinearProgram(
            objective=tuple(objective),
            rows=tuple(rows),
            bounds=((0.0, 1.0),) * n_vars,
        )
    )
    if solution.status != "optimal":
        raise RuntimeError(
            f"bicriteria LP unexpectedly {solution.status}; the receiver-best "
            "scheme is always feasible"
        )
    y = solution.values

    table: dict[State, dict[int, float]] = {}
    for state in counts:
        key = multiset_of[state]
        weights: dict[int, float] = {}
        for i in range(k):
            mult = sum(1 for t in state if t.id == state[i].id)
            weights[i] = y[var_index[(key, state[i].id)]] / mult
        table[state] = _normalized_row(weights)
    scheme = TabularScheme(table=table, fallback_slots=tuple(range(k)))

    u_sender = 0.0
    u_receiver = 0.0
    signal_mass = [0.0] * k
    deviation = [[0.0] * k for _ in range(k)]  # E[x_i * (rho_j - rho_i)]
    for state, count in counts.items():
        w = count / samples
        dist = table[state]
        for i, p in dist.items():
            u_sender += w * p * float(state[i].xi)
            u_receiver += w * p * float(state[i].rho)
            signal_mass[i] += w * p
            for j in range(k):
                deviation[i][j] += w * p * float(state[j].rho - state[i].rho)
    max_regret = 0.0
    for i in range(k):
        if signal_mass[i] <= 1e-12:
            continue  # never-sent signal, no constraint
        for j in range(k):
            max_regret = max(max_regret, deviation[i][j] / signal_mass[i])

    return BicriteriaResult(
        scheme=scheme,
        u_sender=u_sender,
        u_receiver=u_receiver,
        max_regret=max_regret,
        samples=samples,
        epsilon=epsilon,
    )


def _instance_types(instance: SymmetricInstance) -> Iterable[ActionType]:
    from .model import all_types

    return all_types(instance)
