"""Instance model: action types, scenario instances, exact priors, JSON interchange.

Utilities and input probabilities are exact `fractions.Fraction` values so that
slope grouping and tie detection downstream can rely on exact comparisons.
Derived quantities (oracle probabilities, LP solutions) are floats.

All types are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "ActionType",
    "DRandomOrderInstance",
    "IIDInstance",
    "IndependentInstance",
    "Instance",
    "InstanceFormatError",
    "ProphetSecretaryInstance",
    "State",
    "SymmetricInstance",
    "TruncatedSymmetricInstance",
    "all_types",
    "best_fixed_action_value",
    "fixture_names",
    "format_rational",
    "instance_from_dict",
    "instance_to_dict",
    "load_fixture",
    "load_instance",
    "n_slots",
    "parse_rational",
    "sample_state",
    "save_instance",
    "truncate",
]


class InstanceFormatError(ValueError):
    """Raised when an instance document or constructor argument is malformed."""


def parse_rational(value: int | str | Fraction) -> Fraction:
    """Parse an exact rational from an int, a "p/q" string, or a Fraction."""
    if isinstance(value, bool):
        raise InstanceFormatError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceFormatError(f"not a rational: {value!r}") from exc
    raise InstanceFormatError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> int | str:
    """Format a rational for JSON: integers stay integers, otherwise "p/q"."""
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class ActionType:
    """One possible realization of an action: receiver utility rho, sender utility xi.

    Ids are unique within an instance; two distinct ids may share the same
    (rho, xi) pair, so all set logic downstream is keyed by id.
    """

    id: str
    rho: Fraction
    xi: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.rho, Fraction) or not isinstance(self.xi, Fraction):
            raise InstanceFormatError(f"type {self.id!r}: utilities must be exact rationals")


# A realized state assigns one type to every slot (symmetric) or action (independent).
State = tuple[ActionType, ...]

# (type, probability) pairs forming one discrete distribution.
TypeDist = tuple[tuple[ActionType, Fraction], ...]


def _check_distribution(dist: TypeDist, where: str) -> None:
    total = Fraction(0)
    for t, q in dist:
        if not isinstance(q, Fraction):
            raise InstanceFormatError(f"{where}: probability of {t.id!r} is not an exact rational")
        if q < 0:
            raise InstanceFormatError(f"{where}: negative probability for {t.id!r}")
        total += q
    if total != 1:
        raise InstanceFormatError(f"{where}: probabilities sum to {total}, expected 1")


@dataclass(frozen=True)
class IIDInstance:
    """n slots drawn independently from one shared palette of types."""

    palette: TypeDist
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InstanceFormatError("iid: n must be at least 1")
        if not self.palette:
            raise InstanceFormatError("iid: empty palette")
        _check_distribution(self.palette, "iid palette")
        _check_unique_ids(t for t, _ in self.palette)


@dataclass(frozen=True)
class ProphetSecretaryInstance:
    """n independent draws, one per distribution, observed in uniformly random order."""

    dists: tuple[TypeDist, ...]

    def __post_init__(self) -> None:
        if not self.dists:
            raise InstanceFormatError("prophet_secretary: no distributions")
        for i, dist in enumerate(self.dists):
            if not dist:
                raise InstanceFormatError(f"prophet_secretary: distribution {i} is empty")
            _check_distribution(dist, f"prophet_secretary distribution {i}")
        _check_unique_ids(t for dist in self.dists for t, _ in dist)


@dataclass(frozen=True)
class DRandomOrderInstance:
    """One of d fixed type vectors is drawn, then its entries are uniformly permuted."""

    vectors: tuple[tuple[ActionType, ...], ...]
    vector_probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.vectors:
            raise InstanceFormatError("d_random_order: no vectors")
        if len(self.vectors) != len(self.vector_probs):
            raise InstanceFormatError("d_random_order: vectors and vector_probs length mismatch")
        n = len(self.vectors[0])
        if n < 1:
            raise InstanceFormatError("d_random_order: empty vector")
        for j, vec in enumerate(self.vectors):
            if len(vec) != n:
                raise InstanceFormatError(f"d_random_order: vector {j} has length {len(vec)}, expected {n}")
        total = Fraction(0)
        for j, q in enumerate(self.vector_probs):
            if not isinstance(q, Fraction):
                raise InstanceFormatError(f"d_random_order: vector_probs[{j}] is not an exact rational")
            if q < 0:
                raise InstanceFormatError(f"d_random_order: vector_probs[{j}] is negative")
            total += q
        if total != 1:
            raise InstanceFormatError(f"d_random_order: vector_probs sum to {total}, expected 1")
        _check_unique_ids(t for vec in self.vectors for t in vec)


@dataclass(frozen=True)
class TruncatedSymmetricInstance:
    """View of a permutation-based instance exposing only its first `n` slots.

    Dropping distributions or vector entries would change each slot's marginal
    law, so truncation keeps the full permutation semantics and crops observed
    states instead. Internal representation only; not part of the JSON schema.
    """

    base: Union[ProphetSecretaryInstance, DRandomOrderInstance]
    n: int

    def __post_init__(self) -> None:
        base_n = n_slots(self.base)
        if not 1 <= self.n <= base_n:
            raise InstanceFormatError(f"truncated view: n={self.n} outside [1, {base_n}]")


@dataclass(frozen=True)
class IndependentInstance:
    """n actions with independent type draws; signals recommend actions directly.

    `designated` is the index of the a-priori receiver-optimal action: the one
    maximizing expected receiver utility, ties broken by maximal expected sender
    utility, then by lowest index.
    """

    actions: tuple[TypeDist, ...]
    designated: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.actions:
            raise InstanceFormatError("independent: no actions")
        for i, dist in enumerate(self.actions):
            if not dist:
                raise InstanceFormatError(f"independent: action {i} has no types")
            _check_distribution(dist, f"independent action {i}")
        _check_unique_ids(t for dist in self.actions for t, _ in dist)
        best = max(
            range(len(self.actions)),
            key=lambda i: (
                sum(q * t.rho for t, q in self.actions[i]),
                sum(q * t.xi for t, q in self.actions[i]),
                -i,
            ),
        )
        object.__setattr__(self, "designated", best)


SymmetricInstance = Union[
    IIDInstance, ProphetSecretaryInstance, DRandomOrderInstance, TruncatedSymmetricInstance
]
Instance = Union[SymmetricInstance, IndependentInstance]


def _check_unique_ids(types) -> None:
    seen: dict[str, ActionType] = {}
    for t in types:
        prev = seen.get(t.id)
        if prev is not None and prev is not t and prev != t:
            raise InstanceFormatError(f"duplicate type id {t.id!r} with conflicting utilities")
        if prev is not None and prev is not t and prev == t:
            raise InstanceFormatError(f"duplicate type id {t.id!r}")
        seen[t.id] = t


def n_slots(instance: Instance) -> int:
    """Number of actions (equivalently observable slots) of an instance."""
    if isinstance(instance, IIDInstance):
        return instance.n
    if isinstance(instance, ProphetSecretaryInstance):
        return len(instance.dists)
    if isinstance(instance, DRandomOrderInstance):
        return len(instance.vectors[0])
    if isinstance(instance, TruncatedSymmetricInstance):
        return instance.n
    if isinstance(instance, IndependentInstance):
        return len(instance.actions)
    raise TypeError(f"not an instance: {instance!r}")


def all_types(instance: Instance) -> tuple[ActionType, ...]:
    """Every distinct type of the instance, in deterministic declaration order.

    A type object may back several distributions (shared supports are legal);
    it is listed once, at its first occurrence.
    """
    if isinstance(instance, IIDInstance):
        listed = (t for t, _ in instance.palette)
    elif isinstance(instance, ProphetSecretaryInstance):
        listed = (t for dist in instance.dists for t, _ in dist)
    elif isinstance(instance, DRandomOrderInstance):
        listed = (t for vec in instance.vectors for t in vec)
    elif isinstance(instance, TruncatedSymmetricInstance):
        return all_types(instance.base)
    elif isinstance(instance, IndependentInstance):
        listed = (t for dist in instance.actions for t, _ in dist)
    else:
        raise TypeError(f"not an instance: {instance!r}")
    return tuple({t.id: t for t in listed}.values())


def best_fixed_action_value(instance: Instance) -> Fraction:
    """Expected receiver utility of the best fixed action, computed exactly.

    For symmetric instances every slot has the same marginal law, so this is
    the per-slot expectation; for independent instances it is the maximum over
    actions. A receiver who ignores all signals can always secure this value,
    which is why persuasive schemes must match it.
    """
    if isinstance(instance, IIDInstance):
        return sum((q * t.rho for t, q in instance.palette), Fraction(0))
    if isinstance(instance, ProphetSecretaryInstance):
        n = len(instance.dists)
        total = sum((q * t.rho for dist in instance.dists for t, q in dist), Fraction(0))
        return total / n
    if isinstance(instance, DRandomOrderInstance):
        total = Fraction(0)
        n = len(instance.vectors[0])
        for vec, qv in zip(instance.vectors, instance.vector_probs):
            total += qv * sum((t.rho for t in vec), Fraction(0)) / n
        return total
    if isinstance(instance, TruncatedSymmetricInstance):
        return best_fixed_action_value(instance.base)
    if isinstance(instance, IndependentInstance):
        return max(sum((q * t.rho for t, q in dist), Fraction(0)) for dist in instance.actions)
    raise TypeError(f"not an instance: {instance!r}")


def truncate(instance: SymmetricInstance, k: int) -> SymmetricInstance:
    """Restrict a symmetric instance to its first k observable slots.

    IID instances shrink to a literal copy with n = k. Permutation-based
    instances (prophet-secretary, d-random-order) become views: all n original
    slots still participate in the random order, but only the first k are
    exposed. k = n returns the instance unchanged.
    """
    n = n_slots(instance)
    if not 1 <= k <= n:
        raise ValueError(f"truncate: k={k} outside [1, {n}]")
    if k == n:
        return instance
    if isinstance(instance, IIDInstance):
        return IIDInstance(palette=instance.palette, n=k)
    if isinstance(instance, TruncatedSymmetricInstance):
        return TruncatedSymmetricInstance(base=instance.base, n=k)
    if isinstance(instance, (ProphetSecretaryInstance, DRandomOrderInstance)):
        return TruncatedSymmetricInstance(base=instance, n=k)
    raise TypeError(f"not a symmetric instance: {instance!r}")


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def _draw(dist: TypeDist, rng: np.random.Generator) -> ActionType:
    probs = np.array([float(q) for _, q in dist])
    probs /= probs.sum()
    idx = rng.choice(len(dist), p=probs)
    return dist[idx][0]


def sample_state(instance: Instance, rng: np.random.Generator) -> State:
    """Draw one state from the instance's prior using the supplied generator.

    Sampling converts exact probabilities to floats; exact computations should
    use `persuade.exact_oracle.enumerate_prior` instead.
    """
    if isinstance(instance, IIDInstance):
        return tuple(_draw(instance.palette, rng) for _ in range(instance.n))
    if isinstance(instance, ProphetSecretaryInstance):
        order = rng.permutation(len(instance.dists))
        return tuple(_draw(instance.dists[i], rng) for i in order)
    if isinstance(instance, DRandomOrderInstance):
        probs = np.array([float(q) for q in instance.vector_probs])
        probs /= probs.sum()
        vec = instance.vectors[rng.choice(len(instance.vectors), p=probs)]
        order = rng.permutation(len(vec))
        return tuple(vec[i] for i in order)
    if isinstance(instance, TruncatedSymmetricInstance):
        return sample_state(instance.base, rng)[: instance.n]
    if isinstance(instance, IndependentInstance):
        return tuple(_draw(dist, rng) for dist in instance.actions)
    raise TypeError(f"not an instance: {instance!r}")


# --------------------------------------------------------------------------
# JSON interchange
# --------------------------------------------------------------------------

def _type_from_dict(obj: dict, where: str, want_q: bool) -> tuple[ActionType, Fraction | None]:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected a type object, got {obj!r}")
    try:
        tid = obj["id"]
        rho = parse_rational(obj["rho"])
        xi = parse_rational(obj["xi"])
    except KeyError as exc:
        raise InstanceFormatError(f"{where}: missing field {exc.args[0]!r}") from exc
    if not isinstance(tid, str) or not tid:
        raise InstanceFormatError(f"{where}: type id must be a non-empty string")
    q: Fraction | None = None
    if want_q:
        if "q" not in obj:
            raise InstanceFormatError(f"{where}: missing probability 'q'")
        q = parse_rational(obj["q"])
    return ActionType(id=tid, rho=rho, xi=xi), q


def _type_to_dict(t: ActionType, q: Fraction | None = None) -> dict:
    obj: dict = {"id": t.id, "rho": format_rational(t.rho), "xi": format_rational(t.xi)}
    if q is not None:
        obj["q"] = format_rational(q)
    return obj


def instance_from_dict(doc: dict) -> Instance:
    """Build an instance from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"instance document must be an object, got {type(doc).__name__}")
    kind = doc.get("kind")
    if kind == "iid":
        n = doc.get("n")
        if not isinstance(n, int):
            raise InstanceFormatError("iid: 'n' must be an integer")
        palette = tuple(
            _type_from_dict(o, "iid palette", want_q=True) for o in doc.get("palette", [])
        )
        return IIDInstance(palette=tuple((t, q) for t, q in palette), n=n)
    if kind == "prophet_secretary":
        dists = []
        for i, raw in enumerate(doc.get("dists", [])):
            dists.append(
                tuple((t, q) for t, q in (_type_from_dict(o, f"dist {i}", want_q=True) for o in raw))
            )
        return ProphetSecretaryInstance(dists=tuple(dists))
    if kind == "d_random_order":
        vectors = []
        for j, raw in enumerate(doc.get("vectors", [])):
            vectors.append(tuple(_type_from_dict(o, f"vector {j}", want_q=False)[0] for o in raw))
        probs = tuple(parse_rational(v) for v in doc.get("vector_probs", []))
        return DRandomOrderInstance(vectors=tuple(vectors), vector_probs=probs)
    if kind == "independent":
        actions = []
        for i, raw in enumerate(doc.get("actions", [])):
            actions.append(
                tuple((t, q) for t, q in (_type_from_dict(o, f"action {i}", want_q=True) for o in raw))
            )
        return IndependentInstance(actions=tuple(actions))
    raise InstanceFormatError(f"unknown instance kind: {kind!r}")


def instance_to_dict(instance: Instance) -> dict:
    """Serialize an instance to a JSON-ready document (exact round trip)."""
    if isinstance(instance, IIDInstance):
        return {
            "kind": "iid",
            "n": instance.n,
            "palette": [_type_to_dict(t, q) for t, q in instance.palette],
        }
    if isinstance(instance, ProphetSecretaryInstance):
        return {
            "kind": "prophet_secretary",
            "dists": [[_type_to_dict(t, q) for t, q in dist] for dist in instance.dists],
        }
    if isinstance(instance, DRandomOrderInstance):
        return {
            "kind": "d_random_order",
            "vectors": [[_type_to_dict(t) for t in vec] for vec in instance.vectors],
            "vector_probs": [format_rational(q) for q in instance.vector_probs],
        }
    if isinstance(instance, IndependentInstance):
        return {
            "kind": "independent",
            "actions": [[_type_to_dict(t, q) for t, q in dist] for dist in instance.actions],
        }
    raise TypeError(f"not serializable (views are internal): {instance!r}")


def load_instance(source: str | Path | dict) -> Instance:
    """Load an instance from a JSON file path or an already-parsed document."""
    if isinstance(source, dict):
        return instance_from_dict(source)
    path = Path(source)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=2) + "\n")


def is_symmetric(instance: Instance) -> bool:
    return not isinstance(instance, IndependentInstance)


def fixture_names() -> tuple[str, ...]:
    """Names of the example instances shipped with the package."""
    root = resources.files(__package__) / "fixtures"
    return tuple(
        sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))
    )


def load_fixture(name: str) -> Instance:
    """Load a shipped example instance by name; see fixture_names()."""
    path = resources.files(__package__) / "fixtures" / f"{name}.json"
    try:
        text = path.read_text()
    except FileNotFoundError:
        known = ", ".join(fixture_names())
        raise InstanceFormatError(f"no fixture named {name!r}; shipped fixtures: {known}")
    return instance_from_dict(json.loads(text))
