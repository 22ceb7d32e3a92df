"""Command line interface.

Exit codes: 0 on success, 1 for validation problems (bad arguments or a
malformed instance), 2 for infeasibility or a violated guarantee, 3 when a
scheme builder refuses an instance it cannot certify (override with
--force).  All commands print JSON with sorted keys and floats rounded to
12 significant digits, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from importlib import resources
from pathlib import Path

import click
import numpy as np

from .exact_oracle import (
    expected_utilities,
    optimal_scheme_bruteforce,
    persuasiveness_check,
)
from .independent_schemes import (
    PreconditionError,
    expost_scheme_to_dict,
    independent_scheme,
)
from .model import (
    InstanceFormatError,
    fixture_names,
    is_symmetric,
    load_instance,
    n_slots,
)
from .simulate import estimate
from .symmetric_schemes import (
    SlopeSchemeExecutor,
    bicriteria_scheme,
    imitation_scheme,
    slope_algorithm,
    slope_scheme_to_dict,
)

_SYMMETRIC_METHODS = ("slope", "imitation", "bicriteria")
_INDEPENDENT_METHODS = ("greedy", "fptas", "reduce")


class _IntOption(click.ParamType):
    """Integer option whose parse failure is a validation error (exit 1).

    Click's built-in types report bad values as usage errors with exit
    code 2, which this tool reserves for infeasibility.
    """

    name = "integer"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        try:
            return int(value)
        except (TypeError, ValueError):
            flag = param.opts[0] if param is not None else "option"
            raise click.ClickException(f"{flag} expects an integer, got {value!r}")


class _FloatOption(click.ParamType):
    name = "float"

    def convert(self, value, param, ctx):
        if isinstance(value, (int, float)):
            return float(value)
        try:
            return float(value)
        except (TypeError, ValueError):
            flag = param.opts[0] if param is not None else "option"
            raise click.ClickException(f"{flag} expects a number, got {value!r}")


_INT = _IntOption()
_FLOAT = _FloatOption()


def _die(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Translate library exceptions into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PreconditionError as exc:
            _die(3, f"{exc} (pass --force to build it anyway)")
        except InstanceFormatError as exc:
            _die(1, str(exc))
        except (ValueError, TypeError) as exc:
            _die(1, str(exc))
        except RuntimeError as exc:
            _die(2, str(exc))

    return wrapper


def _need(value, flag: str):
    if value is None:
        raise ValueError(f"missing required option {flag}")
    return value


def _check_method(method: str, instance) -> None:
    if method not in _SYMMETRIC_METHODS + _INDEPENDENT_METHODS:
        raise ValueError(
            f"unknown method {method!r}; expected one of "
            f"{', '.join(_SYMMETRIC_METHODS + _INDEPENDENT_METHODS)}"
        )
    if method in _SYMMETRIC_METHODS and not is_symmetric(instance):
        raise ValueError(f"method {method!r} needs a symmetric instance")
    if method in _INDEPENDENT_METHODS and is_symmetric(instance):
        raise ValueError(f"method {method!r} needs an independent-actions instance")


def _resolve_threads(threads: int | None) -> int | None:
    if threads is not None:
        return threads
    raw = os.environ.get("PERSUADE_THREADS", "").strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"PERSUADE_THREADS must be an integer, got {raw!r}")


def _round12(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") + 0.0  # adding 0.0 turns -0.0 into 0.0
    if isinstance(obj, dict):
        return {key: _round12(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(value) for value in obj]
    return obj


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(_round12(doc), sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


def _build_executor(instance, k, method, epsilon, samples, seed, threads, force):
    """An object with recommend/recommendation_distribution for any method."""
    _check_method(method, instance)
    if method == "slope":
        return SlopeSchemeExecutor(slope_algorithm(instance, k, threads=threads), k)
    if method == "imitation":
        return imitation_scheme(instance, k, threads=threads)
    if method == "bicriteria":
        _need(epsilon, "--epsilon")
        _need(samples, "--samples")
        result = bicriteria_scheme(instance, k, epsilon, samples, np.random.default_rng(seed))
        return result.scheme
    return independent_scheme(instance, k, method=method, epsilon=epsilon, force=force)


@click.group()
def main() -> None:
    """Signaling schemes for Bayesian persuasion with limited signal spaces."""


@main.command()
@click.option("--instance", "instance_path", type=str, default=None, help="Instance JSON file.")
@click.option("--k", type=_INT, default=None, help="Number of signals.")
@click.option("--method", type=str, default="slope", show_default=True,
              help="slope, imitation or bicriteria for symmetric instances; "
                   "greedy, fptas or reduce for independent ones.")
@click.option("--epsilon", type=_FLOAT, default=None, help="Accuracy for fptas/bicriteria.")
@click.option("--samples", type=_INT, default=None, help="Sample count for bicriteria.")
@click.option("--seed", type=_INT, default=0, show_default=True)
@click.option("--threads", type=_INT, default=None,
              help="Worker threads; defaults to PERSUADE_THREADS if set.")
@click.option("--force", is_flag=True, help="Build even when persuasiveness cannot be certified.")
@click.option("--output", type=str, default=None, help="Write JSON here instead of stdout.")
@_guarded
def solve(instance_path, k, method, epsilon, samples, seed, threads, force, output):
    """Compute a k-signal scheme and print it."""
    instance = load_instance(_need(instance_path, "--instance"))
    k = _need(k, "--k")
    threads = _resolve_threads(threads)
    _check_method(method, instance)
    if method == "slope":
        scheme = slope_algorithm(instance, k, threads=threads)
        doc = slope_scheme_to_dict(scheme)
    elif method == "imitation":
        executor = imitation_scheme(instance, k, threads=threads)
        doc = {
            "method": "imitation",
            "k": k,
            "n": n_slots(instance),
            "base": slope_scheme_to_dict(executor.base_scheme),
        }
    elif method == "bicriteria":
        _need(epsilon, "--epsilon")
        _need(samples, "--samples")
        result = bicriteria_scheme(instance, k, epsilon, samples, np.random.default_rng(seed))
        doc = {
            "method": "bicriteria",
            "epsilon": epsilon,
            "samples": result.samples,
            "seed": seed,
            "u_sender": result.u_sender,
            "u_receiver": result.u_receiver,
            "max_regret": result.max_regret,
        }
    else:
        scheme = independent_scheme(instance, k, method=method, epsilon=epsilon, force=force)
        doc = expost_scheme_to_dict(scheme)
    _emit(doc, output)


@main.command()
@click.option("--instance", "instance_path", type=str, default=None, help="Instance JSON file.")
@click.option("--k", type=_INT, default=None, help="Number of signals.")
@click.option("--state-bound", type=_INT, default=10**5, show_default=True,
              help="Refuse to enumerate more raw state combinations than this.")
@click.option("--output", type=str, default=None)
@_guarded
def exact(instance_path, k, state_bound, output):
    """Exactly optimal scheme by brute-force enumeration (small instances)."""
    instance = load_instance(_need(instance_path, "--instance"))
    k = _need(k, "--k")
    scheme, opt = optimal_scheme_bruteforce(instance, k, state_bound=state_bound)
    report = persuasiveness_check(scheme, instance, state_bound=state_bound)
    doc = {
        "method": "exact",
        "k": k,
        "u_sender": opt,
        "persuasive": report.persuasive,
        "signals": {
            str(i): {
                "probability": s.probability,
                "obey": s.value,
                "best_deviation": s.best_deviation,
            }
            for i, s in report.signals.items()
        },
    }
    _emit(doc, output)


@main.command()
@click.option("--instance", "instance_path", type=str, default=None, help="Instance JSON file.")
@click.option("--k", type=_INT, default=None, help="Number of signals.")
@click.option("--method", type=str, default="slope", show_default=True)
@click.option("--epsilon", type=_FLOAT, default=None)
@click.option("--samples", type=_INT, default=None, help="Monte Carlo sample count.")
@click.option("--seed", type=_INT, default=0, show_default=True)
@click.option("--threads", type=_INT, default=None)
@click.option("--force", is_flag=True)
@click.option("--output", type=str, default=None)
@_guarded
def simulate(instance_path, k, method, epsilon, samples, seed, threads, force, output):
    """Build a scheme and estimate its utilities by simulation."""
    instance = load_instance(_need(instance_path, "--instance"))
    k = _need(k, "--k")
    samples = _need(samples, "--samples")
    threads = _resolve_threads(threads)
    executor = _build_executor(instance, k, method, epsilon, samples, seed, threads, force)
    report = estimate(executor, instance, samples, seed, threads=threads)
    doc = {
        "method": method,
        "k": k,
        "seed": seed,
        "samples": report.samples,
        "sender_mean": report.sender_mean,
        "sender_stderr": report.sender_stderr,
        "receiver_mean": report.receiver_mean,
        "receiver_stderr": report.receiver_stderr,
        "signals": {
            str(i): {
                "count": s.count,
                "frequency": s.frequency,
                "receiver_mean": s.receiver_mean,
                "receiver_stderr": s.receiver_stderr,
            }
            for i, s in report.signals.items()
        },
    }
    _emit(doc, output)


@main.command()
@click.option("--instance", "instance_path", type=str, default=None, help="Instance JSON file.")
@click.option("--k", type=_INT, default=None, help="Number of signals.")
@click.option("--epsilon", type=_FLOAT, default=None,
              help="Include fptas (independent) or bicriteria (symmetric) at this accuracy.")
@click.option("--samples", type=_INT, default=None, help="Bicriteria sample count.")
@click.option("--seed", type=_INT, default=0, show_default=True)
@click.option("--state-bound", type=_INT, default=10**5, show_default=True)
@click.option("--threads", type=_INT, default=None)
@click.option("--force", is_flag=True)
@click.option("--output", type=str, default=None)
@_guarded
def compare(instance_path, k, epsilon, samples, seed, state_bound, threads, force, output):
    """Compare every applicable method against the brute-force optimum.

    Exits with status 2 when a method lands below its guaranteed share of
    the optimum.
    """
    instance = load_instance(_need(instance_path, "--instance"))
    k = _need(k, "--k")
    threads = _resolve_threads(threads)
    _, opt = optimal_scheme_bruteforce(instance, k, state_bound=state_bound)
    n = n_slots(instance)
    cascade = 1.0 - (1.0 - 1.0 / k) ** k

    methods: dict[str, dict] = {}

    def entry(value: float, bound: float | None) -> dict:
        ok = bound is None or value >= bound * opt - 1e-6
        return {
            "value": value,
            "ratio": value / opt if abs(opt) > 1e-12 else None,
            "bound": bound,
            "ok": ok,
        }

    if is_symmetric(instance):
        scheme = slope_algorithm(instance, k, threads=threads)
        methods["slope"] = entry(scheme.u_sender, 1.0)
        executor = imitation_scheme(instance, k, threads=threads)
        value, _ = expected_utilities(executor, instance, state_bound)
        methods["imitation"] = entry(value, k / n)
        if epsilon is not None and samples is not None:
            result = bicriteria_scheme(
                instance, k, epsilon, samples, np.random.default_rng(seed)
            )
            value, _ = expected_utilities(result.scheme, instance, state_bound)
            methods["bicriteria"] = entry(value, None)
    else:
        picks = [("greedy", cascade * (1.0 - (1.0 - 1.0 / k) ** (k - 1)))]
        picks.append(("reduce", cascade * (k - 1) / n))
        if epsilon is not None:
            picks.append(("fptas", cascade * (1.0 - epsilon) * (1.0 - 1.0 / k)))
        for method, bound in picks:
            scheme = independent_scheme(
                instance, k, method=method, epsilon=epsilon, force=force
            )
            methods[method] = entry(scheme.u_sender, bound)

    doc = {"k": k, "u_exact": opt, "methods": methods}
    _emit(doc, output)
    if not all(info["ok"] for info in methods.values()):
        _die(2, "a method fell below its guaranteed share of the optimum")


@main.command()
@click.option("--output", "output_dir", type=str, default=".", show_default=True,
              help="Directory to write the instance files into.")
@_guarded
def fixtures(output_dir):
    """Write the example instances shipped with the package to a directory."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = resources.files("persuade") / "fixtures"
    for name in fixture_names():
        path = out / f"{name}.json"
        path.write_text((root / f"{name}.json").read_text())
        click.echo(str(path))


if __name__ == "__main__":
    main()
