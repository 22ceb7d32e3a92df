"""Command line surface: schemas, exit codes, reproducibility."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

import persuade as P
from persuade.cli import main


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    runner = CliRunner()
    res = runner.invoke(main, ["fixtures", "--output", str(out)])
    assert res.exit_code == 0, res.output
    return out


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def test_fixtures_command_writes_catalog(fixture_dir):
    names = {p.name for p in fixture_dir.iterdir()}
    assert names == {f"{n}.json" for n in P.fixture_names()}
    blob = json.loads((fixture_dir / "tug_of_war.json").read_text())
    assert blob["kind"] == "d_random_order"


def test_solve_slope_schema_and_reproducibility(fixture_dir):
    args = ["solve", "--instance", str(fixture_dir / "tug_of_war.json"), "--k", "3"]
    first = invoke(*args)
    second = invoke(*args)
    assert first.exit_code == 0, first.output
    assert first.output == second.output
    blob = json.loads(first.output)
    assert set(blob) == {"method", "s_star", "alpha", "u_sender", "u_receiver"}
    assert blob["method"] == "slope"
    assert blob["s_star"] == -1
    assert blob["u_sender"] == pytest.approx(2 / 3, abs=1e-9)
    assert blob["alpha"] == [
        {"a": "sender_pick", "alpha": pytest.approx(2 / 3), "b": "receiver_pick"}
    ]
    # Keys are emitted in sorted order and the file ends with a newline.
    assert first.output.endswith("\n")
    assert list(blob) == sorted(blob)


def test_solve_writes_output_file(fixture_dir, tmp_path):
    target = tmp_path / "scheme.json"
    res = invoke(
        "solve",
        "--instance",
        str(fixture_dir / "tug_of_war.json"),
        "--k",
        "2",
        "--output",
        str(target),
    )
    assert res.exit_code == 0, res.output
    blob = json.loads(target.read_text())
    assert blob["method"] == "slope"
    assert blob["s_star"] == -1


def test_solve_refuses_uncertified_greedy(fixture_dir):
    res = invoke(
        "solve", "--instance", str(fixture_dir / "fallback_trap.json"), "--k", "2",
        "--method", "greedy",
    )
    assert res.exit_code == 3
    assert "--force" in res.output
    forced = invoke(
        "solve", "--instance", str(fixture_dir / "fallback_trap.json"), "--k", "2",
        "--method", "greedy", "--force",
    )
    assert forced.exit_code == 0, forced.output
    blob = json.loads(forced.output)
    assert blob["warning"] == "persuasiveness not guaranteed"
    assert blob["method"] == "independent"
    assert set(blob) == {"method", "order", "accept", "fallback", "u_sender_lb", "warning"}


def test_certified_independent_scheme_has_no_warning(fixture_dir, tmp_path):
    import numpy as np

    from corpus import random_best_fixed_deterministic

    inst = random_best_fixed_deterministic(np.random.default_rng(12), 4)
    path = tmp_path / "inst.json"
    P.save_instance(inst, path)
    res = invoke("solve", "--instance", str(path), "--k", "2", "--method", "greedy")
    assert res.exit_code == 0, res.output
    blob = json.loads(res.output)
    assert set(blob) == {"method", "order", "accept", "fallback", "u_sender_lb"}


@pytest.mark.parametrize(
    "args",
    [
        ("solve", "--k", "2"),
        ("solve", "--instance", "nope.json", "--k", "2"),
        ("solve", "--instance", "IGNORED", "--k", "not_an_int"),
    ],
)
def test_validation_failures_exit_1(fixture_dir, args):
    args = [
        a if a != "IGNORED" else str(fixture_dir / "tug_of_war.json") for a in args
    ]
    res = invoke(*args)
    assert res.exit_code == 1, res.output


def test_method_instance_mismatch_exits_1(fixture_dir):
    res = invoke(
        "solve", "--instance", str(fixture_dir / "tug_of_war.json"), "--k", "2",
        "--method", "greedy",
    )
    assert res.exit_code == 1
    res2 = invoke(
        "solve", "--instance", str(fixture_dir / "fallback_trap.json"), "--k", "2",
        "--method", "slope",
    )
    assert res2.exit_code == 1


def test_exact_command_schema(fixture_dir):
    res = invoke("exact", "--instance", str(fixture_dir / "tug_of_war.json"), "--k", "2")
    assert res.exit_code == 0, res.output
    blob = json.loads(res.output)
    assert set(blob) == {"method", "k", "u_sender", "persuasive", "signals"}
    assert blob["method"] == "exact"
    assert blob["persuasive"] is True
    assert blob["u_sender"] == pytest.approx(2 / 3, abs=1e-9)
    for payload in blob["signals"].values():
        assert set(payload) == {"probability", "obey", "best_deviation"}


def test_simulate_command_schema_and_determinism(fixture_dir):
    args = [
        "simulate", "--instance", str(fixture_dir / "tug_of_war.json"), "--k", "2",
        "--samples", "2000", "--seed", "5",
    ]
    first = invoke(*args)
    second = invoke(*args)
    assert first.exit_code == 0, first.output
    assert first.output == second.output
    blob = json.loads(first.output)
    assert set(blob) == {
        "method", "k", "seed", "samples", "sender_mean", "sender_stderr",
        "receiver_mean", "receiver_stderr", "signals",
    }
    assert blob["samples"] == 2000
    assert abs(blob["sender_mean"] - 2 / 3) < 0.05


def test_compare_symmetric(fixture_dir):
    res = invoke(
        "compare", "--instance", str(fixture_dir / "tight_random_order.json"), "--k", "2"
    )
    assert res.exit_code == 0, res.output
    blob = json.loads(res.output)
    assert set(blob) == {"k", "u_exact", "methods"}
    assert set(blob["methods"]) == {"slope", "imitation"}
    slope = blob["methods"]["slope"]
    assert set(slope) == {"value", "ratio", "bound", "ok"}
    assert slope["ok"] is True and slope["bound"] == 1.0
    assert blob["methods"]["imitation"]["bound"] == pytest.approx(0.5)


def test_compare_independent(fixture_dir):
    res = invoke(
        "compare", "--instance", str(fixture_dir / "coins_k3.json"), "--k", "2",
        "--epsilon", "0.1", "--force",
    )
    assert res.exit_code == 0, res.output
    blob = json.loads(res.output)
    assert set(blob["methods"]) == {"greedy", "fptas", "reduce"}
    for row in blob["methods"].values():
        assert row["ok"] is True


def test_threads_env_fallback(fixture_dir, monkeypatch):
    monkeypatch.setenv("PERSUADE_THREADS", "2")
    res = invoke("solve", "--instance", str(fixture_dir / "tug_of_war.json"), "--k", "3")
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["u_sender"] == pytest.approx(2 / 3, abs=1e-9)
