"""test_cli.py — the congestlab command line: exit codes, ❌ presentation and written artifacts."""

import json

import pytest

from congestlab.app.cli.__main__ import EXIT_OK, EXIT_USAGE, build_parser, main

SMALL = ["--scenario", "quadratic", "--n", "8", "--tau", "0.05", "--T", "0.2"]


def test_parser_lists_every_command():
    p = build_parser()
    for cmd in ("simulate", "sweep-tau", "sweep-n", "steady-state", "validate", "export-fields"):
        assert p.parse_args([cmd]).command == cmd


def test_simulate_writes_trajectory_and_estimates(tmp_path, capsys):
    assert main(["simulate", *SMALL, "--out", str(tmp_path)]) == EXIT_OK
    base = tmp_path / "quadratic"
    assert (base / "trajectory.csv").exists()
    meta = json.loads((base / "trajectory.json").read_text(encoding="utf-8"))
    assert meta["steps"] == 4
    est = json.loads((base / "estimates.json").read_text(encoding="utf-8"))
    assert est["passed"] is True
    out = capsys.readouterr().out
    assert "--- Simulate" in out and "--- Estimates" in out


def test_simulate_without_out_writes_nothing(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", *SMALL]) == EXIT_OK
    assert not any(tmp_path.iterdir())


def test_unknown_scenario_exits_with_usage(capsys):
    assert main(["simulate", "--scenario", "no_such_scenario"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.startswith("❌ Scenario not found")
    assert "· Available scenarios" in err


def test_step_size_guard_exits_with_usage(capsys):
    assert main(["simulate", "--scenario", "quadratic", "--tau", "0.3", "--T", "0.3"]) == EXIT_USAGE
    assert "step-size guard" in capsys.readouterr().err


def test_argparse_errors_use_the_same_presentation(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--n", "many"])
    assert exc.value.code == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.startswith("❌ Invalid arguments")
    assert "--help" in err


def test_scenario_and_config_are_exclusive(capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--scenario", "quadratic", "--config", "x.yaml"])


def test_export_fields_needs_out(capsys):
    assert main(["export-fields", *SMALL]) == EXIT_USAGE
    assert "--out" in capsys.readouterr().err


def test_export_fields_writes_snapshots(tmp_path):
    assert main(["export-fields", *SMALL, "--every", "2", "--out", str(tmp_path)]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "quadratic" / "fields").iterdir())
    assert names == ["fields_k0.csv", "fields_k2.csv", "fields_k4.csv"]


def test_sweep_n_writes_plot_ready_csv(tmp_path):
    code = main(
        ["sweep-n", "--scenario", "quadratic", "--ns", "4,8", "--tau", "0.05", "--T", "0.1",
         "--out", str(tmp_path)]
    )
    assert code in (0, 1)
    assert (tmp_path / "quadratic" / "sweep_n.csv").exists()


def test_sweep_tau_rejects_a_non_halving_list(capsys):
    code = main(
        ["sweep-tau", "--scenario", "quadratic", "--n", "8", "--T", "0.06", "--taus", "0.02,0.015"]
    )
    assert code == EXIT_USAGE
    assert "halve" in capsys.readouterr().err


def test_steady_state_rejects_other_potentials(capsys):
    assert main(["steady-state", "--scenario", "double_well", "--ns", "2"]) == EXIT_USAGE
    assert "quadratic" in capsys.readouterr().err
