"""Config schema, pipeline artifacts, sweeps, and replay determinism."""

import csv
from pathlib import Path

import pytest

from levy_contract.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VIOLATION,
    ConfigError,
    main,
    parse_config,
    run_experiment,
    sweep,
)

BASE = ("experiment = scalar_shot\n"
        "n_paths = 120\n"
        "k_max = 2\n"
        "eval_points = 4\n"
        "dt = 0.02\n"
        "paths_dump = 2\n"
        "seed = 31\n")


def _cfg(tmp_path, extra="", **over):
    over.setdefault("out", str(tmp_path / "out"))
    return parse_config(BASE + extra, over)


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_config_collects_all_problems():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = warp_drive\n"
                     "n_paths = none\n"
                     "alien = 3\n"
                     "dt = -0.5\n")
    text = str(err.value)
    assert "warp_drive" in text and "alien" in text
    assert "n_paths" in text and "dt" in text
    assert len(err.value.problems) == 4


def test_parse_config_unknown_experiment_names_allowed_values():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = mystery\n")
    assert "ltv_2d_diagonal" in str(err.value)
    assert "custom" in str(err.value)


def test_parse_config_requires_experiment():
    with pytest.raises(ConfigError) as err:
        parse_config("seed = 3\n")
    assert any("required" in p for p in err.value.problems)


def test_overrides_beat_file_values():
    cfg = parse_config(BASE, {"seed": 99, "n_paths": 50})
    assert cfg.seed == 99 and cfg.n_paths == 50


def test_run_experiment_artifacts(tmp_path):
    cfg = _cfg(tmp_path)
    assert run_experiment(cfg, quiet=True) == EXIT_OK
    out = Path(cfg.out)
    for name in ("paths.csv", "bounds.csv", "audit.csv", "report.txt"):
        assert (out / name).exists(), name
    audit = _read(out / "audit.csv")
    assert all(row["experiment"] == "scalar_shot" for row in audit)
    assert all(row["seed"] == "31" for row in audit)
    assert all(row["version"] == cfg.version() for row in audit)
    ks = {row["k"] for row in audit}
    assert ks == {"0", "1", "2"}
    paths = _read(out / "paths.csv")
    assert {"path_id", "time", "state_0", "is_jump"} <= set(paths[0])


def test_bounds_csv_contains_psi_and_alt_form(tmp_path):
    cfg = _cfg(tmp_path)
    run_experiment(cfg, quiet=True)
    rows = _read(Path(cfg.out) / "bounds.csv")
    kinds = {r["kind"] for r in rows}
    assert kinds == {"shot_ltv", "psi"}
    psi_strategies = {r["strategy"] for r in rows if r["kind"] == "psi"}
    assert psi_strategies == {"quadrature", "monte_carlo", "loose_first_term",
                              "loose_max_nng", "loose_sum_exp"}
    forms = {r["strategy"] for r in rows if r["kind"] == "shot_ltv"}
    assert forms == {"quadrature+per_jump", "quadrature+window_start"}


def test_negative_control_alpha(tmp_path):
    cfg = _cfg(tmp_path, "corrupt = alpha_x2\nn_paths = 400\n")
    status = run_experiment(cfg, quiet=True)
    assert status != EXIT_OK
    report = (Path(cfg.out) / "report.txt").read_text()
    assert "VIOLATION" in report or "FAIL" in report
    audit = _read(Path(cfg.out) / "audit.csv")
    assert any(float(r["mse"]) > float(r["bound_rhs"]) for r in audit if r["mse"])


def test_negative_control_eta(tmp_path):
    cfg = _cfg(tmp_path, "corrupt = eta_x4\nn_paths = 300\n")
    status = run_experiment(cfg, quiet=True)
    assert status == EXIT_VIOLATION


def test_replay_bit_identical(tmp_path):
    cfg_a = _cfg(tmp_path / "a")
    run_experiment(cfg_a, quiet=True)
    # replay from the emitted config into a different directory
    emitted = (Path(cfg_a.out) / "config.txt").read_text()
    cfg_b = parse_config(emitted, {"out": str(tmp_path / "b" / "out")})
    run_experiment(cfg_b, quiet=True)
    for name in ("paths.csv", "bounds.csv", "audit.csv", "ensemble.csv"):
        a = (Path(cfg_a.out) / name).read_bytes()
        b = (Path(cfg_b.out) / name).read_bytes()
        assert a == b, name


def test_sweep_eta_kappa_increasing(tmp_path):
    cfg = _cfg(tmp_path, "n_paths = 60\neval_points = 2\npaths_dump = 0\n")
    status = sweep(cfg, "eta", [0.1, 0.2, 0.4], quiet=True)
    assert status == EXIT_OK
    rows = _read(Path(cfg.out) / "sweep.csv")
    kappas = [float(r["kappa"]) for r in rows]
    assert kappas == sorted(kappas) and kappas[0] < kappas[-1]
    assert all(r["parameter"] == "eta" for r in rows)


def test_sweep_lambda_expected_jumps(tmp_path):
    cfg = _cfg(tmp_path, "n_paths = 60\neval_points = 2\npaths_dump = 0\n")
    sweep(cfg, "lambda", [0.5, 1.0, 2.0], quiet=True)
    rows = _read(Path(cfg.out) / "sweep.csv")
    expected = [float(r["expected_jumps"]) for r in rows]
    assert expected == pytest.approx([0.5, 1.0, 2.0])


def test_sweep_condition_number_rhs_monotone(tmp_path):
    text = ("experiment = ltv_2d_diagonal\nn_paths = 60\nk_max = 1\n"
            "eval_points = 2\ndt = 0.02\npaths_dump = 0\nseed = 5\n")
    cfg = parse_config(text, {"out": str(tmp_path / "cn")})
    sweep(cfg, "condition_number", [1.0, 4.0, 16.0], quiet=True)
    rows = _read(Path(cfg.out) / "sweep.csv")
    rhs = [float(r["rhs_total"]) for r in rows]
    assert rhs == sorted(rhs) and rhs[0] < rhs[-1]


def test_sweep_rejects_unknown_parameter(tmp_path):
    cfg = _cfg(tmp_path)
    with pytest.raises(ConfigError):
        sweep(cfg, "viscosity", [1.0], quiet=True)


def test_sweep_parameter_must_apply_to_experiment(tmp_path):
    cfg = _cfg(tmp_path)  # scalar preset: condition_number is 2-D LTV only
    with pytest.raises(ConfigError) as err:
        sweep(cfg, "condition_number", [1.0, 4.0], quiet=True)
    assert "condition_number" in str(err.value)


def test_run_experiment_emits_summary_and_config(tmp_path):
    cfg = _cfg(tmp_path)
    run_experiment(cfg, quiet=True)
    out = Path(cfg.out)
    rows = _read(out / "ensemble.csv")
    assert {"k", "count", "E_k_mse", "ci_low", "ci_high"} <= set(rows[0])
    assert len(rows) == cfg.k_max + 1
    assert "experiment = scalar_shot" in (out / "config.txt").read_text()
    assert "certification detail: {" in (out / "report.txt").read_text()


def test_worker_count_env_caps(monkeypatch):
    from levy_contract.simulate import worker_count
    monkeypatch.delenv("LEVY_CONTRACT_THREADS", raising=False)
    assert worker_count(None) == 1
    assert worker_count(8) == 8
    monkeypatch.setenv("LEVY_CONTRACT_THREADS", "2")
    assert worker_count(8) == 2
    assert worker_count(1) == 1


def test_main_cli_flags(tmp_path, capsys):
    out = tmp_path / "cli_out"
    status = main(["--experiment", "scalar_shot", "--seed", "3",
                   "--paths", "80", "--out", str(out)])
    assert status == EXIT_OK
    assert (out / "report.txt").exists()
    assert "exit status: 0" in capsys.readouterr().out


def test_main_config_error_is_exit_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = nowhere\n")
    assert main(["--config", str(bad)]) == EXIT_CONFIG
    assert "nowhere" in capsys.readouterr().err
