import pytest

from jmgtlab.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY, main
from jmgtlab.experiment import OUTPUT_ENV

SHORT = ["--set", "n_steps=80", "--set", "final_time=4.5e-6", "--set", "snapshot_times=4.5e-6"]


def test_simulate_writes_outputs(tmp_path, capsys):
    assert main(["simulate", "--preset", "paper-fig1", "--out", str(tmp_path), *SHORT]) == EXIT_OK
    assert (tmp_path / "snapshot_step000080.csv").exists()
    assert "peak pressure" in capsys.readouterr().out


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["simulate", "--preset", "nominal", *SHORT]) == EXIT_OK
    assert (tmp_path / "env" / "energy.csv").exists()


def test_config_file_reruns_are_identical(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[simulation]\npreset = paper-fig1\nn_steps = 80\nfinal_time = 4.5e-6\n"
                   "snapshot_times = 0, 4.5e-6\n")
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) == EXIT_OK
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_sweep_cli(tmp_path):
    args = ["sweep-tau", "--preset", "paper-fig2", "--out", str(tmp_path), *SHORT,
            "--set", "taus=5e-7, 1e-7"]
    assert main(args) == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "tau_s,error_ch1,error_xbarw"
    assert [float(l.split(",")[0]) for l in lines[1:]] == [5e-7, 1e-7]


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["simulate", "--preset", "paper-fig1", "--set", "tau"],
    ["simulate", "--preset", "paper-fig1", "--set", "model=westervelt"],
    ["simulate", "--config", "/nonexistent/run.ini"],
    ["sweep-tau", "--preset", "paper-fig1"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_degeneracy_exits_3(tmp_path, capsys):
    argv = ["simulate", "--preset", "nominal", "--set", "amplitude=2.4e5", "--out", str(tmp_path)]
    assert main(argv) == EXIT_NUMERICAL
    assert "min alpha" in capsys.readouterr().err


def test_verify_invariants_pass(capsys):
    assert main(["verify", "--suite", "invariants"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "determinism" in out


def test_verify_with_inflated_dt_fails(capsys):
    assert main(["verify", "--suite", "modal", "--dt-scale", "40"]) == EXIT_VERIFY
    out = capsys.readouterr().out
    assert "[FAIL] modal-oracle-jmgt" in out and "orders" in out


def test_verify_modal_reports_orders(capsys):
    assert main(["verify", "--suite", "modal"]) == EXIT_OK
    assert "orders [2." in capsys.readouterr().out


def test_shipped_config_parses():
    from pathlib import Path

    from jmgtlab.experiment import load_config
    from jmgtlab.models import ModelKind

    cfg = load_config(Path(__file__).parent.parent / "configs" / "westervelt_fig1.ini")
    assert cfg.model is ModelKind.WESTERVELT and cfg.tau == 0.0
    assert cfg.snapshot_times == (0.0, 22.5e-6, 45e-6)
