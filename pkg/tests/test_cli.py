from pathlib import Path

import pytest
from click.testing import CliRunner

from coaxsim.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def hover_ini(tmp_path):
    path = tmp_path / "hover_short.ini"
    path.write_text(
        "[experiment]\n"
        "trajectory = hover\n"
        "center = 0 0 -1.5\n"
        "duration = 2.0\n"
    )
    return path


def test_run_writes_outputs(runner, hover_ini, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(hover_ini), "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "hover_short_telemetry.csv").exists()
    assert (out / "hover_short_metrics.txt").exists()
    assert (out / "hover_short_tracking.png").exists()
    assert (out / "hover_short_controls.png").exists()
    assert "rmse=" in result.output


def test_run_no_plots(runner, hover_ini, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(hover_ini), "-o", str(out), "--no-plots"])
    assert result.exit_code == 0, result.output
    assert (out / "hover_short_telemetry.csv").exists()
    assert not list(out.glob("*.png"))


def test_run_divergence_exit_code(runner, tmp_path):
    ini = tmp_path / "impossible.ini"
    ini.write_text(
        "[experiment]\n"
        "trajectory = circle\n"
        "v_max = 14.0\n"
        "ramp_time = 1.0\n"
        "diameter = 5.0\n"
        "duration = 20.0\n"
    )
    out = tmp_path / "out"
    args = ["run", str(ini), "-o", str(out), "--no-plots"]
    result = runner.invoke(main, args)
    assert result.exit_code == 2
    # the report is still written so the failure can be inspected
    assert (out / "impossible_metrics.txt").exists()
    tolerated = runner.invoke(main, args + ["--allow-divergence"])
    assert tolerated.exit_code == 0


def test_run_missing_config_errors(runner, tmp_path):
    result = runner.invoke(main, ["run", str(tmp_path / "nope.ini")])
    assert result.exit_code != 0


def test_run_seed_and_dt_overrides(runner, tmp_path):
    ini = tmp_path / "noisy.ini"
    ini.write_text(
        "[experiment]\n"
        "trajectory = hover\n"
        "duration = 1.0\n"
        "noise_pos_std = 0.01\n"
    )
    out_a, out_b, out_c = (tmp_path / n for n in ("a", "b", "c"))
    for out, seed in ((out_a, "1"), (out_b, "1"), (out_c, "2")):
        result = runner.invoke(
            main,
            ["run", str(ini), "-o", str(out), "--no-plots", "--seed", seed],
        )
        assert result.exit_code == 0, result.output
    a = (out_a / "noisy_telemetry.csv").read_bytes()
    assert a == (out_b / "noisy_telemetry.csv").read_bytes()
    assert a != (out_c / "noisy_telemetry.csv").read_bytes()


def test_compare_writes_table_and_figure(runner, hover_ini, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "compare",
            str(hover_ini),
            "-o",
            str(out),
            "--configs",
            "dual,single-lower",
        ],
    )
    assert result.exit_code == 0, result.output
    table = (out / "hover_short_compare.csv").read_text()
    assert table.startswith("metric,dual,single-lower")
    assert (out / "hover_short_compare.png").exists()


def test_sweep_writes_table(runner, hover_ini, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "sweep",
            str(hover_ini),
            "-o",
            str(out),
            "--param",
            "duration",
            "--values",
            "1.0,2.0",
        ],
    )
    assert result.exit_code == 0, result.output
    lines = (out / "hover_short_sweep.csv").read_text().splitlines()
    assert lines[0].startswith("duration,rmse_m,")
    assert len(lines) == 3


def test_bench_torque_command(runner, hover_ini, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["bench-torque", str(hover_ini), "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "bench_torque.csv").exists()
    assert (out / "bench_torque.png").exists()
    assert "dual vs single-upper: +116.70%" in result.output
    assert "dual vs single-lower: +72.51%" in result.output


def test_packaged_scenario_configs_load(runner, tmp_path):
    # every shipped scenario file must at least parse and start
    for name in ("hover.ini", "circle_3ms.ini", "figure8_35ms.ini", "square.ini"):
        assert (CONFIGS / name).exists()
