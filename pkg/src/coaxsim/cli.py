"""Command-line interface.

Each report-producing subcommand writes delimited output (CSV / key=value
text) plus matplotlib figures into the output directory.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click

from . import harness, plotting
from .controller import SwashConfig


def _load(config_path: str, seed, dt) -> harness.ExperimentConfig:
    config = harness.load_experiment_file(config_path)
    if seed is not None:
        config = replace(config, seed=seed)
    if dt is not None:
        config = replace(config, physics_dt=dt)
    return config


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_metrics(label: str, metrics) -> None:
    d = metrics.as_dict()
    click.echo(
        f"{label}: rmse={d['rmse_m']:.4f} m  mae={d['mae_m']:.4f} m  "
        f"avg_power={d['avg_power_w']:.1f} W  completion={d['completion']}"
    )


seed_option = click.option("--seed", type=int, default=None, help="Override the RNG seed.")
dt_option = click.option("--dt", type=float, default=None, help="Override the physics step [s].")
outdir_option = click.option(
    "-o", "--output-dir", default="out", show_default=True, help="Output directory."
)
plots_option = click.option(
    "--plots/--no-plots", default=True, show_default=True, help="Render figures."
)


@click.group()
def main() -> None:
    """Coaxial bi-copter simulation experiments."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@outdir_option
@seed_option
@dt_option
@plots_option
@click.option(
    "--allow-divergence",
    is_flag=True,
    help="Exit 0 even if the run loses control.",
)
def run(config_path, output_dir, seed, dt, plots, allow_divergence) -> None:
    """Run one closed-loop experiment from CONFIG_PATH."""
    config = _load(config_path, seed, dt)
    out = _outdir(output_dir)
    metrics, log = harness.run_experiment(config)

    log.write_csv(out / f"{config.label}_telemetry.csv")
    metrics.write_report(out / f"{config.label}_metrics.txt")
    if plots:
        plotting.plot_tracking(log, out / f"{config.label}_tracking.png", config.label)
        plotting.plot_controls(log, out / f"{config.label}_controls.png", config.label)
    _echo_metrics(config.label, metrics)
    if not metrics.completion and not allow_divergence:
        click.echo("run diverged (lost control)", err=True)
        sys.exit(2)


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option(
    "--configs",
    default="dual,single-lower",
    show_default=True,
    help="Comma-separated swashplate configurations to compare.",
)
@outdir_option
@seed_option
@dt_option
@plots_option
@click.option("--allow-divergence", is_flag=True)
def compare(config_path, configs, output_dir, seed, dt, plots, allow_divergence) -> None:
    """Run the identical scenario under several swashplate configurations."""
    config = _load(config_path, seed, dt)
    swash_list = [SwashConfig.parse(s) for s in configs.split(",")]
    out = _outdir(output_dir)
    results = harness.compare_configs(config, swash_list)

    table = harness.comparison_table(results)
    (out / f"{config.label}_compare.csv").write_text(table)
    if plots:
        plotting.plot_comparison(results, out / f"{config.label}_compare.png")
    for swash, metrics in results:
        _echo_metrics(f"{config.label}[{swash.value}]", metrics)
    if any(not m.completion for _, m in results) and not allow_divergence:
        click.echo("at least one configuration diverged", err=True)
        sys.exit(2)


@main.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--param", "param_path", required=True, help="Dotted parameter path.")
@click.option("--values", required=True, help="Comma-separated value grid.")
@outdir_option
@seed_option
@dt_option
@click.option("--allow-divergence", is_flag=True)
def sweep(config_path, param_path, values, output_dir, seed, dt, allow_divergence) -> None:
    """Run the scenario once per value of a swept parameter."""
    config = _load(config_path, seed, dt)
    grid = [float(v) for v in values.split(",")]
    out = _outdir(output_dir)
    results = harness.sweep(config, param_path, grid)
    table = harness.sweep_table(param_path, results)
    (out / f"{config.label}_sweep.csv").write_text(table)
    for value, metrics in results:
        _echo_metrics(f"{config.label}[{param_path}={value}]", metrics)
    if any(not m.completion for _, m in results) and not allow_divergence:
        click.echo("at least one run diverged", err=True)
        sys.exit(2)


@main.command("bench-torque")
@click.argument("config_path", type=click.Path(exists=True))
@click.option(
    "--thrust-levels",
    default=None,
    help="Comma-separated collective thrust levels [N]; default spans hover.",
)
@outdir_option
@plots_option
def bench_torque(config_path, thrust_levels, output_dir, plots) -> None:
    """Fixed-thrust full-deflection torque bench for all configurations."""
    config = harness.load_experiment_file(config_path)
    levels = (
        [float(v) for v in thrust_levels.split(",")] if thrust_levels else None
    )
    out = _outdir(output_dir)
    result = harness.bench_torque(config.params, levels)
    (out / "bench_torque.csv").write_text(result.table())
    if plots:
        plotting.plot_bench(result, out / "bench_torque.png")
    dual, s_up, s_dw = (
        SwashConfig.DUAL,
        SwashConfig.SINGLE_UPPER,
        SwashConfig.SINGLE_LOWER,
    )
    click.echo(
        f"dual vs single-upper: +{100 * (result.mean_ratio(dual, s_up) - 1):.2f}%  "
        f"dual vs single-lower: +{100 * (result.mean_ratio(dual, s_dw) - 1):.2f}%  "
        f"linearity R^2 (dual): {result.linear_fit(dual)[2]:.6f}"
    )


if __name__ == "__main__":
    main()
