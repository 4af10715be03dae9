import dataclasses

import numpy as np
import pytest

from coaxsim import (
    ExperimentConfig,
    ParametricTrajectory,
    SwashConfig,
    bench_torque,
    compare_configs,
    run_experiment,
    sweep,
)
from coaxsim.harness import (
    comparison_table,
    max_cyclic_torque,
    resolve_config_path,
    sweep_table,
)


@pytest.fixture(scope="module")
def hover_config(defaults):
    params, gains = defaults
    traj = ParametricTrajectory(shape="hover", center=(0, 0, -1.5))
    return ExperimentConfig(
        params=params,
        gains=gains,
        swash=SwashConfig.DUAL,
        trajectory=traj,
        duration=2.0,
        label="hover-short",
    )


def short_circle(params, gains, duration=6.0, v_max=2.0, swash=SwashConfig.DUAL):
    traj = ParametricTrajectory(
        shape="circle", v_max=v_max, ramp_time=1.0, diameter=5.0, center=(0, 0, -1.5)
    )
    return ExperimentConfig(
        params=params,
        gains=gains,
        swash=swash,
        trajectory=traj,
        duration=duration,
        label="circle-short",
    )


def test_hover_run_is_stationary(hover_config):
    metrics, log = run_experiment(hover_config)
    assert metrics.completion
    assert metrics.rmse < 1e-6
    assert len(log) == 2000


def test_telemetry_deterministic(hover_config, tmp_path):
    _, log1 = run_experiment(hover_config)
    _, log2 = run_experiment(hover_config)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    log1.write_csv(p1)
    log2.write_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_noise_is_seeded(defaults):
    params, gains = defaults
    base = short_circle(params, gains, duration=2.0)
    noisy = dataclasses.replace(base, noise_pos_std=0.01, seed=7)
    m1, log1 = run_experiment(noisy)
    m2, log2 = run_experiment(noisy)
    assert np.array_equal(log1.data, log2.data)
    other = dataclasses.replace(noisy, seed=8)
    _, log3 = run_experiment(other)
    assert not np.array_equal(log1.data, log3.data)


def test_run_rejects_invalid_params(hover_config):
    bad = dataclasses.replace(
        hover_config, params=hover_config.params.with_mass(-1.0)
    )
    with pytest.raises(ValueError):
        run_experiment(bad)


def test_divergence_stops_early(defaults):
    params, gains = defaults
    # command an impossible speed: the vehicle falls behind and the run aborts
    cfg = short_circle(params, gains, duration=20.0, v_max=14.0)
    metrics, log = run_experiment(cfg)
    assert not metrics.completion
    assert len(log) < 20000


def test_window_defaults_to_ramp_plus_settling(defaults):
    params, gains = defaults
    cfg = short_circle(params, gains, duration=10.0)
    assert cfg.window == (3.0, 10.0)  # ramp 1 s + 2 s settling
    short = dataclasses.replace(cfg, duration=4.0)
    assert short.window == (2.0, 4.0)  # capped at half the duration


def test_compare_identical_config_identical_metrics(hover_config):
    results = compare_configs(hover_config, [SwashConfig.DUAL, SwashConfig.DUAL])
    assert results[0][1] == dataclasses.replace(results[1][1])


def test_compare_requires_two_configs(hover_config):
    with pytest.raises(ValueError):
        compare_configs(hover_config, [SwashConfig.DUAL])


def test_comparison_table_structure(hover_config):
    results = compare_configs(
        hover_config, [SwashConfig.DUAL, SwashConfig.SINGLE_LOWER]
    )
    table = comparison_table(results)
    lines = table.strip().splitlines()
    assert lines[0] == "metric,dual,single-lower"
    assert any(line.startswith("rmse_m,") for line in lines)
    assert any(line.startswith("rmse_m_rel_delta,") for line in lines)


def test_sweep_singleton_matches_run(defaults):
    params, gains = defaults
    cfg = short_circle(params, gains, duration=4.0)
    [(value, swept)] = sweep(cfg, "trajectory.v_max", [2.0])
    direct, _ = run_experiment(cfg)
    assert value == 2.0
    assert swept == direct


def test_sweep_rmse_nondecreasing_in_speed(defaults):
    params, gains = defaults
    cfg = short_circle(params, gains, duration=8.0)
    results = sweep(cfg, "trajectory.v_max", [2.0, 3.0])
    assert len(results) == 2
    assert results[0][1].rmse <= results[1][1].rmse


def test_sweep_rejects_unknown_path_before_running(hover_config):
    with pytest.raises(AttributeError):
        sweep(hover_config, "params.nonexistent", [1.0])
    with pytest.raises(ValueError):
        sweep(hover_config, "duration", [])


def test_sweep_table_format(defaults):
    params, gains = defaults
    cfg = short_circle(params, gains, duration=4.0)
    results = sweep(cfg, "trajectory.v_max", [2.0])
    table = sweep_table("trajectory.v_max", results)
    header = table.splitlines()[0]
    assert header.startswith("trajectory.v_max,rmse_m,")


def test_resolve_config_path(hover_config):
    assert resolve_config_path(hover_config, "duration") == 2.0
    assert resolve_config_path(hover_config, "params.mass") == hover_config.params.mass


def test_flap_stiffness_sweep_monotone_torque(params):
    # max torque envelope grows with the flap spring constant
    envelopes = []
    for scale in (0.5, 1.0, 2.0):
        p = dataclasses.replace(
            params, flap_stiffness=scale * params.flap_stiffness
        )
        envelopes.append(max_cyclic_torque(p, p.hover_thrust, SwashConfig.DUAL))
    assert envelopes[0] < envelopes[1] < envelopes[2]


def test_bench_linear_in_thrust(params):
    result = bench_torque(params)
    for swash in SwashConfig:
        slope, intercept, r2 = result.linear_fit(swash)
        assert slope > 0
        assert r2 > 0.999
    # dual exceeds both singles at every thrust level
    dual = result.torque[SwashConfig.DUAL]
    assert np.all(dual > result.torque[SwashConfig.SINGLE_UPPER])
    assert np.all(dual > result.torque[SwashConfig.SINGLE_LOWER])


def test_bench_table_format(params):
    result = bench_torque(params, thrust_levels=[10.0, 12.0])
    lines = result.table().strip().splitlines()
    assert lines[0] == "thrust_n,dual,single-upper,single-lower"
    assert len(lines) == 3
