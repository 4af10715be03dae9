from pathlib import Path

import numpy as np
import pytest

from coaxsim import config, load_defaults
from coaxsim.harness import load_experiment_file

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_load_defaults_roundtrip_bit_exact(tmp_path, params, gains):
    path = tmp_path / "params.ini"
    config.save_params_file(path, params, gains)
    params2, gains2 = config.load_params_file(path)
    for name in config._VEHICLE_SCALARS:
        assert getattr(params2, name) == getattr(params, name)
    assert np.array_equal(params2.inertia, params.inertia)
    assert np.array_equal(params2.hub_offset_up, params.hub_offset_up)
    assert np.array_equal(params2.hub_offset_dw, params.hub_offset_dw)
    assert np.array_equal(gains2.pos_p, gains.pos_p)
    assert gains2.att_p == gains.att_p


def test_partial_file_falls_back_to_defaults(tmp_path, gains):
    path = tmp_path / "gains_only.ini"
    path.write_text("[gains]\n" + "\n".join(
        f"{k} = {v}" for k, v in config.gains_to_section(gains).items()
    ) + "\n")
    params2, gains2 = config.load_params_file(path)
    default_params, _ = load_defaults()
    assert params2.mass == default_params.mass


def test_load_waypoints(tmp_path):
    path = tmp_path / "wp.txt"
    path.write_text("# comment\n0 0 -1.5\n1 0 -1.5  # inline\n2 1 -2\n")
    positions, yaws = config.load_waypoints(path)
    assert positions.shape == (3, 3)
    assert yaws is None


def test_load_waypoints_with_yaw(tmp_path):
    path = tmp_path / "wp.txt"
    path.write_text("0 0 -1.5 0.0\n1 0 -1.5 1.57\n")
    positions, yaws = config.load_waypoints(path)
    assert yaws is not None and len(yaws) == 2


def test_load_waypoints_mixed_yaw_rejected(tmp_path):
    path = tmp_path / "wp.txt"
    path.write_text("0 0 -1.5 0.0\n1 0 -1.5\n")
    with pytest.raises(ValueError):
        config.load_waypoints(path)


def test_load_waypoints_needs_two(tmp_path):
    path = tmp_path / "wp.txt"
    path.write_text("0 0 -1.5\n")
    with pytest.raises(ValueError):
        config.load_waypoints(path)


def test_experiment_file_parses_scenario():
    cfg = load_experiment_file(CONFIGS / "circle_3ms.ini")
    assert cfg.params.mass == 1.340
    assert cfg.trajectory.v_max == 3.0
    assert cfg.duration == 30.0
    assert cfg.label == "circle_3ms"


def test_experiment_file_waypoints():
    cfg = load_experiment_file(CONFIGS / "square.ini")
    assert cfg.trajectory.waypoints.shape == (5, 3)
    assert cfg.duration == pytest.approx(12.0)


def test_experiment_file_missing_section(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[vehicle]\nmass = 1.0\n")
    with pytest.raises(ValueError):
        load_experiment_file(path)


def test_experiment_file_unknown_trajectory(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[experiment]\ntrajectory = spiral\nduration = 10\n")
    with pytest.raises(ValueError):
        load_experiment_file(path)
