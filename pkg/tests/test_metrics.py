import numpy as np
import pytest

from coaxsim.metrics import (
    TELEMETRY_COLUMNS,
    MetricsReport,
    TelemetryLog,
    compute_metrics,
    fit_power_model,
    power_draw,
)


def make_log(n=100, dt=0.01, error=None, cyclic=None, saturated=None, power=100.0):
    data = np.zeros((n, len(TELEMETRY_COLUMNS)))
    t = np.arange(n) * dt
    data[:, 0] = t
    if error is not None:
        data[:, TELEMETRY_COLUMNS.index("px")] = error
    if cyclic is not None:
        for name, values in cyclic.items():
            data[:, TELEMETRY_COLUMNS.index(name)] = values
    if saturated is not None:
        data[:, TELEMETRY_COLUMNS.index("saturated")] = saturated
    data[:, TELEMETRY_COLUMNS.index("power")] = power
    return TelemetryLog(data=data, window=(0.0, t[-1]))


def test_perfect_tracking_zero_errors():
    m = compute_metrics(make_log(), mass_grams=1250.0)
    assert m.rmse == 0.0 and m.mae == 0.0
    assert m.completion


def test_constant_offset_rmse_equals_mae():
    m = compute_metrics(make_log(error=0.1), mass_grams=1250.0)
    assert m.rmse == pytest.approx(0.1)
    assert m.mae == pytest.approx(0.1)


def test_saturation_extremum_bookkeeping():
    ele = np.zeros(100)
    ele[42] = -1.0
    sat = np.zeros(100)
    sat[42] = 1.0
    m = compute_metrics(
        make_log(cyclic={"ele_up": ele}, saturated=sat), mass_grams=1250.0
    )
    assert m.roll_control_min == -1.0
    assert m.saturation_count == 1


def test_rmse_never_exceeds_mae(rng):
    for _ in range(20):
        m = compute_metrics(
            make_log(error=rng.uniform(-1, 1, 100)), mass_grams=1250.0
        )
        assert m.rmse <= m.mae + 1e-12


def test_efficiency_is_mass_over_power():
    m = compute_metrics(make_log(power=200.0), mass_grams=1340.0)
    assert m.efficiency == pytest.approx(1340.0 / 200.0)


def test_divergence_marks_incomplete():
    m = compute_metrics(make_log(error=4.0), mass_grams=1250.0)
    assert not m.completion


def test_aborted_log_marks_incomplete():
    log = make_log()
    log.aborted = True
    assert not compute_metrics(log, mass_grams=1250.0).completion


def test_empty_log_rejected():
    log = TelemetryLog(data=np.zeros((0, len(TELEMETRY_COLUMNS))))
    with pytest.raises(ValueError):
        compute_metrics(log, mass_grams=1250.0)


def test_window_excludes_ramp():
    err = np.zeros(100)
    err[:50] = 2.0  # large error before the window opens
    log = make_log(error=err)
    log.window = (0.5, 0.99)
    m = compute_metrics(log, mass_grams=1250.0)
    assert m.rmse == 0.0
    # divergence detection still looks at the whole run
    assert m.completion  # 2 m < threshold


def test_power_model_positive_and_monotone(params):
    p0 = power_draw(0.0, params)
    p1 = power_draw(10.0, params)
    p2 = power_draw(20.0, params)
    assert 0 < p0 < p1 < p2
    with pytest.raises(ValueError):
        power_draw(-1.0, params)


def test_fit_power_model_two_point_exact():
    a, b = 17.0, 2.5
    samples = [(9.0, a + b * 27.0), (16.0, a + b * 64.0)]
    fa, fb = fit_power_model(samples)
    assert fa == pytest.approx(a, rel=1e-9)
    assert fb == pytest.approx(b, rel=1e-9)


def test_fit_power_model_needs_two_samples():
    with pytest.raises(ValueError):
        fit_power_model([(9.0, 100.0)])


def test_csv_roundtrip(tmp_path):
    log = make_log(error=np.linspace(0, 1, 100))
    path = tmp_path / "telemetry.csv"
    log.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TELEMETRY_COLUMNS)
    parsed = np.array(
        [[float(x) for x in line.split(",")] for line in lines[1:]]
    )
    assert np.array_equal(parsed, log.data)


def test_report_file_key_values(tmp_path):
    m = compute_metrics(make_log(), mass_grams=1250.0)
    path = tmp_path / "metrics.txt"
    m.write_report(path)
    text = path.read_text()
    assert "rmse_m = 0.0" in text
    assert "completion = True" in text
