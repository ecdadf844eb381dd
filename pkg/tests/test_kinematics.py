import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fallsift.errors import CalibrationError, DataError, ParameterError
from fallsift.kinematics import (
    CalibrationModel, Trajectory, VelocityProfile, align_at_peak, calibrate_trajectory,
    differentiate, extract_profile, read_profile_csv, read_trajectory_csv, resample_profile,
    segment_fall_window, smooth_positions, write_profile_csv, write_trajectory_csv,
)

from oracles import linear_interp


def metric(t, y, x=None):
    x = np.zeros_like(y) if x is None else x
    return Trajectory("m", t, x, y, "meters", "up_positive")


def pixel(x, y, t=None, axis="down_positive"):
    return Trajectory("p", t, x, y, "pixels", axis)


# -- types ----------------------------------------------------------------------

def test_trajectory_invariants():
    with pytest.raises(DataError, match="at least 5"):
        metric(np.arange(4.0), np.zeros(4))
    with pytest.raises(DataError, match="strictly increasing"):
        metric(np.array([0, 1, 1, 2, 3.0]), np.zeros(5))
    with pytest.raises(DataError, match="unit"):
        Trajectory("x", None, np.zeros(5), np.zeros(5), "inches", "up_positive")
    tr = metric(np.arange(5.0), np.arange(5.0))
    assert tr.frames[2] == (2.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        tr.y[0] = 3.0


def test_calibration_model_rejects_bad_values():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(CalibrationError):
            CalibrationModel(bad, 30.0)
    with pytest.raises(CalibrationError):
        CalibrationModel(0.01, 0.0)


# -- calibrate -----------------------------------------------------------------------

def test_calibrate_scales_and_flips():
    tr = pixel(np.full(5, 100.0), np.full(5, 200.0), t=np.arange(5) / 30)
    out = calibrate_trajectory(tr, CalibrationModel(0.01))
    assert out.unit == "meters" and out.y_axis == "up_positive"
    assert out.x[0] == 1.0 and out.y[0] == -2.0


def test_calibrate_up_positive_pixels_not_flipped():
    tr = pixel(np.ones(5), np.full(5, 3.0), t=np.arange(5.0), axis="up_positive")
    assert calibrate_trajectory(tr, CalibrationModel(2.0)).y[0] == 6.0


def test_calibrate_rejects_metric():
    tr = metric(np.arange(5.0), np.zeros(5))
    with pytest.raises(CalibrationError, match="already metric"):
        calibrate_trajectory(tr, CalibrationModel(1.0, 30.0))


def test_double_calibration_rejected():
    tr = pixel(np.zeros(30), np.zeros(30))
    once = calibrate_trajectory(tr, CalibrationModel(0.01, 30.0))
    with pytest.raises(CalibrationError):
        calibrate_trajectory(once, CalibrationModel(0.01, 30.0))


def test_calibrate_synthesizes_timestamps():
    out = calibrate_trajectory(pixel(np.zeros(30), np.zeros(30)), CalibrationModel(0.01, 30.0))
    np.testing.assert_array_equal(out.t, np.arange(30) / 30.0)
    assert out.t[-1] == 29 / 30
    with pytest.raises(CalibrationError, match="frame_rate"):
        calibrate_trajectory(pixel(np.zeros(30), np.zeros(30)), CalibrationModel(0.01))


# -- smoothing ----------------------------------------------------------------------

@pytest.mark.parametrize("window", [3, 5, 7, 9, 21])
def test_smoothing_reproduces_quadratic(window):
    t = np.arange(60) / 30.0
    y = -4.905 * t ** 2
    out = smooth_positions(metric(t, y), window)
    np.testing.assert_allclose(out.y, y, rtol=0, atol=1e-9)


def test_smoothing_constant():
    t = np.arange(20) / 30.0
    out = smooth_positions(metric(t, np.full(20, 1.2)), 5)
    np.testing.assert_allclose(out.y, 1.2, rtol=0, atol=1e-12)


def test_smoothing_reduces_noise():
    t = np.arange(200) / 100.0
    clean = 1.5 - 4.905 * t ** 2
    noise = np.random.default_rng(42).normal(0, 0.02, t.size)
    out = smooth_positions(metric(t, clean + noise), 7)
    rms_in = np.sqrt(np.mean(noise ** 2))
    rms_out = np.sqrt(np.mean((out.y - clean) ** 2))
    assert rms_out < rms_in


def test_smoothing_leaves_x():
    t = np.arange(10.0)
    x = np.sin(t)
    out = smooth_positions(metric(t, np.sin(3 * t), x=x), 5)
    np.testing.assert_array_equal(out.x, x)


@pytest.mark.parametrize("window", [4, 1, 2, 11])
def test_smoothing_bad_window(window):
    with pytest.raises(ParameterError):
        smooth_positions(metric(np.arange(10.0), np.zeros(10)), window)


def test_smoothing_requires_metric():
    with pytest.raises(DataError):
        smooth_positions(pixel(np.zeros(10), np.zeros(10), t=np.arange(10.0)), 5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10),
       st.sampled_from([3, 5, 7]), st.integers(7, 40))
def test_smoothing_idempotent_quadratics(a, b, c, window, n):
    t = np.arange(n) / 25.0
    y = a + b * t + c * t ** 2
    once = smooth_positions(metric(t, y), window)
    twice = smooth_positions(once, window)
    np.testing.assert_allclose(once.y, y, rtol=0, atol=1e-9)
    np.testing.assert_allclose(twice.y, once.y, rtol=0, atol=1e-9)


# -- differentiate ----------------------------------------------------------------------

def test_stationary_velocity_zero():
    p = differentiate(metric(np.arange(10) / 30.0, np.full(10, 1.7)))
    np.testing.assert_array_equal(p.vy, 0.0)


def test_free_fall_exact_interior():
    t = np.arange(61) / 100.0
    p = differentiate(metric(t, 2.0 - 0.5 * 9.81 * t ** 2))
    np.testing.assert_allclose(p.vy[1:-1], -9.81 * t[1:-1], rtol=0, atol=1e-9)
    assert p.vy[30] == pytest.approx(-2.943, abs=1e-9)
    np.testing.assert_array_equal(p.t, t)


def test_sinusoid_derivative():
    t = np.arange(201) / 200.0
    p = differentiate(metric(t, np.sin(2 * np.pi * t)))
    assert np.max(np.abs(p.vy - 2 * np.pi * np.cos(2 * np.pi * t))) <= 2e-3


def test_jitter_rejected():
    t = np.arange(10) / 30.0
    t[5] += 0.1 / 30.0
    with pytest.raises(DataError, match="resample"):
        differentiate(metric(t, np.zeros(10)))


def test_small_jitter_tolerated():
    t = np.arange(10) / 30.0
    t[5] += 0.002 / 30.0
    assert len(differentiate(metric(t, np.zeros(10)))) == 10


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10), st.sampled_from([25, 30, 100]))
def test_central_difference_exact_on_quadratics(a, b, c, rate):
    t = np.arange(40) / rate
    p = differentiate(metric(t, a + b * t + c * t ** 2))
    np.testing.assert_allclose(p.vy[1:-1], b + 2 * c * t[1:-1], rtol=0, atol=1e-9)


# -- resample -----------------------------------------------------------------------------

def test_resample_identity():
    p = VelocityProfile("p", np.arange(10) / 30.0, np.linspace(0, -3, 10), 1 / 30)
    assert resample_profile(p, 1 / 30).vy is p.vy


def test_resample_two_points():
    p = VelocityProfile("p", [0.0, 1.0], [0.0, -1.0], 1.0)
    out = resample_profile(p, 0.5)
    assert out.samples == [(0.0, 0.0), (0.5, -0.5), (1.0, -1.0)]


def test_resample_against_pointwise_oracle():
    rng = np.random.default_rng(3)
    t = np.cumsum(rng.uniform(0.01, 0.05, 40))
    vy = -np.cumsum(rng.uniform(0, 0.3, 40))
    out = resample_profile(VelocityProfile("p", t, vy, 0.03), 0.02)
    for ti, vi in zip(out.t, out.vy):
        assert abs(vi - linear_interp(list(t), list(vy), ti)) <= 1e-12
    assert out.is_uniform()


def test_resample_step_too_large():
    with pytest.raises(DataError):
        resample_profile(VelocityProfile("p", [0.0, 0.1], [0.0, -1.0], 0.1), 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 60), st.floats(0.005, 0.05))
def test_resample_preserves_endpoints(n, step):
    t = np.arange(n) * 0.013
    vy = -np.sin(t)
    if step > t[-1]:
        return
    out = resample_profile(VelocityProfile("p", t, vy, 0.013), step)
    assert out.t[0] == t[0] and out.vy[0] == vy[0]
    span = t[-1] - t[0]
    k = round(span / step)
    if abs(k * step - span) <= 1e-9 and step <= span:
        assert out.vy[-1] == vy[-1]


# -- align / segment ----------------------------------------------------------------------------

def test_align_single_minimum():
    t = np.arange(11) * 0.1
    vy = -np.exp(-((t - 0.8) ** 2) / 0.01)
    out = align_at_peak(VelocityProfile("p", t, vy, 0.1))
    assert out.t[8] == 0.0


def test_align_tie_takes_earliest():
    t = np.arange(11) * 0.1
    vy = np.zeros(11)
    vy[4] = vy[6] = -2.0
    out = align_at_peak(VelocityProfile("p", t, vy, 0.1))
    assert out.t[4] == 0.0


def test_align_matches_linear_scan():
    from fallsift.synth import CollapseFallParams, gen_collapse_fall

    p = resample_profile(differentiate(gen_collapse_fall(CollapseFallParams(1.5, 7.5), 60)),
                         1 / 60)
    best = 0
    for i in range(len(p)):
        if p.vy[i] < p.vy[best]:
            best = i
    assert align_at_peak(p).t[best] == 0.0


def test_align_no_peak():
    with pytest.raises(DataError, match="no fall peak"):
        align_at_peak(VelocityProfile("z", np.arange(5.0), np.zeros(5), 1.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=40))
def test_align_is_translation(values):
    vy = np.array(values)
    if vy.min() >= 0:
        vy[0] = -1.0
    t = np.arange(vy.size) * 0.05
    p = VelocityProfile("p", t, vy, 0.05)
    out = align_at_peak(p)
    shift = out.t - p.t
    np.testing.assert_allclose(shift, shift[0], atol=1e-12)
    np.testing.assert_array_equal(out.vy, p.vy)


def _dip_profile():
    t = np.arange(21) * 0.1
    vy = np.zeros(21)
    vy[9:12] = [-1.0, -2.0, -1.0]
    return VelocityProfile("d", t, vy, 0.1)


def test_segment_triangular_dip():
    out = segment_fall_window(_dip_profile())
    np.testing.assert_allclose(out.t, np.arange(8, 13) * 0.1)


def test_segment_excludes_walking_oscillation():
    t = np.arange(60) * 0.05
    vy = np.zeros(60)
    vy[:30] = -0.2 * 3.0 * np.abs(np.sin(np.arange(30)))  # oscillation dips to -0.6
    vy[35:45] = -3.0 * np.sin(np.linspace(0, np.pi, 12)[1:-1])
    p = VelocityProfile("w", t, vy, 0.05)
    out = segment_fall_window(p, enter_frac=0.25, exit_frac=0.1)
    thr = -0.25 * 3.0 * np.max(np.sin(np.linspace(0, np.pi, 12)[1:-1]))
    k = int(np.argmin(vy))
    start = max(i for i in range(k) if vy[i] > thr)
    assert out.t[0] == t[start]
    assert out.t[0] >= t[30]


def test_segment_whole_profile():
    t = np.linspace(0, 1, 11)
    p = VelocityProfile("w", t, -(1 + np.sin(np.pi * t)), 0.1)
    assert len(segment_fall_window(p)) == 11


def test_segment_errors():
    with pytest.raises(ParameterError):
        segment_fall_window(_dip_profile(), enter_frac=0.1, exit_frac=0.2)
    with pytest.raises(DataError):
        segment_fall_window(VelocityProfile("z", np.arange(5.0), np.zeros(5), 1.0))


# -- file formats ----------------------------------------------------------------------------

def test_trajectory_csv_roundtrip(tmp_path):
    tr = metric(np.arange(6) / 30.0, np.linspace(1.6, 0.1, 6), x=np.full(6, 0.25))
    write_trajectory_csv(tr, tmp_path / "a.csv")
    back = read_trajectory_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back.y, tr.y)
    np.testing.assert_array_equal(back.t, tr.t)
    assert (back.unit, back.y_axis, back.sample_id) == ("meters", "up_positive", "m")


def test_trajectory_csv_without_t(tmp_path):
    f = tmp_path / "px.csv"
    f.write_text("# a comment\nframe,x,y\n0,1,10\n1,1,11\n2,1,13\n3,1,16\n4,1,20\n")
    with pytest.raises(DataError, match="not declared"):
        read_trajectory_csv(f)
    tr = read_trajectory_csv(f, unit="pixels", y_axis="down_positive")
    assert tr.t is None
    out = calibrate_trajectory(tr, CalibrationModel(0.01, 30.0))
    assert out.t[4] == 4 / 30.0


def test_trajectory_csv_conflicting_unit(tmp_path):
    tr = metric(np.arange(6) / 30.0, np.zeros(6))
    write_trajectory_csv(tr, tmp_path / "a.csv")
    with pytest.raises(DataError, match="declares"):
        read_trajectory_csv(tmp_path / "a.csv", unit="pixels")


def test_profile_csv_roundtrip(tmp_path):
    p = VelocityProfile("q", np.arange(5) / 30.0, [0, -1, -2.5, -1, 0], 1 / 30)
    write_profile_csv(p, tmp_path / "q.csv")
    text = (tmp_path / "q.csv").read_text()
    assert text.startswith("t,vy\n") and "\r" not in text
    back = read_profile_csv(tmp_path / "q.csv")
    np.testing.assert_array_equal(back.vy, p.vy)
    assert back.grid_step == pytest.approx(1 / 30, abs=1e-12)


def test_extract_profile_pipeline():
    from fallsift.synth import CollapseFallParams, add_pixel_noise, gen_collapse_fall

    tr = gen_collapse_fall(CollapseFallParams(1.5), 30.0)
    calib = CalibrationModel(0.005, 30.0)
    p = extract_profile(add_pixel_noise(tr, calib, 0.0, 0), calib)
    assert p.t[p.peak_index()] == 0.0
    assert p.is_uniform()
    assert -5.43 < p.vy.min() < -4.0
