import math
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fibersqueeze.corrections import (LossSpec, apply_gawbs, apply_loss, corrected_ellipse, extremal_angles, fit_c,
                                      gawbs_variance, lossy)
from fibersqueeze.stokes import EllipseStats


def ellipse(a=0.1, b=30.0, th=0.03):
    return EllipseStats(V1=0, V2=0, C12=0, shot=1.0, theta_sq=th, sq_dB=10 * math.log10(a),
                        anti_dB=10 * math.log10(b), se_sq_dB=0.1, se_anti_dB=0.1, se_theta=0.001, n_traj=100,
                        lam_min=a, lam_max=b)


def test_loss_fixed_point_and_floor():
    assert lossy(1.0, 0.3) == pytest.approx(1.0)
    assert lossy(0.0, 0.87) == pytest.approx(0.13)
    assert 10 * math.log10(lossy(0.0, 0.87)) == pytest.approx(-8.86, abs=0.005)
    with pytest.raises(ValueError):
        LossSpec(0.0)


@given(st.floats(1e-4, 1.0), st.floats(0.05, 1.0))
def test_loss_is_monotone_and_bounded(v, T):
    out = lossy(v, T)
    assert v - 1e-12 <= out <= 1.0 + 1e-12


def test_apply_loss_keeps_angle():
    e = apply_loss(ellipse(), LossSpec(0.87))
    assert e.theta_sq == 0.03
    assert e.sq_dB == pytest.approx(10 * math.log10(0.87 * 0.1 + 0.13))
    assert 0 < e.se_sq_dB < 0.1


@given(st.floats(0.01, 0.99), st.floats(1.01, 200.0), st.floats(-0.7, 0.7), st.floats(0.0, 50.0))
def test_extrema_match_dense_grid(a, b, thk, cE):
    ex = extremal_angles(a, b, thk, cE)
    t = np.linspace(-0.5 * math.pi, 0.5 * math.pi, 1_000_001)
    v = gawbs_variance(t, a, b, thk, cE, 1.0)
    i = int(np.argmin(v))
    assert ex.v_min == pytest.approx(v[i], rel=1e-9, abs=1e-9)
    assert ex.v_max == pytest.approx(v.max(), rel=1e-9)
    assume(ex.v_max - ex.v_min > 1e-3)
    d = (ex.theta_min - t[i] + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    assert abs(d) < 1e-4
    assert ex.v_min * ex.v_max >= a * b - 1e-9


def test_zero_c_leaves_ellipse_unchanged():
    e = ellipse()
    g = apply_gawbs(e, 0.0, 100.0)
    assert g.theta_sq == pytest.approx(e.theta_sq, abs=1e-12)
    assert g.sq_dB == pytest.approx(e.sq_dB, abs=1e-12)
    sq, anti, th = corrected_ellipse(0.1, 30.0, 0.03, 0.0, 100.0)
    assert th == pytest.approx(0.03, abs=1e-12)


def test_phase_noise_pulls_angle_towards_amplitude_axis():
    # the long axis is dragged towards S2, so the short axis rotates towards 0
    th0 = corrected_ellipse(0.1, 30.0, 0.03, 0.0, 50.0)[2]
    th1 = corrected_ellipse(0.1, 30.0, 0.03, 0.05, 50.0)[2]
    assert 0 < th1 < th0
    # a well-squeezed, well-aligned ellipse is barely affected
    sq0 = corrected_ellipse(0.05, 200.0, 0.005, 0.0, 100.0)[0]
    sq1 = corrected_ellipse(0.05, 200.0, 0.005, 0.01, 100.0)[0]
    assert abs(sq1 - sq0) < 0.05


@given(st.floats(0.01, 1.0), st.floats(1.0, 100.0), st.floats(-0.5, 0.5), st.floats(0, 1), st.floats(0, 200),
       st.floats(-1.5, 1.5))
def test_phase_noise_never_lowers_variance(a, b, thk, c, E, th):
    assert gawbs_variance(th, a, b, thk, c, E) >= gawbs_variance(th, a, b, thk, 0.0, E)


def synthetic(c_true):
    E = np.linspace(5, 180, 12)
    a = 0.05 + 0.002 * E
    b = 1 + 0.3 * E
    thk = np.deg2rad(0.5 + 15 / (1 + E))
    sim = np.column_stack([E, a, b, thk])
    meas_E = E[1:-1:2]
    obs = [math.degrees(corrected_ellipse(np.interp(e, E, a), np.interp(e, E, b), np.interp(e, E, thk), c_true, e)[2])
           for e in meas_E]
    return sim, np.column_stack([meas_E, obs])


@pytest.mark.parametrize("c_true", [0.002, 0.01, 0.05])
def test_fit_recovers_c(c_true):
    sim, meas = synthetic(c_true)
    fit = fit_c(sim, meas)
    assert fit.c == pytest.approx(c_true, rel=0.01)
    assert fit.residual_sum < 1e-8


def test_fit_with_zero_c_and_min_points():
    sim, meas = synthetic(0.0)
    assert fit_c(sim, meas).c == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        fit_c(sim, meas[:2])
    with pytest.raises(ValueError):
        fit_c(sim, [[500.0, 1.0], [600.0, 1.0], [700.0, 1.0]])
