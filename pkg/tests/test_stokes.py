import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibersqueeze.oracles import theta_scan_min
from fibersqueeze.stokes import (Moments, StokesSample, ellipse_stats, sample_moments, squeezing_db,
                                 stokes_sample, stokes_split)


def coherent_wigner(n, M, nbar, dtau, seed=0):
    rng = np.random.default_rng(seed)
    mean = np.ones(M, complex)
    sig = math.sqrt(0.25 / (nbar * dtau))
    dx = sig * (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M)))
    dy = sig * (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M)))
    return mean, dx, dy


def test_split_matches_direct_stokes():
    M, dtau = 32, 0.1
    mean, dx, dy = coherent_wigner(5, M, 1e3, dtau)
    s = stokes_split(mean, dx, dy, dtau)
    d = stokes_sample(mean + dx, 1j * (mean + dy), dtau)
    for k, name in enumerate(("s0", "s1", "s2", "s3")):
        np.testing.assert_allclose(getattr(s, name), d.delta[:, k], rtol=1e-12, atol=1e-12)


def test_coherent_state_is_at_shot_noise():
    M, dtau, nbar = 16, 0.25, 1e6
    mean, dx, dy = coherent_wigner(20000, M, nbar, dtau, seed=3)
    e = ellipse_stats(stokes_split(mean, dx, dy, dtau), "wigner", nbar, M)
    assert abs(e.sq_dB) < 4 * e.se_sq_dB + 0.02
    assert abs(e.anti_dB) < 4 * e.se_anti_dB + 0.02
    # shot level equals the mean photon number in both polarisations
    assert e.shot == pytest.approx(2 * nbar * M * dtau, rel=1e-3)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-0.9, 0.9))
def test_eig_matches_theta_scan(v1, v2, rho):
    c12 = rho * math.sqrt(v1 * v2)
    m = Moments(v1, v2, c12, 1.0)
    lmin, lmax, th = m.eig()
    t_scan, v_scan = theta_scan_min(v1, v2, c12, step_deg=0.01)
    assert v_scan == pytest.approx(lmin, abs=1e-6 * (1 + lmax))
    assert m.variance(th) == pytest.approx(lmin, rel=1e-9, abs=1e-12)
    assert lmin * lmax == pytest.approx(v1 * v2 - c12 * c12, rel=1e-9)
    assert -0.5 * math.pi < th <= 0.5 * math.pi
    if lmax - lmin > 1e-3 * lmax:
        d = (th - t_scan + 0.5 * math.pi) % math.pi - 0.5 * math.pi
        assert abs(d) < math.radians(0.02) + 1e-3 * lmax / (lmax - lmin)


def test_positive_c12_gives_positive_angle():
    lmin, lmax, th = Moments(1.0, 2.0, 0.3, 1.0).eig()
    assert th > 0


def test_jackknife_error_scales_as_inverse_sqrt_n():
    M, dtau, nbar = 8, 0.5, 1e6
    ses = []
    for n in (1000, 16000):
        mean, dx, dy = coherent_wigner(n, M, nbar, dtau, seed=n)
        ses.append(ellipse_stats(stokes_split(mean, dx, dy, dtau), "wigner", nbar, M).se_sq_dB)
    assert ses[0] / ses[1] == pytest.approx(4.0, rel=0.35)


def test_plusp_ordering_zero_noise_is_shot():
    s = StokesSample(np.zeros((10, 4), complex), np.array([2.0, 0, 0, 2.0]))
    m = sample_moments(s, "plusp", 100.0, 8)
    assert m.V1 == m.shot == 200.0


def test_input_validation():
    with pytest.raises(ValueError):
        squeezing_db(1.0, 0.0)
    with pytest.raises(ValueError):
        squeezing_db(0.0, 1.0)
    s = StokesSample(np.zeros((1, 4)), np.zeros(4))
    with pytest.raises(ValueError):
        sample_moments(s, "wigner", 1.0, 1)
    with pytest.raises(ValueError):
        sample_moments(StokesSample(np.zeros((4, 4)), np.ones(4)), "normal", 1.0, 1)
    assert squeezing_db(0.5, 1.0) == pytest.approx(-3.0103, abs=1e-4)
