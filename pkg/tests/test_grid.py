import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibersqueeze.grid import dispersion_multiplier, from_spectrum, linear_step, make_grid, to_spectrum


def test_grid_layout():
    g = make_grid(64, 10.0)
    assert g.tau[0] == -10.0
    assert g.dtau == pytest.approx(20.0 / 64)
    assert np.all(np.diff(g.omega_values) > 0)
    assert g.omega_values[0] == pytest.approx(-g.nyquist)


def test_rejects_bad_grids():
    with pytest.raises(ValueError):
        make_grid(100, 10.0)
    with pytest.raises(ValueError):
        make_grid(64, 10.0, raman_cutoff=20.0)
    with pytest.warns(UserWarning):
        make_grid(64, 5.0)


@given(st.integers(0, 2**31 - 1))
def test_spectrum_round_trip_and_parseval(seed):
    g = make_grid(128, 12.0)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    s = to_spectrum(g, f)
    assert np.allclose(from_spectrum(g, s), f, atol=1e-12)
    assert np.sum(np.abs(s) ** 2) == pytest.approx(np.sum(np.abs(f) ** 2), rel=1e-12)


def test_plane_wave_lands_on_its_bin():
    g = make_grid(64, 10.0)
    m = 5
    f = np.exp(-1j * m * g.delta_omega * g.tau)
    s = to_spectrum(g, f)
    k = int(np.argmax(np.abs(s)))
    assert g.omega_values[k] == pytest.approx(m * g.delta_omega)


def test_linear_step_matches_analytic_gaussian():
    # (i/2) phi_tt from a Gaussian: width grows as sqrt(1 + zeta^2)
    g = make_grid(1024, 40.0)
    f0 = np.exp(-g.tau**2 / 2) + 0j
    z = 3.0
    f = linear_step(f0, dispersion_multiplier(g, z, 0.0, fft_order=True))
    exact = np.exp(-g.tau**2 / (2 * (1 + 1j * z))) / np.sqrt(1 + 1j * z)
    assert np.max(np.abs(f - exact)) < 1e-10
    assert np.sum(np.abs(f) ** 2) == pytest.approx(np.sum(np.abs(f0) ** 2), rel=1e-12)


def test_dispersion_multiplier_orders():
    g = make_grid(32, 10.0)
    a = dispersion_multiplier(g, 0.1, 0.2)
    b = dispersion_multiplier(g, 0.1, 0.2, fft_order=True)
    assert np.allclose(np.fft.fftshift(b), a)
    assert np.allclose(np.abs(a), 1.0)
    w = g.omega_values
    assert np.allclose(a, np.exp(-0.1j * (0.5 * w**2 + 0.2 * w**3 / 6)))
    assert math.isclose(abs(a[0]), 1.0)
