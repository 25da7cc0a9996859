import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibersqueeze.grid import make_grid
from fibersqueeze.oracles import (FockOracleConfig, classical_nlse, classical_reference, kerr_fock_oracle,
                                  linearized_kerr_vmin, phase_aligned_error, richardson_order, sech_soliton,
                                  theta_scan_min)


def test_fock_without_kerr_is_coherent():
    f = kerr_fock_oracle(FockOracleConfig(400.0, 0.0))
    np.testing.assert_allclose(f.V, 1.0, atol=1e-9)
    assert f.V_min == pytest.approx(1.0, abs=1e-9) and f.V_max == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5])
def test_fock_approaches_linearised_kerr(r):
    f = kerr_fock_oracle(FockOracleConfig(1e4, -r / 2e4))
    assert f.V_min == pytest.approx(linearized_kerr_vmin(r), rel=2e-2)
    # closed-form extremum agrees with the sampled curve
    assert f.V.min() >= f.V_min - 1e-9
    assert f.V.min() == pytest.approx(f.V_min, rel=1e-3)


@given(st.floats(50.0, 2000.0), st.floats(-0.02, 0.02))
def test_fock_uncertainty_bound(nbar, mu):
    f = kerr_fock_oracle(FockOracleConfig(nbar, mu))
    assert f.V_min * f.V_max >= 1.0 - 1e-9
    assert f.V_min > 0


def test_fock_angle_sign_follows_kerr_sign():
    # negative mu is the self-focusing (simulator) sign: positive angle
    assert kerr_fock_oracle(FockOracleConfig(1e4, -1e-5)).theta_sq > 0
    assert kerr_fock_oracle(FockOracleConfig(1e4, 1e-5)).theta_sq < 0


def test_fock_rejects_large_photon_numbers():
    with pytest.raises(ValueError):
        FockOracleConfig(2e4, 0.0)


def test_theta_scan_diagonal_cases():
    t, v = theta_scan_min(1.0, 3.0, 0.0)
    assert t == pytest.approx(0.0, abs=1e-12) and v == pytest.approx(1.0)
    t, v = theta_scan_min(3.0, 1.0, 0.0)
    assert abs(t) == pytest.approx(math.pi / 2, abs=1e-9) and v == pytest.approx(1.0)


def test_nlse_soliton_and_order():
    g = make_grid(512, 20.0)
    f0 = 1.0 / np.cosh(g.tau) + 0j
    out = classical_nlse(f0, g.tau, 5.0, 0.005)
    assert phase_aligned_error(out, sech_soliton(g.tau, 5.0)) < 1e-4
    assert richardson_order(f0, g.tau, 5.0, (0.04, 0.02, 0.01)) == pytest.approx(2.0, abs=0.1)
    ref = classical_reference(f0, g.tau, 5.0)
    assert np.linalg.norm(ref - sech_soliton(g.tau, 5.0)) / np.linalg.norm(ref) < 1e-6


def test_linear_dispersion_matches_analytic_gaussian():
    g = make_grid(1024, 40.0)
    f0 = np.exp(-0.5 * g.tau**2) + 0j
    out = classical_nlse(f0, g.tau, 2.0, 0.1, nonlinear=False)
    q = 1.0 + 1j * 2.0
    exact = np.exp(-0.5 * g.tau**2 / q) / np.sqrt(q)
    assert np.max(np.abs(out - exact)) < 1e-10
