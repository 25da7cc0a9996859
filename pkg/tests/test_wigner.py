import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibersqueeze.grid import make_grid, to_spectrum
from fibersqueeze.oracles import classical_reference, phase_aligned_error, sech_soliton
from fibersqueeze.params import ScaledParams
from fibersqueeze.raman import build_raman_spec, default_raman_model
from fibersqueeze.wigner import (Propagator, StepConfig, WignerNoise, cexpm1, classical_propagate, expim1,
                                 init_wigner, propagate_wigner, segment_steps)


def scaled(N=1.0, nbar=1e8, B3=0.0, f=0.15, loss=0.0):
    return ScaledParams(t0_fs=73.75, z0_m=0.49, zeta_end=5.0, nbar=nbar, soliton_number=N, B3=B3, f=f,
                        center_wavelength_nm=1499.0, loss_per_zeta=loss)


def prop_for(g, sc, **kw):
    spec = build_raman_spec(default_raman_model(), g, sc.f, 300.0, sc.t0_fs) if kw.get("raman_enabled", True) else None
    return Propagator(sc, g, StepConfig(**kw), spec)


@given(st.floats(-1e-3, 1e-3), st.floats(-0.5, 0.5))
def test_expim1_accuracy(small, big):
    for t in (small, big):
        ref = complex(math.cos(t) - 1.0, math.sin(t))
        got = complex(expim1(np.array([t]))[0])
        assert abs(got - ref) <= 1e-15 + 1e-13 * abs(ref)


@given(st.complex_numbers(max_magnitude=0.5, allow_nan=False, allow_infinity=False))
def test_cexpm1_accuracy(z):
    ref = np.expm1(z.real) * np.exp(1j * z.imag) + (np.exp(1j * z.imag) - 1)
    for arr in (np.array([z]), np.array([z * 1e-3])):
        r = np.expm1(arr.real) * np.exp(1j * arr.imag) + (np.exp(1j * arr.imag) - 1)
        assert abs(cexpm1(arr)[0] - r[0]) <= 1e-15 + 1e-12 * abs(r[0])
    assert np.isfinite(ref)


def test_segment_steps():
    assert segment_steps(0.0, 1.0, 0.3) == (4, 0.25)
    assert segment_steps(1.0, 1.0, 0.1) == (0, 0.0)


def test_soliton_is_stationary():
    g = make_grid(512, 20.0)
    sc = scaled(f=0.0)
    p = prop_for(g, sc, delta_zeta=0.01, raman_enabled=False, tod_enabled=False)
    out = classical_propagate(p, 1 / np.cosh(g.tau) + 0j, [25.0])[-1]
    assert phase_aligned_error(out, sech_soliton(g.tau, 25.0)) < 1e-5


def test_engine_converges_to_independent_solver_with_tod():
    g = make_grid(512, 20.0)
    sc = scaled(N=1.5, B3=0.1, f=0.0)
    f0 = math.sqrt(1.5) / np.cosh(g.tau) + 0j
    errs = []
    for dz in (0.025, 0.0125):
        p = prop_for(g, sc, delta_zeta=dz, raman_enabled=False, absorber_enabled=False)
        eng = classical_propagate(p, f0, [5.0])[-1]
        ref = classical_reference(f0, g.tau, 5.0, 0.0125, b3=p.b3)
        errs.append(np.linalg.norm(eng - ref) / np.linalg.norm(ref))
    assert errs[1] < 1e-3
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)


def test_norm_conserved_without_absorber():
    g = make_grid(256, 20.0)
    sc = scaled(N=1.2)
    p = prop_for(g, sc, absorber_enabled=False)
    f0 = math.sqrt(1.2) / np.cosh(g.tau) + 0j
    out = classical_propagate(p, f0, [10.0])[-1]
    assert np.sum(np.abs(out) ** 2) == pytest.approx(np.sum(np.abs(f0) ** 2), rel=1e-12)


def test_raman_red_shift_and_delay():
    g = make_grid(512, 20.0)
    sc = scaled(N=1.0)
    p = prop_for(g, sc, tod_enabled=False)
    out = classical_propagate(p, 1 / np.cosh(g.tau) + 0j, [25.0])[-1]
    spec = np.abs(to_spectrum(g, out)) ** 2
    w_mean = np.sum(g.omega_values * spec) / np.sum(spec)
    I = np.abs(out) ** 2
    t_mean = np.sum(g.tau * I) / np.sum(I)
    assert w_mean < -0.05  # red: Omega < 0
    assert t_mean > 1.0  # slower, arrives later


def test_vacuum_is_preserved_by_absorber():
    # a vacuum input through the damped edges keeps 1/(2 nbar dtau) per cell
    g = make_grid(64, 10.0)
    sc = scaled(nbar=1.0, f=0.0, loss=0.3)
    p = prop_for(g, sc, raman_enabled=False, dispersion_enabled=True)
    rows = [(t, 0) for t in range(4000)]
    nz = WignerNoise(5, rows)
    st0 = init_wigner(sc, g, nz, mean_field=np.zeros(g.M, complex))
    out = propagate_wigner(st0, p, nz, [2.0], linearized=True)[-1]
    var = np.mean(np.abs(out.fluctuation) ** 2, axis=0)
    expect = 1.0 / (2.0 * g.dtau)
    assert np.allclose(var.mean(), expect, rtol=0.02)
    assert np.allclose(var, expect, rtol=0.12)


def test_rows_are_block_independent():
    g = make_grid(256, 20.0)
    sc = scaled(N=1.0)
    p = prop_for(g, sc)
    rows = [(t, pol) for pol in (0, 1) for t in range(6)]

    def run(rs):
        nz = WignerNoise(11, rs)
        st = init_wigner(sc, g, nz)
        return propagate_wigner(st, p, nz, [0.5])[-1].fluctuation

    full = run(rows)
    part = run([rows[2], rows[9]])
    assert np.array_equal(full[[2, 9]], part)


def test_linearised_close_to_full_at_large_nbar():
    g = make_grid(256, 20.0)
    sc = scaled(N=1.0, nbar=1e10)
    p = prop_for(g, sc)
    rows = [(t, 0) for t in range(8)]
    a = propagate_wigner(init_wigner(sc, g, WignerNoise(3, rows)), p, WignerNoise(3, rows), [1.0])[-1]
    b = propagate_wigner(init_wigner(sc, g, WignerNoise(3, rows)), p, WignerNoise(3, rows), [1.0],
                         linearized=True)[-1]
    rel = np.linalg.norm(a.fluctuation - b.fluctuation) / np.linalg.norm(a.fluctuation)
    assert rel < 1e-3


def test_checkpoint_validation():
    g = make_grid(64, 10.0)
    p = prop_for(g, scaled(), raman_enabled=False)
    with pytest.raises(ValueError):
        classical_propagate(p, np.ones(64, complex), [1.0, 0.5])
    with pytest.raises(ValueError):
        init_wigner(scaled(N=0.0), g, None, n_rows=1)


def test_fused_kernels_match_numpy_reference():
    from fibersqueeze import _kernels
    rng = np.random.default_rng(0)
    M, R = 64, 5
    mean = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    fl = 1e-3 * (rng.standard_normal((R, M)) + 1j * rng.standard_normal((R, M)))
    du, drive = _kernels.intensity_change(mean, fl, 0.1)
    du0, drive0 = _kernels._du_numpy(mean, fl, 0.1)
    np.testing.assert_allclose(du, du0, rtol=1e-12, atol=1e-18)
    np.testing.assert_allclose(drive, drive0, rtol=1e-12)
    rot = np.exp(1j * rng.standard_normal(M))
    dI = 1e-3 * rng.standard_normal((R, M))
    for h in (0.05, 50.0):  # small-angle and large-angle branches
        a = _kernels.kerr_rotate(fl, mean, rot, du, dI, h, 0.82)
        b = _kernels._rotate_numpy(fl, mean, rot, du, dI, h, 0.82)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-16)
