import math

import numpy as np
import pytest

from fibersqueeze.grid import make_grid
from fibersqueeze.oracles import FockOracleConfig, kerr_fock_oracle
from fibersqueeze.params import ScaledParams
from fibersqueeze.plusp import PlusPNoise, init_plusp, propagate_plusp
from fibersqueeze.raman import build_raman_spec, default_raman_model
from fibersqueeze.stokes import difference_ellipse_stats, ellipse_stats, stokes_split
from fibersqueeze.wigner import Propagator, StepConfig, WignerNoise, init_wigner, propagate_wigner


def flat_setup(r, nbar=1e4, dz=0.01):
    g = make_grid(16, 4.0)
    sc = ScaledParams(t0_fs=100.0, z0_m=1.0, zeta_end=r, nbar=nbar, soliton_number=1.0, B3=0.0, f=0.0,
                      center_wavelength_nm=1500.0)
    cfg = StepConfig(delta_zeta=dz, absorber_enabled=False, tod_enabled=False, raman_enabled=False,
                     dispersion_enabled=False)
    return g, sc, Propagator(sc, g, cfg, None)


def split(state, n, dtau):
    return stokes_split(state.mean_field, state.w[:n], state.w[n:], dtau, state.w_plus[:n], state.w_plus[n:])


def soliton_setup(raman=True):
    g = make_grid(256, 20.0)
    sc = ScaledParams(t0_fs=73.75, z0_m=0.49, zeta_end=1.0, nbar=1e8, soliton_number=1.0, B3=0.1, f=0.18,
                      center_wavelength_nm=1499.0)
    spec = build_raman_spec(default_raman_model(), g, sc.f, 300.0, sc.t0_fs) if raman else None
    return g, sc, Propagator(sc, g, StepConfig(delta_zeta=0.05, raman_enabled=raman), spec)


def test_zero_length_is_exactly_shot_noise():
    g, sc, p = flat_setup(0.3)
    n = 100
    st = init_plusp(sc, g, 2 * n, mean_field=np.ones(g.M, complex))
    s = propagate_plusp([st], [False], p, PlusPNoise(1, [(t, q) for q in (0, 1) for t in range(n)]), [0.0])[-1][0]
    e = ellipse_stats(stokes_split(s.mean_field, s.w[:n], s.w[n:], g.dtau, s.w_plus[:n], s.w_plus[n:]),
                      "plusp", sc.nbar, g.M)
    assert e.sq_dB == 0.0 and e.anti_dB == 0.0


def test_flat_kerr_matches_fock_oracle():
    r, n = 0.3, 4000
    g, sc, p = flat_setup(r)
    rows = [(t, q) for q in (0, 1) for t in range(n)]
    st = init_plusp(sc, g, 2 * n, mean_field=np.ones(g.M, complex))
    s = propagate_plusp([st], [False], p, PlusPNoise(5, rows), [r])[-1][0]
    smp = stokes_split(s.mean_field, s.w[:n], s.w[n:], g.dtau, s.w_plus[:n], s.w_plus[n:])
    e = ellipse_stats(smp, "plusp", sc.nbar, g.M)
    f = kerr_fock_oracle(FockOracleConfig(1e4, -r / 2e4))
    assert abs(e.sq_dB - 10 * math.log10(f.V_min)) < max(3 * e.se_sq_dB, 0.25)
    assert abs(e.theta_deg - math.degrees(f.theta_sq)) < 1.5


def test_lockstep_variants_share_noise():
    g, sc, p = soliton_setup()
    n = 6
    rows = [(t, q) for q in (0, 1) for t in range(n)]
    st = init_plusp(sc, g, 2 * n)
    a, b = propagate_plusp([st, st.copy()], [False, False], p, PlusPNoise(11, rows), [0.5])[-1]
    assert np.array_equal(a.w, b.w) and np.array_equal(a.w_plus, b.w_plus)
    full, lin = propagate_plusp([st, st.copy()], [False, True], p, PlusPNoise(11, rows), [0.5])[-1]
    # nonlinear and linearised runs driven by the same noise stay close
    d = np.linalg.norm(full.w - lin.w) / np.linalg.norm(full.w)
    assert 0 < d < 0.05


def test_linearised_plusp_keeps_partner_conjugate():
    g, sc, p = soliton_setup(raman=False)
    n = 4
    st = init_plusp(sc, g, 2 * n)
    rows = [(t, q) for q in (0, 1) for t in range(n)]
    s = propagate_plusp([st], [True], p, PlusPNoise(2, rows), [0.5])[-1][0]
    assert np.all(np.isfinite(s.w))
    assert not np.any(s.invalid)


def test_difference_estimator_tracks_wigner_at_short_length():
    g, sc, p = soliton_setup()
    n, z = 400, 0.5
    rows = [(t, q) for q in (0, 1) for t in range(n)]
    st = init_plusp(sc, g, 2 * n)
    P, PL = propagate_plusp([st, st.copy()], [False, True], p, PlusPNoise(4, rows), [z])[-1]
    wn = WignerNoise(4, rows, split_bank=True)
    wl = propagate_wigner(init_wigner(sc, g, wn), p, wn, [z], linearized=True)[-1]
    wig_s = stokes_split(wl.mean_field, wl.fluctuation[:n], wl.fluctuation[n:], g.dtau)
    est = difference_ellipse_stats(split(P, n, g.dtau), split(PL, n, g.dtau), wig_s, sc.nbar, g.M)
    wig = ellipse_stats(wig_s, "wigner", sc.nbar, g.M)
    assert est.sq_dB < -1.0
    assert abs(est.sq_dB - wig.sq_dB) < 4 * math.hypot(est.se_sq_dB, wig.se_sq_dB) + 0.1


def test_rejects_zero_energy():
    g, sc, _ = flat_setup(0.1)
    with pytest.raises(ValueError):
        init_plusp(sc, g, 2, N=0.0)
