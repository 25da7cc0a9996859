import math

import pytest

from fibersqueeze.params import (FIBER_PRESETS, FiberSpec, PulseSpec, derive_scaled, fiber_preset,
                                 t0_from_fwhm, to_physical)


def test_fiber_ii_scaling():
    fib = fiber_preset("fiber_II", 13.2)
    sc = derive_scaled(fib, PulseSpec(1499.0, 130.0, 98.6))
    assert sc.t0_fs == pytest.approx(130.0 / 1.7627471740390861, rel=1e-12)
    assert sc.z0_m == pytest.approx(0.48999, rel=1e-4)
    assert sc.zeta_end == pytest.approx(26.94, abs=0.01)
    assert sc.nbar == pytest.approx(2.264e8, rel=1e-3)
    assert sc.soliton_number == pytest.approx(98.6 / 120.0)
    # TOD coefficient from the quoted material value
    assert sc.B3 == pytest.approx(0.1024, abs=5e-4)


def test_presets_match_table():
    assert FIBER_PRESETS["fiber_II"]["gvd_fs2_per_mm"] == -11.1
    assert FIBER_PRESETS["fiber_II"]["soliton_energy_pj"] == 60.0
    assert FIBER_PRESETS["fiber_II"]["attenuation_db_per_km"] == 2.03
    assert FIBER_PRESETS["fiber_I"]["soliton_energy_pj"] == 56.0
    with pytest.raises(KeyError):
        fiber_preset("fiber_III", 1.0)


def test_round_trip_physical():
    fib = fiber_preset("fiber_I", 13.35)
    pul = PulseSpec(1499.0, 130.0, 112.0)
    sc = derive_scaled(fib, pul)
    fib2, pul2 = to_physical(sc)
    assert fib2.gvd_fs2_per_mm == pytest.approx(fib.gvd_fs2_per_mm, rel=1e-12)
    assert fib2.length_m == pytest.approx(fib.length_m, rel=1e-12)
    assert fib2.tod_fs3_per_mm == pytest.approx(fib.tod_fs3_per_mm, rel=1e-12)
    assert fib2.soliton_energy_pj == pytest.approx(fib.soliton_energy_pj, rel=1e-12)
    assert pul2.fwhm_fs == pytest.approx(pul.fwhm_fs, rel=1e-12)
    assert pul2.total_energy_pj == pytest.approx(pul.total_energy_pj, rel=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        FiberSpec(length_m=1.0, gvd_fs2_per_mm=+5.0)
    with pytest.raises(ValueError):
        FiberSpec(length_m=0.0, gvd_fs2_per_mm=-5.0)
    with pytest.raises(ValueError):
        PulseSpec(1499.0, -1.0, 10.0)
    with pytest.raises(ValueError):
        derive_scaled(fiber_preset("fiber_II", 1000.0), PulseSpec(1499.0, 130.0, 10.0))


def test_small_nbar_warns():
    fib = FiberSpec(length_m=1.0, gvd_fs2_per_mm=-10.0, soliton_energy_pj=1e-6)
    with pytest.warns(UserWarning):
        derive_scaled(fib, PulseSpec(1499.0, 130.0, 1e-6))


def test_t0_direct_and_attenuation():
    fib = fiber_preset("fiber_II", 13.2)
    sc = derive_scaled(fib, PulseSpec(1499.0, 73.0, 98.6), t0_direct=True, include_attenuation=True)
    assert sc.t0_fs == 73.0
    alpha = 2.03 * math.log(10) / 10 / 1000
    assert sc.loss_per_zeta == pytest.approx(0.5 * alpha * sc.z0_m)
    assert t0_from_fwhm(1.7627471740390861) == pytest.approx(1.0)
