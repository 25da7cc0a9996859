"""Physical fibre/pulse parameters and their dimensionless image.

Units follow the lab conventions used for polarisation-maintaining fibre
data sheets: dispersion in fs^2/mm, energies in pJ, lengths in m.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299792458.0  # m/s
K_BOLTZMANN = 1.380649e-23  # J/K

# FWHM of sech^2 intensity in units of the sech width parameter
SECH_FWHM_FACTOR = 2.0 * math.log(1.0 + math.sqrt(2.0))

DEFAULT_MAX_ZETA = 200.0


@dataclass(frozen=True)
class FiberSpec:
    length_m: float
    gvd_fs2_per_mm: float
    tod_fs3_per_mm: float = 0.0
    attenuation_db_per_km: float = 0.0
    gamma_per_w_m: float = float("nan")
    soliton_energy_pj: float = 60.0
    raman_fraction: float = 0.15
    temperature_k: float = 300.0
    n2_m2_per_w: float = float("nan")
    mode_field_diameter_um: float = float("nan")

    def __post_init__(self):
        if not self.length_m > 0:
            raise ValueError(f"fibre length must be positive, got {self.length_m}")
        if not self.gvd_fs2_per_mm < 0:
            raise ValueError(
                "only anomalous dispersion (gvd < 0) supports solitons; "
                f"got {self.gvd_fs2_per_mm} fs^2/mm"
            )
        if not 0.0 <= self.raman_fraction < 1.0:
            raise ValueError(f"raman_fraction must lie in [0, 1), got {self.raman_fraction}")
        if not self.soliton_energy_pj > 0:
            raise ValueError("soliton energy must be positive")
        if self.temperature_k < 0:
            raise ValueError("temperature must be non-negative")

    def with_length(self, length_m: float) -> "FiberSpec":
        return replace(self, length_m=length_m)


@dataclass(frozen=True)
class PulseSpec:
    center_wavelength_nm: float
    fwhm_fs: float
    total_energy_pj: float

    def __post_init__(self):
        if not self.center_wavelength_nm > 0:
            raise ValueError("wavelength must be positive")
        if not self.fwhm_fs > 0:
            raise ValueError("pulse FWHM must be positive")
        if self.total_energy_pj < 0:
            raise ValueError("pulse energy must be non-negative")

    @property
    def energy_per_polarisation_pj(self) -> float:
        return 0.5 * self.total_energy_pj

    def with_energy(self, total_energy_pj: float) -> "PulseSpec":
        return replace(self, total_energy_pj=total_energy_pj)


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless propagation parameters.

    ``t0_fs`` is the sech width parameter, ``z0_m`` the dispersion length,
    ``nbar`` the photon number scale (Es = 2 hbar omega0 nbar) and
    ``soliton_number`` the energy of one polarisation pulse in units of Es.
    """

    t0_fs: float
    z0_m: float
    zeta_end: float
    nbar: float
    soliton_number: float
    B3: float
    f: float
    center_wavelength_nm: float
    temperature_k: float = 300.0
    loss_per_zeta: float = 0.0

    @property
    def omega0(self) -> float:
        return carrier_angular_frequency(self.center_wavelength_nm)

    def zeta_of_length(self, length_m: float) -> float:
        return length_m / self.z0_m


def carrier_angular_frequency(wavelength_nm: float) -> float:
    return 2.0 * math.pi * C_LIGHT / (wavelength_nm * 1e-9)


def t0_from_fwhm(fwhm_fs: float) -> float:
    return fwhm_fs / SECH_FWHM_FACTOR


def soliton_number(pulse: PulseSpec, fiber: FiberSpec) -> float:
    """Energy of one polarisation pulse relative to the fundamental soliton."""
    return pulse.energy_per_polarisation_pj / fiber.soliton_energy_pj


def derive_scaled(
    fiber: FiberSpec,
    pulse: PulseSpec,
    *,
    t0_direct: bool = False,
    max_zeta: float = DEFAULT_MAX_ZETA,
    include_attenuation: bool = False,
) -> ScaledParams:
    """Map physical parameters onto the scaled propagation frame.

    With ``t0_direct`` the pulse ``fwhm_fs`` is taken as the sech width
    parameter itself rather than the intensity FWHM.
    """
    t0 = pulse.fwhm_fs if t0_direct else t0_from_fwhm(pulse.fwhm_fs)
    k2 = abs(fiber.gvd_fs2_per_mm)
    z0 = t0 * t0 / k2 * 1e-3
    zeta_end = fiber.length_m / z0
    if zeta_end > max_zeta:
        raise ValueError(
            f"propagation length zeta={zeta_end:.1f} exceeds max_zeta={max_zeta}; "
            "simulation impractical at this dispersion length"
        )
    omega0 = carrier_angular_frequency(pulse.center_wavelength_nm)
    nbar = fiber.soliton_energy_pj * 1e-12 / (2.0 * HBAR * omega0)
    if nbar < 1e4:
        warnings.warn(
            f"nbar={nbar:.3g} is small; truncated Wigner results may be unreliable",
            stacklevel=2,
        )
    B3 = fiber.tod_fs3_per_mm / (k2 * t0)
    loss = 0.0
    if include_attenuation:
        # field amplitude decay per unit zeta
        alpha_power_per_m = fiber.attenuation_db_per_km * math.log(10.0) / 10.0 / 1000.0
        loss = 0.5 * alpha_power_per_m * z0
    return ScaledParams(
        t0_fs=t0,
        z0_m=z0,
        zeta_end=zeta_end,
        nbar=nbar,
        soliton_number=soliton_number(pulse, fiber),
        B3=B3,
        f=fiber.raman_fraction,
        center_wavelength_nm=pulse.center_wavelength_nm,
        temperature_k=fiber.temperature_k,
        loss_per_zeta=loss,
    )


def to_physical(scaled: ScaledParams, *, t0_direct: bool = False) -> tuple[FiberSpec, PulseSpec]:
    """Invert :func:`derive_scaled` for the quantities it encodes."""
    omega0 = scaled.omega0
    k2 = scaled.t0_fs**2 / (scaled.z0_m * 1e3)
    es_pj = scaled.nbar * 2.0 * HBAR * omega0 * 1e12
    fiber = FiberSpec(
        length_m=scaled.zeta_end * scaled.z0_m,
        gvd_fs2_per_mm=-k2,
        tod_fs3_per_mm=scaled.B3 * k2 * scaled.t0_fs,
        soliton_energy_pj=es_pj,
        raman_fraction=scaled.f,
        temperature_k=scaled.temperature_k,
    )
    fwhm = scaled.t0_fs if t0_direct else scaled.t0_fs * SECH_FWHM_FACTOR
    pulse = PulseSpec(
        center_wavelength_nm=scaled.center_wavelength_nm,
        fwhm_fs=fwhm,
        total_energy_pj=2.0 * scaled.soliton_number * es_pj,
    )
    return fiber, pulse


# Material data for the two production runs of the 3M FS-PM-7811 fibre.
# TOD is the single value quoted at 1499 nm (8.38e-41 s^3/m).
_TOD_FS3_PER_MM = 8.38e-41 * 1e45 / 1e3

FIBER_PRESETS: dict[str, dict] = {
    "fiber_I": dict(
        gvd_fs2_per_mm=-10.5,
        tod_fs3_per_mm=_TOD_FS3_PER_MM,
        attenuation_db_per_km=1.82,
        gamma_per_w_m=5.3e-3,
        soliton_energy_pj=56.0,
        n2_m2_per_w=2.9e-20,
        mode_field_diameter_um=5.42,
    ),
    "fiber_II": dict(
        gvd_fs2_per_mm=-11.1,
        tod_fs3_per_mm=_TOD_FS3_PER_MM,
        attenuation_db_per_km=2.03,
        gamma_per_w_m=4.8e-3,
        soliton_energy_pj=60.0,
        n2_m2_per_w=2.9e-20,
        mode_field_diameter_um=5.69,
    ),
}


def fiber_preset(name: str, length_m: float, **overrides) -> FiberSpec:
    try:
        base = FIBER_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown fibre preset {name!r}; choose from {sorted(FIBER_PRESETS)}") from None
    return FiberSpec(length_m=length_m, **{**base, **overrides})
