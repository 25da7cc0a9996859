"""Uniform time lattice and its spectral dual.

Transform convention (the only place it is declared)::

    phi(tau_j) = sum_m phit_m exp(-i Omega_m tau_j) / sqrt(M)

with tau_j = -Tw + j*dtau and Omega_m = m*pi/Tw.  Under this convention
d/dtau -> -i Omega, so the dispersion term (i/2) d^2/dtau^2 becomes
-i Omega^2/2 in the spectral domain.  Public spectra are returned in
ascending-Omega order (m = -M/2 .. M/2-1); the steppers use numpy FFT
order internally via :attr:`Grid.omega_fft` to avoid shifts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    M: int
    Tw: float
    tau: np.ndarray = field(repr=False, compare=False)
    omega_fft: np.ndarray = field(repr=False, compare=False)

    @property
    def dtau(self) -> float:
        return 2.0 * self.Tw / self.M

    @property
    def delta_omega(self) -> float:
        return math.pi / self.Tw

    @property
    def nyquist(self) -> float:
        return math.pi * self.M / (2.0 * self.Tw)

    @property
    def omega_values(self) -> np.ndarray:
        """Ascending Omega_m, m = -M/2 .. M/2-1."""
        return np.fft.fftshift(self.omega_fft)

    def to_spectrum(self, field_tau: np.ndarray) -> np.ndarray:
        return to_spectrum(self, field_tau)

    def from_spectrum(self, spec: np.ndarray) -> np.ndarray:
        return from_spectrum(self, spec)


def make_grid(M: int, Tw: float, raman_cutoff: float | None = None) -> Grid:
    """Build a grid of ``M`` points on [-Tw, Tw).

    ``raman_cutoff`` (scaled angular frequency) is checked against the
    Nyquist frequency when given.
    """
    M = int(M)
    if not _is_power_of_two(M):
        raise ValueError(f"M must be a power of two, got {M}")
    if not Tw > 0:
        raise ValueError(f"Tw must be positive, got {Tw}")
    if Tw < 10:
        warnings.warn(f"window half-width Tw={Tw} < 10 pulse widths", stacklevel=2)
    nyq = math.pi * M / (2.0 * Tw)
    if raman_cutoff is not None and not nyq > raman_cutoff:
        raise ValueError(
            f"grid Nyquist frequency {nyq:.3f} does not exceed Raman cutoff {raman_cutoff:.3f}; "
            "increase M or decrease Tw"
        )
    dtau = 2.0 * Tw / M
    tau = -Tw + dtau * np.arange(M)
    omega = 2.0 * math.pi * np.fft.fftfreq(M, d=dtau)
    tau.setflags(write=False)
    omega.setflags(write=False)
    return Grid(M=M, Tw=float(Tw), tau=tau, omega_fft=omega)


def _alt_sign(M: int) -> np.ndarray:
    # (-1)^m for m in fft order; M even so the sign of m mod M is irrelevant
    s = np.ones(M)
    s[1::2] = -1.0
    return s


def to_spectrum(grid: Grid, field_tau: np.ndarray) -> np.ndarray:
    field_tau = np.asarray(field_tau)
    if field_tau.shape[-1] != grid.M:
        raise ValueError(f"field length {field_tau.shape[-1]} != grid size {grid.M}")
    spec = np.fft.ifft(field_tau, norm="ortho", axis=-1) * _alt_sign(grid.M)
    return np.fft.fftshift(spec, axes=-1)


def from_spectrum(grid: Grid, spec: np.ndarray) -> np.ndarray:
    spec = np.asarray(spec)
    if spec.shape[-1] != grid.M:
        raise ValueError(f"spectrum length {spec.shape[-1]} != grid size {grid.M}")
    s = np.fft.ifftshift(spec, axes=-1) * _alt_sign(grid.M)
    return np.fft.fft(s, norm="ortho", axis=-1)


def dispersion_phase(grid: Grid, B3: float = 0.0) -> np.ndarray:
    """Spectral phase rate Omega^2/2 + B3 Omega^3/6 in FFT order."""
    w = grid.omega_fft
    return 0.5 * w * w + B3 * w**3 / 6.0


def dispersion_multiplier(grid: Grid, dzeta: float, B3: float = 0.0, *, fft_order: bool = False) -> np.ndarray:
    """exp(-i dzeta (Omega^2/2 + B3 Omega^3/6)); ascending-Omega order unless ``fft_order``."""
    mult = np.exp(-1j * dzeta * dispersion_phase(grid, B3))
    return mult if fft_order else np.fft.fftshift(mult)


def linear_step(phi: np.ndarray, mult_fft: np.ndarray) -> np.ndarray:
    """Apply a spectral multiplier (FFT order) to fields along the last axis."""
    # the (-1)^m factors of the convention cancel between forward and back
    spec = sfft.ifft(phi, axis=-1)
    spec *= mult_fft
    return sfft.fft(spec, axis=-1, overwrite_x=True)
