"""Raman phonon bath: gain model, oscillator sampling, noise and potential.

Each grid frequency Omega_k = k*dOmega below the cutoff carries one phonon
oscillator per propagation slice.  Along tau the oscillator amplitude obeys

    d beta_k / d tau = -i r_k^2 x(tau) exp(i Omega_k tau)

with x the (vacuum-subtracted) intensity, and the potential is
I = sum_k 2 Re{beta_k exp(-i Omega_k tau)} dOmega.  Writing
psi_k = beta_k exp(-i Omega_k tau), the ODE is linear with constant
coefficients, so for an intensity that is piecewise linear between grid
points it is integrated exactly; the resulting causal convolution is
evaluated with zero-padded FFTs for whole trajectory batches at once.

Sign: a constant intensity I0 switched on for long enough gives
I -> -f*I0, which in the field equation (phase -I) adds +f*I0 to the
(1-f)*I0 electronic phase, restoring the full Kerr coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .grid import Grid
from .params import HBAR, K_BOLTZMANN

DEFAULT_CUTOFF_THZ = 40.0


@dataclass(frozen=True)
class RamanModel:
    """Raman gain shape, either tabulated or a sum of damped oscillators.

    Tabulated: ``freq_thz``/``gain`` arrays, linearly interpolated, zero
    outside the table.  Parametric: ``components`` rows of
    (center_THz, fwhm_THz, weight).
    """

    cutoff_thz: float = DEFAULT_CUTOFF_THZ
    freq_thz: np.ndarray | None = None
    gain_table: np.ndarray | None = None
    components: np.ndarray | None = None

    def __post_init__(self):
        if self.components is None and self.freq_thz is None:
            raise ValueError("empty Raman model")
        if self.freq_thz is not None:
            f = np.asarray(self.freq_thz, float)
            g = np.asarray(self.gain_table, float)
            if f.shape != g.shape or f.size < 2:
                raise ValueError("tabulated Raman model needs matching freq/gain columns")
            if np.any(g < 0):
                raise ValueError("Raman gain must be non-negative")
            if np.any(np.diff(f) <= 0):
                raise ValueError("Raman table frequencies must be increasing")
        if self.components is not None:
            c = np.atleast_2d(np.asarray(self.components, float))
            if c.shape[1] != 3 or c.shape[0] == 0:
                raise ValueError("parametric Raman model needs rows of (center, fwhm, weight)")
            if np.any(c[:, 1] <= 0) or np.any(c[:, 2] < 0):
                raise ValueError("Raman component widths must be positive and weights non-negative")
        if not self.cutoff_thz > 0:
            raise ValueError("Raman cutoff must be positive")

    def gain(self, nu_thz) -> np.ndarray:
        nu = np.asarray(nu_thz, float)
        if self.freq_thz is not None:
            return np.interp(nu, self.freq_thz, self.gain_table, left=0.0, right=0.0)
        c = np.atleast_2d(np.asarray(self.components, float))
        center, hw, w = c[:, 0:1], 0.5 * c[:, 1:2], c[:, 2:3]
        # imaginary part of a damped oscillator response, unit peak area
        den = (center**2 - nu**2) ** 2 + (2.0 * hw * nu) ** 2
        g = np.sum(w * center * 2.0 * hw * nu / den, axis=0)
        return np.maximum(g, 0.0)


def _read_columns(path) -> tuple[np.ndarray, float | None]:
    cutoff = None
    rows = []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                tok = s[1:].split()
                if len(tok) == 2 and tok[0] == "cutoff_THz":
                    cutoff = float(tok[1])
                continue
            rows.append([float(v) for v in s.replace(",", " ").split()])
    if not rows:
        raise ValueError(f"no data rows in Raman file {path}")
    return np.array(rows), cutoff


def load_raman_model(path: str | Path, cutoff_thz: float | None = None) -> RamanModel:
    """Read a two-column (freq_THz, gain) table or three-column oscillator list."""
    data, file_cutoff = _read_columns(path)
    cutoff = cutoff_thz if cutoff_thz is not None else file_cutoff
    if data.shape[1] == 2:
        if cutoff is None:
            cutoff = float(data[-1, 0])
        return RamanModel(cutoff_thz=cutoff, freq_thz=data[:, 0], gain_table=data[:, 1])
    if data.shape[1] == 3:
        return RamanModel(cutoff_thz=cutoff or DEFAULT_CUTOFF_THZ, components=data)
    raise ValueError(f"Raman file {path} must have 2 or 3 columns")


def default_raman_model() -> RamanModel:
    ref = resources.files("fibersqueeze").joinpath("data/silica_raman.txt")
    with resources.as_file(ref) as p:
        return load_raman_model(p)


@dataclass(frozen=True)
class RamanSpec:
    omega_k: np.ndarray
    r_k: np.ndarray
    n_k: np.ndarray
    f: float
    delta_omega: float

    @property
    def K(self) -> int:
        return self.omega_k.size

    def static_sum(self) -> float:
        return float(np.sum(2.0 * self.r_k**2 * self.delta_omega / self.omega_k))


def bose_einstein(nu_thz, temperature_k: float) -> np.ndarray:
    nu = np.asarray(nu_thz, float)
    if temperature_k <= 0:
        return np.zeros_like(nu)
    x = HBAR * 2.0 * math.pi * nu * 1e12 / (K_BOLTZMANN * temperature_k)
    return 1.0 / np.expm1(x)


def scaled_to_thz(omega, t0_fs: float):
    return np.asarray(omega) / (2.0 * math.pi * t0_fs) * 1e3


def thz_to_scaled(nu_thz, t0_fs: float):
    return np.asarray(nu_thz) * 2.0 * math.pi * t0_fs * 1e-3


def build_raman_spec(model: RamanModel, grid: Grid, f: float, temperature_k: float, t0_fs: float) -> RamanSpec:
    if not 0.0 <= f < 1.0:
        raise ValueError(f"Raman fraction must lie in [0, 1), got {f}")
    cutoff = float(thz_to_scaled(model.cutoff_thz, t0_fs))
    if not cutoff < grid.nyquist:
        raise ValueError(
            f"Raman cutoff {model.cutoff_thz} THz (Omega={cutoff:.2f}) is above grid Nyquist {grid.nyquist:.2f}"
        )
    dw = grid.delta_omega
    K = int(math.floor(cutoff / dw + 1e-9))
    if K < 1:
        raise ValueError("no phonon modes below the Raman cutoff; widen the window")
    omega_k = dw * np.arange(1, K + 1)
    nu_k = scaled_to_thz(omega_k, t0_fs)
    alpha = model.gain(nu_k)
    if not np.any(alpha > 0):
        raise ValueError("Raman gain vanishes on every sampled mode")
    r2 = alpha / (2.0 * math.pi)
    s = np.sum(2.0 * r2 * dw / omega_k)
    r2 = r2 * (f / s) if f > 0 else np.zeros_like(r2)
    return RamanSpec(
        omega_k=omega_k,
        r_k=np.sqrt(r2),
        n_k=bose_einstein(nu_k, temperature_k),
        f=f,
        delta_omega=dw,
    )


@dataclass
class PhononBank:
    """Phonon amplitudes psi_k = beta_k exp(-i Omega_k tau) at the window start.

    Shape (..., K).  ``beta_plus`` is None for Wigner (conjugate partner).
    """

    beta: np.ndarray
    beta_plus: np.ndarray | None = None


def phonon_noise_variance(spec: RamanSpec, dzeta: float, nbar: float, ordering: str) -> np.ndarray:
    if not dzeta > 0:
        raise ValueError("dzeta must be positive")
    r2 = spec.r_k**2
    if ordering == "wigner":
        occ = spec.n_k + 0.5
    elif ordering == "plusp":
        occ = spec.n_k
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    return r2 * occ / (nbar * spec.delta_omega * dzeta)


def draw_phonon_noise(spec: RamanSpec, dzeta: float, nbar: float, ordering: str, rng: np.random.Generator,
                      shape: tuple[int, ...] = ()) -> PhononBank:
    """Initial phonon amplitudes for one slice; complex Gaussian per mode.

    For +P the thermal state is a positive mixture of coherent states, so
    beta_plus = conj(beta) with variance r^2 n_k / (nbar dOmega dzeta).
    """
    var = phonon_noise_variance(spec, dzeta, nbar, ordering)
    sd = np.sqrt(0.5 * var)
    z = rng.standard_normal(shape + (spec.K, 2))
    beta = sd * (z[..., 0] + 1j * z[..., 1])
    if ordering == "plusp":
        return PhononBank(beta=beta, beta_plus=np.conj(beta))
    return PhononBank(beta=beta)


def _filon_weights(theta: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights a, b with int_0^h e^{-i Omega q} x(h-q) dq = a x_0 + b x_1 for linear x."""
    a = np.empty(theta.shape, complex)
    b = np.empty(theta.shape, complex)
    small = np.abs(theta) < 0.2
    t = theta[small]
    # power series of int_0^1 s e^{-i t s} ds and int_0^1 (1-s) e^{-i t s} ds
    sa = np.zeros(t.shape, complex)
    sb = np.zeros(t.shape, complex)
    term = np.ones(t.shape, complex)
    for n in range(12):
        if n:
            term = term * (-1j * t) / n
        sa += term / (n + 2)
        sb += term / ((n + 1) * (n + 2))
    a[small] = h * sa
    b[small] = h * sb
    t = theta[~small]
    e = np.exp(-1j * t)
    e0 = (1.0 - e) / (1j * t)
    aa = 1j * e / t - (1.0 - e) / (t * t)
    a[~small] = h * aa
    b[~small] = h * (e0 - aa)
    return a, b


class RamanKernel:
    """Precomputed causal response of the phonon bank on a grid.

    For Wigner the intensity drive is real and the potential is the real
    convolution ``H * x``.  For +P the complex kernel ``P`` is applied to x
    and conj(x_plus) separately.
    """

    def __init__(self, spec: RamanSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        M, h = grid.M, grid.dtau
        theta = spec.omega_k * h
        a, b = _filon_weights(theta, h)
        m = np.arange(M)
        ph = np.exp(-1j * np.outer(m, theta))  # (M, K): e^{-i theta m}
        ph_prev = np.empty_like(ph)
        ph_prev[1:] = ph[:-1]
        ph_prev[0] = 0.0
        Kmat = ph_prev * a + ph * b  # K_m for m >= 1; K_0 = b
        Kmat[0] = b
        coef = -1j * spec.r_k**2 * spec.delta_omega
        self.P = Kmat @ coef  # complex kernel, potential = P*x + conj(P*conj(x+))
        self.edge = -(ph @ (coef * b))  # correction multiplying x_0
        self.H = 2.0 * self.P.real
        self.H_edge = 2.0 * self.edge.real
        n2 = 2 * M
        self._n2 = n2
        self._P_hat = np.fft.fft(self.P, n2)
        self._H_hat = np.fft.rfft(self.H, n2)
        # bank propagation: sum_k psi_k e^{-i theta_k j}, theta_k = 2 pi k / M
        self._bank_index = np.arange(1, spec.K + 1)

    def bank_term(self, bank_beta: np.ndarray, bank_beta_plus: np.ndarray | None = None) -> np.ndarray:
        """Free evolution of the initial phonon amplitudes, summed into I."""
        M = self.grid.M
        dw = self.spec.delta_omega
        arr = np.zeros(bank_beta.shape[:-1] + (M,), complex)
        arr[..., self._bank_index] = bank_beta
        free = sfft.fft(arr, axis=-1)
        if bank_beta_plus is None:
            return 2.0 * dw * free.real
        arrp = np.zeros_like(arr)
        arrp[..., self._bank_index] = np.conj(bank_beta_plus)
        freep = sfft.fft(arrp, axis=-1)
        return dw * (free + np.conj(freep))

    def potential_real(self, x: np.ndarray, bank_beta: np.ndarray | None = None) -> np.ndarray:
        """Potential driven by a real intensity x (Wigner).

        The free evolution of ``bank_beta`` is folded into the same inverse
        transform: exp(-2 pi i k j / M) is bin 2k of the length-2M grid.
        """
        M = self.grid.M
        y = sfft.rfft(x, self._n2, axis=-1)
        y *= self._H_hat
        if bank_beta is not None:
            y[..., 2 * self._bank_index] += (2.0 * M * self.spec.delta_omega) * np.conj(bank_beta)
        conv = sfft.irfft(y, self._n2, axis=-1)[..., :M]
        conv += self.H_edge * x[..., :1]
        return conv

    def potential_complex(self, x: np.ndarray, x_plus: np.ndarray) -> np.ndarray:
        """Potential for independent drives x and x_plus (+P), no bank."""
        M = self.grid.M
        cx = sfft.ifft(sfft.fft(x, self._n2, axis=-1) * self._P_hat, axis=-1)[..., :M]
        cxp = sfft.ifft(sfft.fft(np.conj(x_plus), self._n2, axis=-1) * self._P_hat, axis=-1)[..., :M]
        cx = cx + self.edge * x[..., :1]
        cxp = cxp + self.edge * np.conj(x_plus[..., :1])
        return cx + np.conj(cxp)


def raman_potential(bank: PhononBank | None, intensity: np.ndarray, spec: RamanSpec, grid: Grid,
                    vacuum_subtraction: float = 0.0, intensity_plus: np.ndarray | None = None) -> np.ndarray:
    """Integrate the phonon modes one by one across the window and return I(tau).

    Direct mode-by-mode route (O(M K)); :class:`RamanKernel` is the fast
    equivalent used by the steppers.  For +P pass ``intensity_plus`` (the
    drive of the conjugate-partner bank) and a bank with ``beta_plus``.
    """
    x = np.asarray(intensity) - vacuum_subtraction
    if x.shape[-1] != grid.M:
        raise ValueError(f"intensity length {x.shape[-1]} != grid size {grid.M}")
    xp = np.conj(x) if intensity_plus is None else np.asarray(intensity_plus) - vacuum_subtraction
    if xp.shape != x.shape:
        raise ValueError("intensity_plus must match intensity")
    h = grid.dtau
    theta = spec.omega_k * h
    a, b = _filon_weights(theta, h)
    rot = np.exp(-1j * theta)
    K = spec.K
    if bank is None:
        psi = np.zeros(K, complex)
        psip = np.zeros(K, complex)
    else:
        psi = np.array(bank.beta, complex)
        psip = np.conj(psi) if bank.beta_plus is None else np.array(bank.beta_plus, complex)
    r2 = spec.r_k**2
    out = np.empty(grid.M, complex)
    out[0] = np.sum(psi + psip)
    for j in range(grid.M - 1):
        psi = rot * psi - 1j * r2 * (a * x[j] + b * x[j + 1])
        # conjugate equation for the partner: d psi+/dtau = +i Omega psi+ + i r^2 x+
        psip = np.conj(rot) * psip + 1j * r2 * (np.conj(a) * xp[j] + np.conj(b) * xp[j + 1])
        out[j + 1] = np.sum(psi + psip)
    out *= spec.delta_omega
    if intensity_plus is None and np.isrealobj(intensity):
        return out.real
    return out
