"""Independent references for the dynamics and moment code.

* :func:`classical_nlse` - noise-free split-step solve written separately
  from the stochastic engines (nonlinear-linear-nonlinear ordering, plain
  numpy FFTs, no absorber).
* :func:`kerr_fock_oracle` - single-mode Kerr evolution of a coherent
  state in a truncated number basis, with exact quadrature variances.
* :func:`theta_scan_min` - brute-force minimum of a quadratic form over an
  angle grid.
* :func:`cw_limit_bridge` - the real Wigner engine on a flat,
  dispersionless pulse, to be compared with the Fock oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson


# ---------------------------------------------------------------- classical NLSE


def classical_nlse(field0: np.ndarray, tau: np.ndarray, zeta_end: float, dzeta: float = 0.0025,
                   b3: float = 0.0, nonlinear: bool = True, dispersion_sign: float = 1.0) -> np.ndarray:
    """Solve d phi/d zeta = (i/2) phi_tautau + i |phi|^2 phi (+ TOD) without noise.

    ``b3`` enters the spectral phase rate as Omega^2/2 + b3 Omega^3/6 with
    the convention phi(tau) = sum phit exp(-i Omega tau).
    """
    phi = np.array(field0, complex)
    M = phi.size
    dt = tau[1] - tau[0]
    w = 2.0 * math.pi * np.fft.fftfreq(M, d=dt)
    n = max(1, int(round(zeta_end / dzeta)))
    h = zeta_end / n
    disp = np.exp(-1j * h * dispersion_sign * (0.5 * w**2 + b3 * w**3 / 6.0))
    for _ in range(n):
        if nonlinear:
            phi = phi * np.exp(0.5j * h * np.abs(phi) ** 2)
        phi = np.fft.fft(np.fft.ifft(phi) * disp)
        if nonlinear:
            phi = phi * np.exp(0.5j * h * np.abs(phi) ** 2)
    return phi


def classical_reference(field0: np.ndarray, tau: np.ndarray, zeta_end: float, dzeta: float = 0.0125,
                        b3: float = 0.0) -> np.ndarray:
    """Step-halving Richardson extrapolation of :func:`classical_nlse` (4th order).

    The default step is a quarter of the engine default.
    """
    a = classical_nlse(field0, tau, zeta_end, dzeta, b3)
    b = classical_nlse(field0, tau, zeta_end, 0.5 * dzeta, b3)
    return (4.0 * b - a) / 3.0


def phase_aligned_error(field: np.ndarray, ref: np.ndarray) -> float:
    """Relative L2 distance after removing the best global phase."""
    a = np.vdot(ref, field)
    a = a / abs(a) if abs(a) > 0 else 1.0
    return float(np.linalg.norm(field - a * ref) / np.linalg.norm(ref))


def sech_soliton(tau: np.ndarray, zeta: float) -> np.ndarray:
    """Fundamental soliton of the scaled equation: sech(tau) exp(i zeta/2)."""
    return np.exp(0.5j * zeta) / np.cosh(tau)


def richardson_order(field0, tau, zeta_end: float, dzetas) -> float:
    """Observed convergence order from three step sizes in ratio 2."""
    d1, d2, d3 = dzetas
    a = classical_nlse(field0, tau, zeta_end, d1)
    b = classical_nlse(field0, tau, zeta_end, d2)
    c = classical_nlse(field0, tau, zeta_end, d3)
    return math.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))


# ---------------------------------------------------------------- Fock oracle


@dataclass(frozen=True)
class FockOracleConfig:
    mean_photons: float
    kerr_phase_mu: float
    steps: int = 1
    width_sigmas: float = 10.0

    def __post_init__(self):
        if not 0 < self.mean_photons <= 1e4:
            raise ValueError("mean_photons must lie in (0, 1e4] for the Fock oracle")

    @property
    def r(self) -> float:
        """Linearised squeezing parameter 2 |mu| nbar steps."""
        return 2.0 * abs(self.kerr_phase_mu) * self.mean_photons * self.steps


@dataclass
class FockResult:
    thetas: np.ndarray
    V: np.ndarray
    V_min: float
    V_max: float
    theta_sq: float


def linearized_kerr_vmin(r: float) -> float:
    return 1.0 + 2.0 * r * r - 2.0 * r * math.sqrt(1.0 + r * r)


def kerr_fock_oracle(cfg: FockOracleConfig, thetas=None) -> FockResult:
    """Coherent state |alpha> (alpha real) evolved by exp(-i mu n^2 steps).

    Quadratures X(theta) = a exp(i(theta - phi_mean)) + h.c. with vacuum
    variance 1, where phi_mean = arg<a>; theta is measured from the
    amplitude quadrature in the same rotational sense as the Stokes
    dark-plane angle.  Extrema come from the closed-form quadratic form.
    """
    nbar = cfg.mean_photons
    w = cfg.width_sigmas * math.sqrt(nbar)
    lo = max(0, int(math.floor(nbar - w)))
    hi = int(math.ceil(nbar + w)) + 2
    tail = poisson.cdf(lo - 1, nbar) + poisson.sf(hi, nbar) if lo > 0 else poisson.sf(hi, nbar)
    if tail > 1e-12:
        raise ValueError(f"Fock truncation too tight: tail population {tail:.2e}")
    n = np.arange(lo, hi + 1)
    logc = -0.5 * nbar + 0.5 * n * math.log(nbar) - 0.5 * gammaln(n + 1.0)
    nf = n.astype(float)
    # phase mod 2pi keeps the exponent small for large n
    ph_n = np.mod(cfg.kerr_phase_mu * cfg.steps * nf * nf, 2.0 * math.pi)
    c = np.exp(logc - 1j * ph_n)
    c = c / np.linalg.norm(c)
    a1 = np.sum(np.conj(c[:-1]) * c[1:] * np.sqrt(n[1:]))
    a2 = np.sum(np.conj(c[:-2]) * c[2:] * np.sqrt(n[1:-1] * n[2:]))
    nn = np.sum(np.abs(c) ** 2 * n)
    ph = np.angle(a1)
    # in the rotated frame b = a exp(-i ph): <b> real
    b1 = a1 * np.exp(-1j * ph)
    b2 = a2 * np.exp(-2j * ph)
    if thetas is None:
        thetas = np.linspace(-0.5 * math.pi, 0.5 * math.pi, 721)
    thetas = np.asarray(thetas, float)
    # X = b e^{i theta} + b^dag e^{-i theta}
    ex = 2.0 * np.real(b1 * np.exp(1j * thetas))
    ex2 = 1.0 + 2.0 * nn + 2.0 * np.real(b2 * np.exp(2j * thetas))
    V = ex2 - ex**2
    # quadratic form V = K + A cos 2t + B sin 2t
    K = 1.0 + 2.0 * nn - 2.0 * abs(b1) ** 2
    A = 2.0 * np.real(b2) - 2.0 * np.real(b1) ** 2 + 2.0 * np.imag(b1) ** 2
    B = -2.0 * np.imag(b2) + 4.0 * np.real(b1) * np.imag(b1)
    R = math.hypot(A, B)
    th = 0.5 * math.atan2(-B, -A)
    if th <= -0.5 * math.pi:
        th += math.pi
    return FockResult(thetas=thetas, V=V, V_min=K - R, V_max=K + R, theta_sq=th)


# ---------------------------------------------------------------- theta scan


def theta_scan_min(V1: float, V2: float, C12: float, step_deg: float = 0.05, sign: float = -1.0):
    """Grid minimum of cos^2 V1 + sin^2 V2 + sign*sin(2t) C12 over (-90, 90] degrees."""
    t = np.deg2rad(np.arange(-90.0 + step_deg, 90.0 + 0.5 * step_deg, step_deg))
    v = np.cos(t) ** 2 * V1 + np.sin(t) ** 2 * V2 + sign * np.sin(2 * t) * C12
    i = int(np.argmin(v))
    return float(t[i]), float(v[i])


def refine_min(fun, t_lo: float, t_hi: float, n: int = 200001) -> tuple[float, float]:
    t = np.linspace(t_lo, t_hi, n)
    v = fun(t)
    i = int(np.argmin(v))
    return float(t[i]), float(v[i])


# ---------------------------------------------------------------- CW bridge


def cw_limit_bridge(r: float, n_traj: int = 10000, seed: int = 7, M: int = 64, Tw: float = 10.0,
                    intensity: float = 1.0, dzeta: float = 0.01, nbar: float = 2.0e8):
    """Run the Wigner engine on a flat pulse with dispersion, Raman and absorber off.

    The nonlinear phase r = zeta |phi|^2 is matched to the Fock oracle's
    2 |mu| nbar steps.  Returns (EllipseStats, FockResult).
    """
    import warnings

    from .grid import make_grid
    from .params import ScaledParams
    from .stokes import ellipse_stats, stokes_split
    from .wigner import Propagator, StepConfig, WignerNoise, init_wigner, propagate_wigner

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid = make_grid(M, Tw)
    zeta = r / intensity
    sc = ScaledParams(t0_fs=100.0, z0_m=1.0, zeta_end=max(zeta, 1e-300), nbar=nbar, soliton_number=1.0,
                      B3=0.0, f=0.0, center_wavelength_nm=1500.0)
    cfg = StepConfig(delta_zeta=dzeta, absorber_enabled=False, tod_enabled=False, raman_enabled=False,
                     dispersion_enabled=False)
    prop = Propagator(sc, grid, cfg, None)
    rows = [(t, p) for p in (0, 1) for t in range(n_traj)]
    noise = WignerNoise(seed, rows)
    mean = np.full(grid.M, math.sqrt(intensity), complex)
    st = init_wigner(sc, grid, noise, mean_field=mean)
    snap = propagate_wigner(st, prop, noise, [zeta])[-1]
    fl = snap.fluctuation
    samples = stokes_split(snap.mean_field, fl[:n_traj], fl[n_traj:], grid.dtau)
    ell = ellipse_stats(samples, "wigner", nbar, grid.M)
    mu = -r / (2.0 * 1.0e4)
    fock = kerr_fock_oracle(FockOracleConfig(mean_photons=1.0e4, kerr_phase_mu=mu, steps=1)) if r > 0 else None
    return ell, fock
