"""Detection loss and the effective GAWBS phase-noise model.

Relative variances are in units of shot noise.  A simulated Kerr ellipse
is described by its extremal relative variances a (along theta_K, the
squeezed axis) and b (anti-squeezed axis).  Excess phase noise adds
c*E*sin^2(theta), stretching the ellipse along S2; detection loss then
mixes in vacuum.  Order: Kerr ellipse -> phase noise -> loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .stokes import EllipseStats


@dataclass(frozen=True)
class LossSpec:
    transmission_T: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.transmission_T <= 1.0:
            raise ValueError(f"transmission must lie in (0, 1], got {self.transmission_T}")


def lossy(rel_var, T: float):
    """Beam-splitter loss on a relative variance: V -> T V + (1 - T)."""
    return T * np.asarray(rel_var) + (1.0 - T)


def apply_loss(ellipse: EllipseStats, loss: LossSpec) -> EllipseStats:
    """Mix vacuum into an ellipse; the angle is unchanged.

    Standard errors are propagated through the (monotone) map at first order.
    """
    T = loss.transmission_T
    shot = ellipse.shot
    rmin, rmax = ellipse.lam_min / shot, ellipse.lam_max / shot
    nmin, nmax = lossy(rmin, T), lossy(rmax, T)
    # d(dB_out)/d(dB_in) = T r_in / r_out
    kmin = T * rmin / nmin
    kmax = T * rmax / nmax
    v1 = lossy(ellipse.V1 / shot, T) * shot
    v2 = lossy(ellipse.V2 / shot, T) * shot
    return replace(
        ellipse,
        V1=float(v1), V2=float(v2), C12=ellipse.C12 * T,
        lam_min=float(nmin * shot), lam_max=float(nmax * shot),
        sq_dB=10.0 * math.log10(nmin), anti_dB=10.0 * math.log10(nmax),
        se_sq_dB=ellipse.se_sq_dB * kmin, se_anti_dB=ellipse.se_anti_dB * kmax,
    )


def gawbs_variance(theta, a, b, theta_K, c, E):
    """a cos^2(theta - theta_K) + b sin^2(theta - theta_K) + c E sin^2(theta)."""
    d = np.asarray(theta) - theta_K
    return a * np.cos(d) ** 2 + b * np.sin(d) ** 2 + c * E * np.sin(theta) ** 2


@dataclass(frozen=True)
class Extrema:
    theta_min: float
    theta_max: float
    v_min: float
    v_max: float
    isotropic: bool = False


def extremal_angles(a: float, b: float, theta_K: float, cE: float) -> Extrema:
    """Closed-form extrema of the stretched ellipse via harmonic addition.

    V = K + A cos 2theta + B sin 2theta with
    A = (a-b)/2 cos 2theta_K - cE/2, B = (a-b)/2 sin 2theta_K, K = (a+b+cE)/2.
    """
    A = 0.5 * (a - b) * math.cos(2.0 * theta_K) - 0.5 * cE
    B = 0.5 * (a - b) * math.sin(2.0 * theta_K)
    K = 0.5 * (a + b + cE)
    R = math.hypot(A, B)
    if R == 0.0:
        return Extrema(float("nan"), float("nan"), K, K, isotropic=True)
    th = 0.5 * math.atan2(-B, -A)
    if th <= -0.5 * math.pi:
        th += math.pi
    th_max = th + 0.5 * math.pi
    if th_max > 0.5 * math.pi:
        th_max -= math.pi
    return Extrema(th, th_max, K - R, K + R)


def corrected_ellipse(a: float, b: float, theta_K: float, c: float, E: float, T: float = 1.0):
    """(sq_dB, anti_dB, theta_min) after phase noise and then loss T."""
    ex = extremal_angles(a, b, theta_K, c * E)
    vmin, vmax = lossy(ex.v_min, T), lossy(ex.v_max, T)
    th = theta_K if ex.isotropic else ex.theta_min
    return 10.0 * math.log10(vmin), 10.0 * math.log10(vmax), th


def apply_gawbs(ellipse: EllipseStats, c: float, E: float) -> EllipseStats:
    """Stretch a simulated ellipse by c E sin^2(theta) (no loss)."""
    shot = ellipse.shot
    a, b = ellipse.lam_min / shot, ellipse.lam_max / shot
    ex = extremal_angles(a, b, ellipse.theta_sq, c * E)
    th = ellipse.theta_sq if ex.isotropic else ex.theta_min
    cE = c * E
    # covariance of the stretched ellipse in the (S1, S2) frame
    return replace(
        ellipse,
        V2=ellipse.V2 + cE * shot,
        lam_min=ex.v_min * shot, lam_max=ex.v_max * shot, theta_sq=th,
        sq_dB=10.0 * math.log10(ex.v_min), anti_dB=10.0 * math.log10(ex.v_max),
    )


@dataclass
class GawbsFit:
    c: float
    residual_sum: float  # deg^2
    energies_used: list[float] = field(default_factory=list)
    predicted_deg: list[float] = field(default_factory=list)
    observed_deg: list[float] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "c": self.c,
            "residual": self.residual_sum,
            "points": [
                {"energy_pJ": e, "predicted_deg": p, "observed_deg": o}
                for e, p, o in zip(self.energies_used, self.predicted_deg, self.observed_deg)
            ],
        }


def interpolate_sim(sim, energies) -> np.ndarray:
    """Linear interpolation of simulated (E, a, b, theta_K) rows at the given energies."""
    sim = np.asarray(sim, float)
    order = np.argsort(sim[:, 0])
    sim = sim[order]
    energies = np.asarray(energies, float)
    if energies.min() < sim[0, 0] or energies.max() > sim[-1, 0]:
        raise ValueError("measured energies fall outside the simulated energy range")
    cols = [np.interp(energies, sim[:, 0], sim[:, j]) for j in (1, 2, 3)]
    return np.column_stack([energies] + cols)


def _golden(fun, lo: float, hi: float, tol: float) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > tol * (1.0 + abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def fit_c(sim, measured, *, min_points: int = 3, c_hi: float | None = None, tol: float = 1e-10,
          max_expand: int = 60) -> GawbsFit:
    """Least-squares fit of the phase-noise coefficient c >= 0 to squeezing angles.

    ``sim`` rows are (E_pJ, a, b, theta_K_rad); ``measured`` rows are
    (E_pJ, theta_obs_deg).  Simulated values are linearly interpolated to
    the measured energies.  The bracket [0, c_hi] is expanded until the
    objective rises at its upper end, then golden-section search runs.
    """
    measured = np.atleast_2d(np.asarray(measured, float))
    if measured.shape[0] < min_points:
        raise ValueError(f"need at least {min_points} measured energies, got {measured.shape[0]}")
    rows = interpolate_sim(sim, measured[:, 0])
    obs = measured[:, 1]

    def predict(c):
        return np.array([math.degrees(corrected_ellipse(a, b, tk, c, E)[2]) for E, a, b, tk in rows])

    def cost(c):
        return float(np.sum((predict(c) - obs) ** 2))

    if c_hi is None:
        # phase noise comparable to the anti-squeezed variance at the largest energy
        c_hi = max(float(np.max(rows[:, 2] / np.maximum(rows[:, 0], 1e-12))), 1e-12)
    lo, hi = 0.0, c_hi
    for _ in range(max_expand):
        mid = _golden(cost, lo, hi, 1e-3)
        if mid < 0.9 * hi:
            break
        lo, hi = 0.5 * hi, 4.0 * hi
    else:
        raise RuntimeError("fit_c did not converge: objective keeps decreasing as c grows")
    c_best = _golden(cost, 0.0, hi, tol)
    if cost(0.0) <= cost(c_best):
        c_best = 0.0
    pred = predict(c_best)
    return GawbsFit(c=c_best, residual_sum=cost(c_best), energies_used=list(rows[:, 0]),
                    predicted_deg=list(pred), observed_deg=list(obs))
