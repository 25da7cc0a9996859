"""Stokes samples, ordering-corrected covariance ellipse and squeezing in dB.

Samples are stored as deviations from the noise-free (classical) Stokes
values plus that classical offset, which keeps the tiny quantum
fluctuations (relative size ~1/sqrt(nbar)) free of cancellation error.

Variances are in photon-number^2 units: S_i = nbar * s_i.  The dark-plane
operator is S_theta = cos(theta) S1 - sin(theta) S2; the sign makes the
squeezing angle of a positive-n2 Kerr ellipse on a sigma+ beam a small
positive number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class StokesSample:
    """Per-trajectory Stokes integrals: value = offset + delta.

    ``delta`` has shape (n_traj, 4) for (s0, s1, s2, s3); complex under +P.
    """

    delta: np.ndarray
    offset: np.ndarray

    @property
    def s0(self):
        return self.offset[0] + self.delta[:, 0]

    @property
    def s1(self):
        return self.offset[1] + self.delta[:, 1]

    @property
    def s2(self):
        return self.offset[2] + self.delta[:, 2]

    @property
    def s3(self):
        return self.offset[3] + self.delta[:, 3]

    @property
    def n_traj(self) -> int:
        return self.delta.shape[0]

    def subset(self, idx) -> "StokesSample":
        return StokesSample(self.delta[idx], self.offset)

    @staticmethod
    def concat(parts: list["StokesSample"]) -> "StokesSample":
        if not parts:
            raise ValueError("no samples to concatenate")
        return StokesSample(np.concatenate([p.delta for p in parts]), parts[0].offset)


def _n_matrix(ax, bx, ay, by, dtau):
    """n_{sigma sigma'} = sum conj-partner(sigma) * field(sigma') dtau."""
    nxx = np.sum(ax * bx, axis=-1) * dtau
    nyy = np.sum(ay * by, axis=-1) * dtau
    nxy = np.sum(ax * by, axis=-1) * dtau
    nyx = np.sum(ay * bx, axis=-1) * dtau
    return nxx, nyy, nxy, nyx


def _stokes_from_n(nxx, nyy, nxy, nyx):
    return np.stack([nxx + nyy, nxx - nyy, nxy + nyx, 1j * (nyx - nxy)], axis=-1)


def stokes_sample(phi_x, phi_y, dtau: float, phi_x_plus=None, phi_y_plus=None) -> StokesSample:
    """Stokes integrals of field pairs (rows are trajectories).

    Wigner fields use the complex conjugate as partner; +P fields pass
    their independent partners explicitly and give complex samples.
    """
    phi_x = np.atleast_2d(phi_x)
    phi_y = np.atleast_2d(phi_y)
    if phi_x.shape != phi_y.shape:
        raise ValueError("phi_x and phi_y must have equal shapes")
    plusp = phi_x_plus is not None or phi_y_plus is not None
    px = np.conj(phi_x) if phi_x_plus is None else np.atleast_2d(phi_x_plus)
    py = np.conj(phi_y) if phi_y_plus is None else np.atleast_2d(phi_y_plus)
    if px.shape != phi_x.shape or py.shape != phi_y.shape:
        raise ValueError("partner fields must match field shapes")
    s = _stokes_from_n(*_n_matrix(px, phi_x, py, phi_y, dtau))
    if not plusp:
        s = s.real
    return StokesSample(delta=s, offset=np.zeros(4))


def stokes_split(mean: np.ndarray, dx: np.ndarray, dy: np.ndarray, dtau: float,
                 dx_plus: np.ndarray | None = None, dy_plus: np.ndarray | None = None) -> StokesSample:
    """Stokes deviations for phi_x = mean + dx and phi_y = i (mean + dy).

    The partner means are conj(mean) and -i conj(mean).  Without partner
    deviations (Wigner) they are conj(dx), conj(dy).
    """
    plusp = dx_plus is not None
    if not plusp:
        dx_plus = np.conj(dx)
        dy_plus = np.conj(dy)
    mc = np.conj(mean)
    a_cl = float(np.sum(np.abs(mean) ** 2) * dtau)
    # n_xx - ncl = sum(mc dx + mean dxp + dxp dx)
    dnxx = np.sum(mc * dx + mean * dx_plus + dx_plus * dx, axis=-1) * dtau
    dnyy = np.sum(mc * dy + mean * dy_plus + dy_plus * dy, axis=-1) * dtau
    # n_xy = i sum (mc + dxp)(mean + dy) ; n_yx = -i sum (mc + dyp)(mean + dx)
    D = np.sum(mc * dy + dx_plus * mean + dx_plus * dy, axis=-1) * dtau
    Dp = np.sum(mc * dx + dy_plus * mean + dy_plus * dx, axis=-1) * dtau
    delta = np.stack([dnxx + dnyy, dnxx - dnyy, 1j * (D - Dp), D + Dp], axis=-1)
    if not plusp:
        delta = delta.real
    offset = np.array([2.0 * a_cl, 0.0, 0.0, 2.0 * a_cl])
    return StokesSample(delta=delta, offset=offset)


def squeezing_db(variance, shot):
    variance = np.asarray(variance, float)
    shot = np.asarray(shot, float)
    if np.any(shot <= 0):
        raise ValueError("shot-noise level must be positive")
    if np.any(variance < 0):
        raise ValueError("variance must be non-negative")
    if np.any(variance == 0):
        raise ValueError("zero variance gives -inf dB")
    out = 10.0 * np.log10(variance / shot)
    return float(out) if out.ndim == 0 else out


@dataclass
class Moments:
    """Ordering-corrected second moments of (S1, S2) and the shot level."""

    V1: float
    V2: float
    C12: float
    shot: float

    def eig(self) -> tuple[float, float, float]:
        """(lambda_min, lambda_max, theta_min) of the covariance ellipse."""
        d = 0.5 * (self.V1 - self.V2)
        k = 0.5 * (self.V1 + self.V2)
        rad = math.hypot(d, self.C12)
        theta = 0.5 * math.atan2(self.C12, -d)
        if theta <= -0.5 * math.pi:
            theta += math.pi
        return k - rad, k + rad, theta

    def variance(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        return c * c * self.V1 + s * s * self.V2 - 2.0 * s * c * self.C12


@dataclass
class EllipseStats:
    V1: float
    V2: float
    C12: float
    shot: float
    theta_sq: float
    sq_dB: float
    anti_dB: float
    se_sq_dB: float
    se_anti_dB: float
    se_theta: float
    n_traj: int
    lam_min: float = float("nan")
    lam_max: float = float("nan")
    se_uprod: float = float("nan")

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta_sq)

    @property
    def rel_min(self) -> float:
        return self.lam_min / self.shot

    @property
    def rel_max(self) -> float:
        return self.lam_max / self.shot

    def uncertainty_product(self) -> float:
        return self.lam_min * self.lam_max / self.shot**2


def _cov(a: np.ndarray, b: np.ndarray) -> complex:
    n = a.shape[0]
    return complex(np.sum((a - a.mean()) * (b - b.mean())) / (n - 1))


def sample_moments(samples: StokesSample, ordering: str, nbar: float, M: int) -> Moments:
    d = samples.delta
    if d.shape[0] < 2:
        raise ValueError("need at least two trajectories")
    s1, s2 = d[:, 1], d[:, 2]
    n2 = nbar * nbar
    v1 = (n2 * _cov(s1, s1)).real
    v2 = (n2 * _cov(s2, s2)).real
    c12 = (n2 * _cov(s1, s2)).real
    mean_s0 = (samples.offset[0] + d[:, 0].mean()).real
    if ordering == "wigner":
        shot = nbar * mean_s0 - M
        v1 -= 0.5 * M
        v2 -= 0.5 * M
    elif ordering == "plusp":
        shot = nbar * mean_s0
        v1 += shot
        v2 += shot
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    if not shot > 0:
        raise ValueError("non-positive shot-noise level; degenerate input")
    return Moments(v1, v2, c12, shot)


def difference_moments(p: StokesSample, pl: StokesSample, wl: StokesSample, nbar: float, M: int) -> Moments:
    """Moments of the estimator phi_P - phi_PL + phi_WL.

    The linearised physics is taken from the Wigner run (low sampling
    error) and the nonlinear correction from the +P pair, whose shared
    noise makes the difference of their normally ordered moments small:

        V = V_WL + (V_P - V_PL),   V_P = nbar^2 cov_P + nbar <s0_P>.
    """
    mw = sample_moments(wl, "wigner", nbar, M)
    mp = sample_moments(p, "plusp", nbar, M)
    mpl = sample_moments(pl, "plusp", nbar, M)
    return Moments(
        mw.V1 + mp.V1 - mpl.V1,
        mw.V2 + mp.V2 - mpl.V2,
        mw.C12 + mp.C12 - mpl.C12,
        mw.shot + mp.shot - mpl.shot,
    )


def _summary(m: Moments) -> tuple[float, float, float]:
    lmin, lmax, th = m.eig()
    return lmin / m.shot, lmax / m.shot, th


def _db(rel: float) -> float:
    return 10.0 * math.log10(rel) if rel > 0 else float("nan")


def ellipse_from_moments(moment_fn, n_traj: int, n_batches: int = 10) -> EllipseStats:
    """Full-sample ellipse plus delete-one-batch jackknife errors.

    ``moment_fn(index_array)`` returns :class:`Moments` for a subset of
    trajectories.  Batches are contiguous blocks in trajectory order.
    """
    if n_traj < 2:
        raise ValueError("need at least two trajectories")
    full = moment_fn(np.arange(n_traj))
    lmin, lmax, th = full.eig()
    sq, anti = _db(lmin / full.shot), _db(lmax / full.shot)
    G = min(n_batches, n_traj)
    if n_traj < 2 * G:
        raise ValueError(f"need at least {2 * G} trajectories for a {G}-batch jackknife")
    edges = np.linspace(0, n_traj, G + 1).astype(int)
    ests = []
    for g in range(G):
        keep = np.concatenate([np.arange(0, edges[g]), np.arange(edges[g + 1], n_traj)])
        r = _summary(moment_fn(keep))
        ests.append((_db(r[0]), _db(r[1]), r[2], r[0] * r[1]))
    ests = np.array(ests)
    # unwrap angles around the full-sample value (pi-periodic)
    ests[:, 2] = th + (ests[:, 2] - th + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    fac = (G - 1) / G
    se = np.sqrt(fac * np.sum((ests - ests.mean(axis=0)) ** 2, axis=0))
    return EllipseStats(
        V1=full.V1, V2=full.V2, C12=full.C12, shot=full.shot, theta_sq=th,
        sq_dB=sq, anti_dB=anti, se_sq_dB=float(se[0]), se_anti_dB=float(se[1]), se_theta=float(se[2]),
        n_traj=n_traj, lam_min=lmin, lam_max=lmax, se_uprod=float(se[3]),
    )


def ellipse_stats(samples: StokesSample, ordering: str, nbar: float, M: int, n_batches: int = 10) -> EllipseStats:
    return ellipse_from_moments(lambda idx: sample_moments(samples.subset(idx), ordering, nbar, M),
                                samples.n_traj, n_batches)


def difference_ellipse_stats(p: StokesSample, pl: StokesSample, wl: StokesSample, nbar: float, M: int,
                             n_batches: int = 10) -> EllipseStats:
    if not (p.n_traj == pl.n_traj == wl.n_traj):
        raise ValueError("difference estimator needs matched trajectory counts")
    return ellipse_from_moments(
        lambda idx: difference_moments(p.subset(idx), pl.subset(idx), wl.subset(idx), nbar, M),
        p.n_traj, n_batches)


def angle_sweep(samples: StokesSample, ordering: str, nbar: float, M: int, thetas) -> np.ndarray:
    """Rows (theta, noise dB relative to shot) over the given angles (radians)."""
    m = sample_moments(samples, ordering, nbar, M)
    thetas = np.asarray(thetas, float)
    v = m.variance(thetas)
    return np.column_stack([thetas, 10.0 * np.log10(v / m.shot)])
