"""Positive-P propagation, its linearisation, and the difference estimator.

Fields are split like the Wigner engine: phi = phi_bar + w and
phi_plus = conj(phi_bar) + w_plus, with the deterministic classical mean
shared by all trajectories.  A coherent input has w = w_plus = 0.

Noise per cell and slice (a^2 = 1/(nbar dtau dzeta)):

* electronic: real Gamma_E with variance (1-f) a^2, entering as
  sqrt(i) Gamma_E phi; an independent Gamma_E+ enters sqrt(-i) Gamma_E+ phi+.
* Raman: Gamma_R = a (xi1 + i xi2)/sqrt2 in the field equation (i Gamma_R phi)
  and Gamma_Rk = -a (xi1 - i xi2)/sqrt2 in the phonon drive, which gives
  <Gamma_R Gamma_R> = <Gamma_Rk Gamma_Rk> = 0 and <Gamma_R Gamma_Rk> = -a^2.
  The sign follows from the Raman coupling term of the Hamiltonian
  (diffusion D_phi,beta = -i r^2 phi / nbar).
* thermal phonon amplitudes with variance r^2 n_k / (nbar dOmega dzeta).

Each slice is advanced with an exponential Euler step; the deterministic
part preserves phi+ phi exactly, as in the Wigner engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ScaledParams
from .rng import KERR, PHONON, RAMAN, StreamSet
from .wigner import Propagator, cexpm1, run_schedule, sech_pulse

SQRT_I = np.exp(0.25j * math.pi)
SQRT_MI = np.exp(-0.25j * math.pi)

DIVERGENCE_FACTOR = 1e6


class PlusPNoise:
    def __init__(self, master_seed: int, rows: list[tuple[int, int]], scale: float = 1.0):
        self.kerr = StreamSet(master_seed, rows, KERR)
        self.raman = StreamSet(master_seed, rows, RAMAN)
        self.phonon = StreamSet(master_seed, rows, PHONON)
        self.scale = scale
        self.n = len(rows)

    def draw(self, prop: Propagator, dz: float) -> "StepNoise":
        M = prop.grid.M
        a2 = 1.0 / (prop.nbar * prop.grid.dtau * dz)
        s = self.scale
        ze = self.kerr.normal(2, M)
        sde = s * math.sqrt((1.0 - prop.f) * a2) * dz
        dWE = sde * ze[:, 0]
        dWEp = sde * ze[:, 1]
        if prop.kernel is None:
            return StepNoise(dWE, dWEp, None, None, None, None, None)
        zr = self.raman.normal(4, M)
        a = s * math.sqrt(0.5 * a2)
        gR = a * (zr[:, 0] + 1j * zr[:, 1])
        gRk = -a * (zr[:, 0] - 1j * zr[:, 1])
        gRp = a * (zr[:, 2] + 1j * zr[:, 3])
        gRkp = -a * (zr[:, 2] - 1j * zr[:, 3])
        spec = prop.raman_spec
        zb = self.phonon.normal(spec.K, 2)
        sd = s * np.sqrt(0.5 * spec.r_k**2 * spec.n_k / (prop.nbar * spec.delta_omega * dz))
        bank = sd * (zb[..., 0] + 1j * zb[..., 1])
        return StepNoise(dWE, dWEp, gR * dz, gRp * dz, gRk, gRkp, bank)


@dataclass
class StepNoise:
    dW_E: np.ndarray
    dW_E_plus: np.ndarray
    dZ_R: np.ndarray | None
    dZ_R_plus: np.ndarray | None
    gamma_k: np.ndarray | None
    gamma_k_plus: np.ndarray | None
    bank: np.ndarray | None


@dataclass
class PlusPState:
    mean_field: np.ndarray  # (M,)
    w: np.ndarray  # (R, M)
    w_plus: np.ndarray  # (R, M)
    zeta: float = 0.0
    invalid: np.ndarray | None = None
    N: float = 1.0

    @property
    def phi(self):
        return self.mean_field + self.w

    @property
    def phi_plus(self):
        return np.conj(self.mean_field) + self.w_plus

    def copy(self) -> "PlusPState":
        return PlusPState(self.mean_field.copy(), self.w.copy(), self.w_plus.copy(), self.zeta,
                          self.invalid.copy(), self.N)


def init_plusp(scaled: ScaledParams, grid, n_rows: int, N: float | None = None,
               mean_field: np.ndarray | None = None) -> PlusPState:
    """Coherent input: phi_plus = conj(phi) exactly, no initial field noise."""
    N = scaled.soliton_number if N is None else N
    if mean_field is None:
        if not N > 0:
            raise ValueError("soliton number must be positive (zero energy is degenerate)")
        mean_field = sech_pulse(grid, N)
    z = np.zeros((n_rows, grid.M), complex)
    return PlusPState(np.asarray(mean_field, complex).copy(), z, z.copy(), 0.0, np.zeros(n_rows, bool), N)


def plusp_nonlinear(state: PlusPState, prop: Propagator, dz: float, nz: StepNoise | None,
                    linearized: bool = False) -> PlusPState:
    f = prop.f
    m, w, wp = state.mean_field, state.w, state.w_plus
    mc = np.conj(m)
    u_bar = m.real**2 + m.imag**2
    th_bar = prop.mean_phase(u_bar, dz)
    if linearized:
        du = mc * w + m * wp
    else:
        du = mc * w + m * wp + wp * w
    if prop.kernel is not None:
        if nz is not None:
            x = du + 1j * nz.gamma_k
            xp = du - 1j * nz.gamma_k_plus
        else:
            x = xp = du
        dI = prop.kernel.potential_complex(x, xp)
        if nz is not None and nz.bank is not None:
            dI = dI + prop.kernel.bank_term(nz.bank, np.conj(nz.bank))
        drift = dz * ((1.0 - f) * du - dI)
    else:
        drift = dz * du
    if nz is not None:
        noise = SQRT_I * nz.dW_E
        noise_p = SQRT_MI * nz.dW_E_plus
        if nz.dZ_R is not None:
            noise = noise + 1j * nz.dZ_R
            noise_p = noise_p - 1j * nz.dZ_R_plus
    else:
        noise = noise_p = 0.0
    rot = np.exp(1j * th_bar)
    if linearized:
        w = rot * (w + m * (1j * drift + noise))
        wp = np.conj(rot) * (wp + mc * (-1j * drift + noise_p))
    else:
        w = rot * (w + cexpm1(1j * drift + noise) * (m + w))
        wp = np.conj(rot) * (wp + cexpm1(-1j * drift + noise_p) * (mc + wp))
    return PlusPState(m * rot, w, wp, state.zeta, state.invalid, state.N)


def plusp_absorb(state: PlusPState, prop: Propagator, dz: float) -> PlusPState:
    """Deterministic damping only; loss adds no +P noise."""
    if not prop.has_damping:
        return state
    decay = np.exp(-prop.damping * dz)
    return PlusPState(state.mean_field * decay, state.w * decay, state.w_plus * decay,
                      state.zeta, state.invalid, state.N)


def _flag_divergent(state: PlusPState) -> None:
    thresh = DIVERGENCE_FACTOR * max(state.N, 1e-300)
    if state.w.shape[0] == 0:
        return
    n = np.abs(state.phi * state.phi_plus)
    bad = ~np.all(np.isfinite(n), axis=-1) | (np.max(np.where(np.isfinite(n), n, np.inf), axis=-1) > thresh)
    if np.any(bad):
        state.invalid = state.invalid | bad
        state.w[bad] = 0.0
        state.w_plus[bad] = 0.0


def plusp_step(state: PlusPState, prop: Propagator, noise: PlusPNoise | None, dz: float | None = None,
               linearized: bool = False) -> PlusPState:
    """One Strang step: half linear, nonlinear slice with noise, damping, half linear."""
    dz = prop.config.delta_zeta if dz is None else dz
    st = _linear(state, prop, 0.5 * dz)
    nz = noise.draw(prop, dz) if noise is not None else None
    st = plusp_nonlinear(st, prop, dz, nz, linearized)
    _flag_divergent(st)
    st = plusp_absorb(st, prop, dz)
    st = _linear(st, prop, 0.5 * dz)
    st.zeta = state.zeta + dz
    return st


def linearized_step(state: PlusPState, prop: Propagator, noise: PlusPNoise | None, dz: float | None = None):
    return plusp_step(state, prop, noise, dz, linearized=True)


def _linear(st: PlusPState, prop: Propagator, h: float) -> PlusPState:
    if not prop.config.dispersion_enabled:
        return st
    m, w = prop.linear([st.mean_field, st.w], h)
    # the partner obeys the conjugate equation: evolve conj(w_plus) with the same operator
    wpc = prop.linear([np.conj(st.w_plus)], h)[0]
    return PlusPState(m, w, np.conj(wpc), st.zeta, st.invalid, st.N)


def propagate_plusp(states: list[PlusPState], linear_flags: list[bool], prop: Propagator,
                    noise: PlusPNoise | None, checkpoints, on_checkpoint=None) -> list[list[PlusPState]]:
    """Advance several +P variants in lockstep, all consuming the same noise draws.

    ``linear_flags[i]`` selects full or linearised dynamics for state i.
    Returns snapshots per checkpoint (list over variants).
    """
    if len(states) != len(linear_flags):
        raise ValueError("one linear flag per state")
    snaps: list[list[PlusPState]] = []
    nsub = prop.config.nonlinear_substeps

    def lin(sts, h):
        return [_linear(s, prop, h) for s in sts]

    def nl(sts, h):
        hs = h / nsub
        for _ in range(nsub):
            nz = noise.draw(prop, hs) if noise is not None else None
            sts = [plusp_nonlinear(s, prop, hs, nz, lf) for s, lf in zip(sts, linear_flags)]
        for s in sts:
            _flag_divergent(s)
        return sts

    def damp(sts, h):
        return [plusp_absorb(s, prop, h) for s in sts]

    def cp(zc, sts):
        out = [s.copy() for s in sts]
        for s in out:
            s.zeta = zc
        if on_checkpoint is not None:
            on_checkpoint(out)
        else:
            snaps.append(out)

    run_schedule(_Group([s.copy() for s in states]), prop, checkpoints, _wrap(nl), _wrap(damp), _wrap(lin), _unwrap(cp))
    return snaps


class _Group(list):
    """List of states carrying a shared zeta for the schedule driver."""

    @property
    def zeta(self):
        return self[0].zeta if self else 0.0

    @zeta.setter
    def zeta(self, z):
        for s in self:
            s.zeta = z


def _wrap(fn):
    return lambda group, h: _Group(fn(list(group), h))


def _unwrap(fn):
    return lambda zc, group: fn(zc, list(group))
