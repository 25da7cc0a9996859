"""Truncated-Wigner propagation with split mean/fluctuation fields.

The field of one polarisation is carried as a shared classical mean
phi_bar (one row) plus a batch of fluctuations dphi (one row per
trajectory).  Each step is Strang split: half dispersion, a full
nonlinear (Kerr + Raman) slice, half dispersion.  Consecutive half steps
are merged.  At fixed zeta the nonlinear slice only rotates the phase
(|phi| is invariant and the Raman potential depends on |phi| alone), so
it is solved exactly rather than by a midpoint rule.

The machinery in :class:`Propagator` (dispersion multipliers, Raman
kernel, absorber) is shared with the +P engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ._kernels import intensity_change, kerr_rotate
from .grid import Grid, dispersion_multiplier, linear_step
from .params import ScaledParams
from .raman import RamanKernel, RamanSpec, phonon_noise_variance
from .rng import ABSORBER, INITIAL, PHONON, PHONON_VAC, StreamSet


@dataclass(frozen=True)
class StepConfig:
    delta_zeta: float = 0.05
    nonlinear_substeps: int = 1
    absorber_enabled: bool = True
    tod_enabled: bool = True
    raman_enabled: bool = True
    dispersion_enabled: bool = True
    # absorber (and uniform loss) applied once every this many steps
    absorber_every: int = 8

    def __post_init__(self):
        if not self.delta_zeta > 0:
            raise ValueError("delta_zeta must be positive")
        if self.nonlinear_substeps < 1:
            raise ValueError("nonlinear_substeps must be >= 1")
        if self.absorber_every < 1:
            raise ValueError("absorber_every must be >= 1")


def absorber_profile(grid: Grid) -> np.ndarray:
    """g(tau) = sin^20(pi tau / (2 Tw)); zero at the centre, one at the edges."""
    return np.sin(0.5 * math.pi * grid.tau / grid.Tw) ** 20


def cexpm1(z: np.ndarray) -> np.ndarray:
    """exp(z) - 1 without cancellation for small complex z."""
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        return 2j * np.sin(0.5 * z) * np.exp(0.5j * z)
    if z.size and np.max(np.abs(z.real) + np.abs(z.imag)) < 1e-2:
        # Horner form of the Taylor series; truncation error < 1e-14 relative
        return z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0)))))
    b = z.imag
    eib_m1 = 2j * np.sin(0.5 * b) * np.exp(0.5j * b)
    return np.expm1(z.real) * (1.0 + eib_m1) + eib_m1


def expim1(theta: np.ndarray) -> np.ndarray:
    """exp(i theta) - 1 for real theta.

    Fluctuation phases are tiny (~1e-5), where a short Taylor series is
    exact to rounding and much cheaper than complex exponentials.
    """
    theta = np.asarray(theta)
    if theta.size and np.max(np.abs(theta)) < 1e-3:
        t2 = theta * theta
        out = np.empty(theta.shape, complex)
        out.real = t2 * (t2 * (1.0 / 24.0) - 0.5)
        out.imag = theta * (1.0 - t2 * (1.0 / 6.0))
        return out
    return 2j * np.sin(0.5 * theta) * np.exp(0.5j * theta)


class Propagator:
    """Precomputed operators for one physical configuration and grid.

    TOD sign: the configured B3 > 0 places the zero-dispersion frequency on
    the blue side (Omega > 0 under the grid convention), so the multiplier
    is evaluated with -B3.  See the decisions ledger.
    """

    def __init__(self, scaled: ScaledParams, grid: Grid, config: StepConfig,
                 raman_spec: RamanSpec | None = None):
        self.scaled = scaled
        self.grid = grid
        self.config = config
        self.nbar = scaled.nbar
        use_raman = config.raman_enabled and raman_spec is not None and raman_spec.f > 0
        self.raman_spec = raman_spec if use_raman else None
        # Raman off: instantaneous nonlinearity of the same total magnitude
        self.f = raman_spec.f if use_raman else 0.0
        self.kernel = RamanKernel(raman_spec, grid) if use_raman else None
        self.b3 = -scaled.B3 if config.tod_enabled else 0.0
        self.sub = 1.0 / (2.0 * scaled.nbar * grid.dtau)
        g = absorber_profile(grid) if config.absorber_enabled else np.zeros(grid.M)
        self.damping = g + scaled.loss_per_zeta
        self.has_damping = bool(np.any(self.damping > 0))
        self._mult: dict[float, np.ndarray] = {}

    def multiplier(self, dz: float) -> np.ndarray:
        key = round(dz, 15)
        m = self._mult.get(key)
        if m is None:
            if self.config.dispersion_enabled:
                m = dispersion_multiplier(self.grid, dz, self.b3, fft_order=True)
            else:
                m = np.ones(self.grid.M, complex)
            self._mult[key] = m
        return m

    def linear(self, arrays: list[np.ndarray], dz: float) -> list[np.ndarray]:
        if not self.config.dispersion_enabled:
            return arrays
        mult = self.multiplier(dz)
        return [linear_step(a, mult) for a in arrays]

    def mean_phase(self, u_bar: np.ndarray, dz: float) -> np.ndarray:
        """Classical nonlinear phase of the mean field over one slice."""
        I_bar = self.kernel.potential_real(u_bar) if self.kernel is not None else 0.0
        return dz * ((1.0 - self.f) * u_bar - I_bar)

    def bank_variance(self, dz: float, ordering: str) -> np.ndarray:
        return phonon_noise_variance(self.raman_spec, dz, self.nbar, ordering)


# ---------------------------------------------------------------- noise


class WignerNoise:
    """Per-trajectory random streams for a block of Wigner rows."""

    def __init__(self, master_seed: int, rows: list[tuple[int, int]], enabled: bool = True,
                 split_bank: bool = False):
        self.enabled = enabled
        # split_bank draws thermal and vacuum phonon parts from separate
        # streams so the thermal part can be shared with a +P run
        self.split_bank = split_bank
        self.initial = StreamSet(master_seed, rows, INITIAL)
        self.phonon = StreamSet(master_seed, rows, PHONON)
        self.phonon_vac = StreamSet(master_seed, rows, PHONON_VAC)
        self.absorber = StreamSet(master_seed, rows, ABSORBER)
        self.n = len(rows)

    def bank(self, prop: Propagator, dz: float) -> np.ndarray:
        """Wigner phonon amplitudes: thermal part plus independent vacuum part."""
        spec = prop.raman_spec
        scale = spec.r_k**2 / (prop.nbar * spec.delta_omega * dz)
        if not self.split_bank:
            z = self.phonon.normal(spec.K, 2)
            sd = np.sqrt(0.5 * scale * (spec.n_k + 0.5))
            return sd * (z[..., 0] + 1j * z[..., 1])
        zt = self.phonon.normal(spec.K, 2)
        zv = self.phonon_vac.normal(spec.K, 2)
        st = np.sqrt(0.5 * scale * spec.n_k)
        sv = np.sqrt(0.25 * scale)
        return st * (zt[..., 0] + 1j * zt[..., 1]) + sv * (zv[..., 0] + 1j * zv[..., 1])

    def complex_normal(self, streams: StreamSet, M: int) -> np.ndarray:
        z = streams.normal(2, M)
        return (z[:, 0] + 1j * z[:, 1]) * math.sqrt(0.5)


# ---------------------------------------------------------------- state


@dataclass
class WignerState:
    mean_field: np.ndarray  # (M,)
    fluctuation: np.ndarray  # (R, M)
    zeta: float = 0.0
    invalid: np.ndarray | None = None  # (R,) bool

    def fields(self) -> np.ndarray:
        return self.mean_field + self.fluctuation


def sech_pulse(grid: Grid, N: float) -> np.ndarray:
    return math.sqrt(N) / np.cosh(grid.tau) + 0j


def init_wigner(scaled: ScaledParams, grid: Grid, noise: WignerNoise | None, n_rows: int | None = None,
                N: float | None = None, mean_field: np.ndarray | None = None) -> WignerState:
    """Coherent sech input; vacuum noise of variance 1/(2 nbar dtau) per cell."""
    N = scaled.soliton_number if N is None else N
    if mean_field is None:
        if not N > 0:
            raise ValueError("soliton number must be positive (zero energy is degenerate)")
        mean_field = sech_pulse(grid, N)
    if noise is None or not noise.enabled:
        R = n_rows if n_rows is not None else (noise.n if noise is not None else 1)
        fl = np.zeros((R, grid.M), complex)
    else:
        sd = math.sqrt(1.0 / (2.0 * scaled.nbar * grid.dtau))
        fl = sd * noise.complex_normal(noise.initial, grid.M)
    return WignerState(mean_field=np.asarray(mean_field, complex).copy(), fluctuation=fl, zeta=0.0,
                       invalid=np.zeros(fl.shape[0], bool))


def wigner_nonlinear(state: WignerState, prop: Propagator, dz: float, noise: WignerNoise | None,
                     linearized: bool = False, bank: np.ndarray | None = None) -> WignerState:
    """Exact Kerr + Raman phase rotation over one slice of length dz."""
    f = prop.f
    nsub = prop.config.nonlinear_substeps
    h = dz / nsub
    mean, fl = state.mean_field, state.fluctuation
    for _ in range(nsub):
        u_bar = mean.real**2 + mean.imag**2
        th_bar = prop.mean_phase(u_bar, h)
        if linearized:
            du = 2.0 * (mean.conj() * fl).real
            drive = du
        else:
            du, drive = intensity_change(mean, fl, prop.sub)
        if prop.kernel is not None:
            b = bank
            if b is None and noise is not None and noise.enabled:
                b = noise.bank(prop, h)
            dI = prop.kernel.potential_real(drive, b)
        else:
            dI = np.zeros_like(du)
        rot = np.exp(1j * th_bar)
        if linearized:
            dth = h * ((1.0 - f) * du - dI)
            fl = rot * (fl + 1j * dth * mean)
        else:
            # phi_new = phi e^{i dth}: fl_new = rot (fl + (e^{i dth} - 1)(mean + fl))
            fl = kerr_rotate(fl, mean, rot, du, dI, h, 1.0 - f)
        mean = mean * rot
    return replace(state, mean_field=mean, fluctuation=fl)


def absorber_apply(state: WignerState, prop: Propagator, dz: float, noise: WignerNoise | None,
                   ordering: str = "wigner") -> WignerState:
    """Exact exponential damping by g(tau) plus fluctuation-dissipation noise.

    The noise variance (1 - exp(-2 g dz)) / (2 nbar dtau) keeps a vacuum
    input at exactly 1/(2 nbar dtau) per cell; +P has no loss noise.
    """
    if not prop.has_damping:
        return state
    gdz = prop.damping * dz
    decay = np.exp(-gdz)
    mean = state.mean_field * decay
    fl = state.fluctuation * decay
    if ordering == "wigner" and noise is not None and noise.enabled:
        var = -np.expm1(-2.0 * gdz) / (2.0 * prop.nbar * prop.grid.dtau)
        fl = fl + np.sqrt(var) * noise.complex_normal(noise.absorber, prop.grid.M)
    return replace(state, mean_field=mean, fluctuation=fl)


def wigner_step(state: WignerState, prop: Propagator, noise: WignerNoise | None, dz: float | None = None) -> WignerState:
    """One Strang step: half linear, nonlinear slice, absorber, half linear."""
    dz = prop.config.delta_zeta if dz is None else dz
    m, fl = prop.linear([state.mean_field, state.fluctuation], 0.5 * dz)
    st = replace(state, mean_field=m, fluctuation=fl)
    st = wigner_nonlinear(st, prop, dz, noise)
    st = absorber_apply(st, prop, dz, noise)
    m, fl = prop.linear([st.mean_field, st.fluctuation], 0.5 * dz)
    return replace(st, mean_field=m, fluctuation=fl, zeta=state.zeta + dz)


# ---------------------------------------------------------------- schedule


def segment_steps(z_from: float, z_to: float, dz: float) -> tuple[int, float]:
    span = z_to - z_from
    if span <= 0:
        return 0, 0.0
    n = max(1, int(math.ceil(span / dz - 1e-9)))
    return n, span / n


def run_schedule(state, prop: Propagator, checkpoints, nonlinear: Callable, damp: Callable,
                 linear: Callable, on_checkpoint: Callable):
    """Drive a split-step integration through sorted checkpoints.

    Half steps of neighbouring Strang steps are merged into full linear
    steps; the absorber is applied every ``absorber_every`` steps with the
    accumulated length and flushed at each checkpoint.
    """
    cps = list(checkpoints)
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be sorted")
    if cps and cps[0] < 0:
        raise ValueError("checkpoints must be non-negative")
    every = prop.config.absorber_every
    z = state.zeta
    pending = 0.0
    count = 0
    for zc in cps:
        n, h = segment_steps(z, zc, prop.config.delta_zeta)
        if n:
            state = linear(state, 0.5 * h)
            for i in range(n):
                state = nonlinear(state, h)
                pending += h
                count += 1
                if count % every == 0:
                    state = damp(state, pending)
                    pending = 0.0
                state = linear(state, h if i < n - 1 else 0.5 * h)
            if pending > 0:
                state = damp(state, pending)
                pending = 0.0
            z = zc
        state.zeta = zc
        on_checkpoint(zc, state)
    return state


def _check_invalid(state: WignerState) -> None:
    bad = ~np.all(np.isfinite(state.fluctuation), axis=-1)
    if np.any(bad):
        state.invalid = state.invalid | bad
        state.fluctuation[bad] = 0.0


def propagate_wigner(state: WignerState, prop: Propagator, noise: WignerNoise | None, checkpoints,
                     linearized: bool = False, bank_source: Callable | None = None,
                     on_checkpoint: Callable | None = None) -> list[WignerState]:
    """Propagate and return snapshots (copies) at each checkpoint.

    ``bank_source(dz)`` overrides the phonon draws (used to share streams
    with the +P difference estimator).
    """
    snaps: list[WignerState] = []

    def lin(st, h):
        m, fl = prop.linear([st.mean_field, st.fluctuation], h)
        st.mean_field, st.fluctuation = m, fl
        return st

    def nl(st, h):
        bank = bank_source(h / prop.config.nonlinear_substeps) if bank_source is not None else None
        st = wigner_nonlinear(st, prop, h, noise, linearized=linearized, bank=bank)
        _check_invalid(st)
        return st

    def damp(st, h):
        return absorber_apply(st, prop, h, noise)

    def cp(zc, st):
        snap = WignerState(st.mean_field.copy(), st.fluctuation.copy(), zc, st.invalid.copy())
        if on_checkpoint is not None:
            on_checkpoint(snap)
        else:
            snaps.append(snap)

    state = WignerState(state.mean_field.copy(), state.fluctuation.copy(), state.zeta,
                        np.zeros(state.fluctuation.shape[0], bool) if state.invalid is None else state.invalid.copy())
    run_schedule(state, prop, checkpoints, nl, damp, lin, cp)
    return snaps


def classical_propagate(prop: Propagator, field0: np.ndarray, checkpoints) -> list[np.ndarray]:
    """Noise-free mean-field propagation (the Wigner engine with no fluctuations)."""
    st = WignerState(np.asarray(field0, complex).copy(), np.zeros((0, prop.grid.M), complex), 0.0,
                     np.zeros(0, bool))
    snaps = propagate_wigner(st, prop, None, checkpoints)
    return [s.mean_field for s in snaps]
