"""Trajectory ensembles, energy and length sweeps.

Trajectories are split into fixed-size blocks.  A block is the unit of
work sent to a worker; its random numbers come from per-trajectory
streams, and block results are concatenated in trajectory order, so the
output does not depend on the number of workers.
"""

from __future__ import annotations

import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .corrections import LossSpec, apply_gawbs, apply_loss, gawbs_variance, lossy
from .grid import Grid, make_grid, to_spectrum
from .params import FiberSpec, PulseSpec, ScaledParams, derive_scaled
from .plusp import PlusPNoise, init_plusp, propagate_plusp
from .raman import RamanModel, build_raman_spec, default_raman_model, load_raman_model
from .stokes import EllipseStats, StokesSample, difference_ellipse_stats, ellipse_stats, stokes_split
from .wigner import (Propagator, StepConfig, WignerNoise, classical_propagate, init_wigner,
                     propagate_wigner, sech_pulse)

METHODS = ("wigner", "plusp", "plusp_diff")
INVALID_LIMIT = {"wigner": 1e-3, "plusp": 1e-2, "plusp_diff": 1e-2}
THREADS_ENV = "FIBERSQUEEZE_THREADS"


class NumericalFailure(RuntimeError):
    """Too many diverged trajectories, or an unusable grid."""


@dataclass(frozen=True)
class RunConfig:
    fiber: FiberSpec
    pulse: PulseSpec
    method: str = "wigner"
    n_traj: int = 1000
    master_seed: int = 20070601
    M: int = 512
    Tw: float = 20.0
    auto_window: bool = True
    window_tol: float = 1e-3
    delta_zeta: float = 0.05
    n_substeps: int = 1
    raman_enabled: bool = True
    tod_enabled: bool = True
    absorber_enabled: bool = True
    include_attenuation: bool = True
    raman_model: str | None = None  # path; None means the built-in silica table
    loss_T: float = 1.0
    gawbs_c: float = 0.0
    threads: int | None = None
    block_size: int = 250
    n_batches: int = 10
    swap_polarisations: bool = False
    progress: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.n_traj < 2:
            raise ValueError("n_traj must be >= 2")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.gawbs_c < 0:
            raise ValueError("gawbs_c must be >= 0")
        LossSpec(self.loss_T)

    def with_energy(self, total_energy_pj: float) -> "RunConfig":
        return replace(self, pulse=self.pulse.with_energy(total_energy_pj))

    def with_length(self, length_m: float) -> "RunConfig":
        return replace(self, fiber=self.fiber.with_length(length_m))


@dataclass
class PointResult:
    energy_pj: float
    length_m: float
    zeta: float
    raw: EllipseStats  # lossless, no phase noise
    ellipse: EllipseStats  # after phase noise and loss
    n_invalid: int
    grid_M: int
    grid_Tw: float
    runtime_s: float
    mean_field: np.ndarray | None = None

    @property
    def uncertainty_product(self) -> float:
        return self.raw.uncertainty_product()

    def row(self) -> dict:
        e, r = self.ellipse, self.raw
        return {
            "energy_pJ": self.energy_pj,
            "length_m": self.length_m,
            "zeta": self.zeta,
            "theta_deg": e.theta_deg,
            "sq_dB": e.sq_dB,
            "anti_dB": e.anti_dB,
            "se_sq": e.se_sq_dB,
            "se_anti": e.se_anti_dB,
            "se_theta_deg": math.degrees(e.se_theta),
            "raw_sq_dB": r.sq_dB,
            "raw_anti_dB": r.anti_dB,
            "raw_theta_deg": r.theta_deg,
            "uncertainty_product": r.uncertainty_product(),
            "se_uncertainty_product": r.se_uprod,
            "n_traj": r.n_traj,
            "n_invalid": self.n_invalid,
        }

    def angle_curve(self, thetas, cfg: RunConfig) -> np.ndarray:
        """(theta, noise dB vs shot) rows with the configured corrections applied."""
        thetas = np.asarray(thetas, float)
        r = self.raw
        a, b = r.lam_min / r.shot, r.lam_max / r.shot
        v = gawbs_variance(thetas, a, b, r.theta_sq, cfg.gawbs_c, self.energy_pj)
        v = lossy(v, cfg.loss_T)
        return np.column_stack([thetas, 10.0 * np.log10(v)])


# ---------------------------------------------------------------- setup


@lru_cache(maxsize=8)
def _raman_model(path: str | None) -> RamanModel:
    return default_raman_model() if path is None else load_raman_model(path)


def scaled_for(cfg: RunConfig) -> ScaledParams:
    return derive_scaled(cfg.fiber, cfg.pulse, include_attenuation=cfg.include_attenuation)


def step_config(cfg: RunConfig) -> StepConfig:
    return StepConfig(delta_zeta=cfg.delta_zeta, nonlinear_substeps=cfg.n_substeps,
                      absorber_enabled=cfg.absorber_enabled, tod_enabled=cfg.tod_enabled,
                      raman_enabled=cfg.raman_enabled)


def build_propagator(cfg: RunConfig, scaled: ScaledParams, grid: Grid) -> Propagator:
    spec = None
    if cfg.raman_enabled and scaled.f > 0:
        spec = build_raman_spec(_raman_model(cfg.raman_model), grid, scaled.f, scaled.temperature_k, scaled.t0_fs)
    return Propagator(scaled, grid, step_config(cfg), spec)


def _grid(cfg: RunConfig, M: int, Tw: float, t0_fs: float) -> Grid:
    cutoff = None
    if cfg.raman_enabled:
        cutoff = 2.0 * math.pi * _raman_model(cfg.raman_model).cutoff_thz * 1e-3 * t0_fs
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make_grid(M, Tw, cutoff)


def _classical_track(cfg: RunConfig, scaled: ScaledParams, grid: Grid, zeta_end: float, n: int = 8):
    prop = build_propagator(cfg, scaled, grid)
    f0 = sech_pulse(grid, scaled.soliton_number)
    return f0, classical_propagate(prop, f0, list(np.linspace(zeta_end / n, zeta_end, n)))


def absorbed_fraction(cfg: RunConfig, scaled: ScaledParams, grid: Grid, zeta_end: float, track=None) -> float:
    """Energy fraction of the classical pulse removed by the edge absorber."""
    f0, fs = _classical_track(cfg, scaled, grid, zeta_end) if track is None else track
    e0 = np.sum(np.abs(f0) ** 2)
    e1 = np.sum(np.abs(fs[-1]) ** 2) * math.exp(2.0 * scaled.loss_per_zeta * zeta_end)
    return float(max(0.0, 1.0 - e1 / e0))


def spectral_edge_fraction(grid: Grid, fields, omega_max: float) -> float:
    """Largest energy fraction at |Omega| > omega_max over the given fields."""
    w = np.abs(grid.omega_values)
    out = 0.0
    for f in fields:
        p = np.abs(to_spectrum(grid, f)) ** 2
        out = max(out, float(np.sum(p[w > omega_max]) / np.sum(p)))
    return out


def choose_grid(cfg: RunConfig, scaled: ScaledParams, zeta_end: float, max_doublings: int = 3,
                spectral_tol: float = 1e-7) -> Grid:
    """Grid from the config; with ``auto_window`` the window (and M, keeping
    the step) is doubled until the classical pulse stays clear of the
    absorber over the whole run.

    Once the window has grown, M is halved once more if the classical
    spectrum stays inside half of the coarser grid's band throughout and
    the Raman band still fits; the step never exceeds twice the
    configured one.
    """
    M, Tw = cfg.M, cfg.Tw
    grid = _grid(cfg, M, Tw, scaled.t0_fs)
    if not (cfg.auto_window and cfg.absorber_enabled) or zeta_end <= 0:
        return grid
    track = _classical_track(cfg, scaled, grid, zeta_end)
    k = 0
    while absorbed_fraction(cfg, scaled, grid, zeta_end, track) >= cfg.window_tol:
        if k == max_doublings:
            raise NumericalFailure(f"pulse reaches the absorber even with Tw={Tw}")
        M, Tw, k = 2 * M, 2.0 * Tw, k + 1
        grid = _grid(cfg, M, Tw, scaled.t0_fs)
        track = _classical_track(cfg, scaled, grid, zeta_end)
    if k == 0:
        return grid
    nyq = 0.5 * math.pi / grid.dtau
    cutoff = 2.0 * math.pi * _raman_model(cfg.raman_model).cutoff_thz * 1e-3 * scaled.t0_fs
    if cfg.raman_enabled and not nyq > cutoff:
        return grid
    if spectral_edge_fraction(grid, track[1], 0.5 * nyq) < spectral_tol:
        return _grid(cfg, M // 2, Tw, scaled.t0_fs)
    return grid


def n_workers(cfg: RunConfig) -> int:
    if cfg.threads is not None:
        return max(1, int(cfg.threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


# ---------------------------------------------------------------- blocks


@dataclass
class _Job:
    cfg: RunConfig
    scaled: ScaledParams
    M: int
    Tw: float
    start: int
    stop: int
    zetas: tuple


@dataclass
class _BlockOut:
    start: int
    # per checkpoint: dict ordering-key -> (delta, offset)
    samples: list[dict] = field(default_factory=list)
    invalid: list[np.ndarray] = field(default_factory=list)
    means: list[np.ndarray] = field(default_factory=list)


def _rows(cfg: RunConfig, start: int, stop: int) -> list[tuple[int, int]]:
    px, py = (1, 0) if cfg.swap_polarisations else (0, 1)
    return [(t, px) for t in range(start, stop)] + [(t, py) for t in range(start, stop)]


def _run_block(job: _Job) -> _BlockOut:
    cfg, sc = job.cfg, job.scaled
    grid = _grid(cfg, job.M, job.Tw, sc.t0_fs)
    prop = build_propagator(cfg, sc, grid)
    B = job.stop - job.start
    rows = _rows(cfg, job.start, job.stop)
    out = _BlockOut(job.start)

    def split_w(st):
        fl = st.fluctuation
        return stokes_split(st.mean_field, fl[:B], fl[B:], grid.dtau), st.invalid[:B] | st.invalid[B:]

    def split_p(st):
        w, wp = st.w, st.w_plus
        return (stokes_split(st.mean_field, w[:B], w[B:], grid.dtau, wp[:B], wp[B:]),
                st.invalid[:B] | st.invalid[B:])

    if cfg.method == "wigner":
        noise = WignerNoise(cfg.master_seed, rows)
        snaps = propagate_wigner(init_wigner(sc, grid, noise), prop, noise, job.zetas)
        for s in snaps:
            smp, bad = split_w(s)
            out.samples.append({"w": (smp.delta, smp.offset)})
            out.invalid.append(bad)
            out.means.append(s.mean_field)
        return out

    pnoise = PlusPNoise(cfg.master_seed, rows)
    st = init_plusp(sc, grid, len(rows))
    if cfg.method == "plusp":
        snaps = propagate_plusp([st], [False], prop, pnoise, job.zetas)
        for (s,) in snaps:
            smp, bad = split_p(s)
            out.samples.append({"p": (smp.delta, smp.offset)})
            out.invalid.append(bad)
            out.means.append(s.mean_field)
        return out

    # difference estimator: P and PL share every noise draw; the linearised
    # Wigner run shares the thermal phonon stream with them
    snaps = propagate_plusp([st, st.copy()], [False, True], prop, pnoise, job.zetas)
    wn = WignerNoise(cfg.master_seed, rows, split_bank=True)
    wsnaps = propagate_wigner(init_wigner(sc, grid, wn), prop, wn, job.zetas, linearized=True)
    for (p, pl), wl in zip(snaps, wsnaps):
        sp, bp = split_p(p)
        spl, bpl = split_p(pl)
        sw, bw = split_w(wl)
        out.samples.append({"p": (sp.delta, sp.offset), "pl": (spl.delta, spl.offset),
                            "wl": (sw.delta, sw.offset)})
        out.invalid.append(bp | bpl | bw)
        out.means.append(p.mean_field)
    return out


def _blocks(n: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _execute(jobs: list[_Job], workers: int, progress: bool) -> list[_BlockOut]:
    t0 = time.time()
    results: list[_BlockOut] = []

    def note(i):
        if progress:
            print(f"[fibersqueeze] block {i + 1}/{len(jobs)} done ({time.time() - t0:.1f} s)",
                  file=sys.stderr, flush=True)

    if workers <= 1 or len(jobs) <= 1:
        for i, j in enumerate(jobs):
            results.append(_run_block(j))
            note(i)
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for i, r in enumerate(ex.map(_run_block, jobs)):
                results.append(r)
                note(i)
    results.sort(key=lambda r: r.start)
    return results


# ---------------------------------------------------------------- aggregation


def _ellipse(cfg: RunConfig, parts: dict[str, StokesSample], nbar: float, M: int) -> EllipseStats:
    if cfg.method == "wigner":
        return ellipse_stats(parts["w"], "wigner", nbar, M, cfg.n_batches)
    if cfg.method == "plusp":
        return ellipse_stats(parts["p"], "plusp", nbar, M, cfg.n_batches)
    return difference_ellipse_stats(parts["p"], parts["pl"], parts["wl"], nbar, M, cfg.n_batches)


def _aggregate(cfg: RunConfig, blocks: list[_BlockOut], k: int, nbar: float, M: int):
    invalid = np.concatenate([b.invalid[k] for b in blocks])
    keep = ~invalid
    n_bad = int(invalid.sum())
    if n_bad > INVALID_LIMIT[cfg.method] * cfg.n_traj:
        raise NumericalFailure(f"{n_bad} of {cfg.n_traj} trajectories diverged "
                               f"(limit {INVALID_LIMIT[cfg.method]:.1%} for {cfg.method})")
    parts = {}
    for key in blocks[0].samples[k]:
        delta = np.concatenate([b.samples[k][key][0] for b in blocks])[keep]
        parts[key] = StokesSample(delta, blocks[0].samples[k][key][1])
    return _ellipse(cfg, parts, nbar, M), n_bad


def _corrected(cfg: RunConfig, raw: EllipseStats, energy_pj: float) -> EllipseStats:
    e = raw
    if cfg.gawbs_c > 0:
        e = apply_gawbs(e, cfg.gawbs_c, energy_pj)
    if cfg.loss_T < 1.0:
        e = apply_loss(e, LossSpec(cfg.loss_T))
    return e


def run_at(cfg: RunConfig, zetas, *, keep_mean: bool = True) -> list[PointResult]:
    """Propagate one configuration and report ellipses at each zeta checkpoint."""
    zetas = [float(z) for z in zetas]
    if not zetas:
        raise ValueError("no checkpoints")
    if any(b <= a for a, b in zip(zetas, zetas[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    t_start = time.time()
    sc = scaled_for(cfg)
    grid = choose_grid(cfg, sc, zetas[-1])
    jobs = [_Job(cfg, sc, grid.M, grid.Tw, a, b, tuple(zetas)) for a, b in _blocks(cfg.n_traj, cfg.block_size)]
    blocks = _execute(jobs, n_workers(cfg), cfg.progress)
    runtime = time.time() - t_start
    out = []
    E = cfg.pulse.total_energy_pj
    for k, z in enumerate(zetas):
        raw, n_bad = _aggregate(cfg, blocks, k, sc.nbar, grid.M)
        out.append(PointResult(
            energy_pj=E, length_m=z * sc.z0_m, zeta=z, raw=raw, ellipse=_corrected(cfg, raw, E),
            n_invalid=n_bad, grid_M=grid.M, grid_Tw=grid.Tw, runtime_s=runtime,
            mean_field=blocks[0].means[k].copy() if keep_mean else None,
        ))
    return out


def run_point(cfg: RunConfig) -> PointResult:
    """Ellipse at the fibre output for the configured energy and length."""
    sc = scaled_for(cfg)
    return run_at(cfg, [sc.zeta_end])[-1]


def sweep_energy(cfg: RunConfig, energies_pj) -> list[PointResult]:
    energies = [float(e) for e in energies_pj]
    if not energies:
        raise ValueError("empty energy list")
    if any(b <= a for a, b in zip(energies, energies[1:])):
        raise ValueError("energies must be strictly increasing")
    if energies[0] <= 0:
        raise ValueError("energies must be positive")
    out = []
    for i, E in enumerate(energies):
        if cfg.progress:
            print(f"[fibersqueeze] energy {E:g} pJ ({i + 1}/{len(energies)})", file=sys.stderr, flush=True)
        out.append(run_point(cfg.with_energy(E)))
    return out


def sweep_length(cfg: RunConfig, lengths_m) -> list[PointResult]:
    """One propagation with a checkpoint per length (the fibre length in
    ``cfg`` is ignored)."""
    lengths = [float(L) for L in lengths_m]
    if not lengths:
        raise ValueError("empty length list")
    if lengths[0] < 0 or any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be non-negative and strictly increasing")
    cfg = cfg.with_length(max(lengths[-1], 1e-9))
    sc = scaled_for(cfg)
    zetas = [L / sc.z0_m for L in lengths]
    res = run_at(cfg, zetas)
    for r, L in zip(res, lengths):
        r.length_m = L
    return res


# ---------------------------------------------------------------- spectra


def pulse_spectrum(cfg: RunConfig, zeta: float | None = None, grid: Grid | None = None) -> dict:
    """Classical output pulse in time and frequency (ascending Omega)."""
    sc = scaled_for(cfg)
    zeta = sc.zeta_end if zeta is None else float(zeta)
    if grid is None:
        grid = choose_grid(cfg, sc, zeta)
    prop = build_propagator(cfg, sc, grid)
    f0 = sech_pulse(grid, sc.soliton_number)
    f1 = classical_propagate(prop, f0, [zeta])[-1]
    spec0 = to_spectrum(grid, f0)
    spec1 = to_spectrum(grid, f1)
    omega = grid.omega_values
    nu_thz = omega / (2.0 * math.pi * sc.t0_fs) * 1e3
    return {
        "zeta": zeta,
        "grid": grid,
        "tau": grid.tau,
        "time_fs": grid.tau * sc.t0_fs,
        "intensity_in": np.abs(f0) ** 2,
        "intensity_out": np.abs(f1) ** 2,
        "omega": omega,
        "offset_THz": nu_thz,
        "spectrum_in": np.abs(spec0) ** 2,
        "spectrum_out": np.abs(spec1) ** 2,
    }


def apply_corrections(points: list[PointResult], cfg: RunConfig) -> list[PointResult]:
    """Recompute the corrected ellipses, e.g. after fitting the phase-noise constant."""
    for p in points:
        p.ellipse = _corrected(cfg, p.raw, p.energy_pj)
    return points


def sim_table(points: list[PointResult]) -> np.ndarray:
    """(E, a, b, theta_K) rows of the raw ellipses, as used by the phase-noise fit."""
    return np.array([[p.energy_pj, p.raw.rel_min, p.raw.rel_max, p.raw.theta_sq] for p in points], float)
