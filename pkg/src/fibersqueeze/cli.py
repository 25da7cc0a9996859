"""Command-line interface.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ResolvedConfig, parse_config
from .corrections import fit_c
from .ensemble import (NumericalFailure, PointResult, apply_corrections, pulse_spectrum, run_point,
                       sim_table, sweep_energy, sweep_length)
from .results_io import (read_csv, read_experiment_csv, sim_rows_from_detail, write_columns, write_csv,
                         write_json)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

ENERGY_COLUMNS = ["energy_pJ", "theta_deg", "sq_dB", "anti_dB", "se_sq", "se_anti"]
LENGTH_COLUMNS = ["length_m", "zeta", "theta_deg", "sq_dB", "anti_dB", "se_sq", "se_anti"]
DETAIL_COLUMNS = ["energy_pJ", "length_m", "zeta", "theta_deg", "sq_dB", "anti_dB", "se_sq", "se_anti",
                  "se_theta_deg", "raw_sq_dB", "raw_anti_dB", "raw_theta_deg", "uncertainty_product",
                  "se_uncertainty_product", "n_traj", "n_invalid"]


def _load(args) -> ResolvedConfig:
    rc = parse_config(args.config)
    run = rc.run
    over = {}
    if getattr(args, "threads", None) is not None:
        over["threads"] = args.threads
    if getattr(args, "n_traj", None) is not None:
        over["n_traj"] = args.n_traj
    if getattr(args, "seed", None) is not None:
        over["master_seed"] = args.seed
    if getattr(args, "progress", False):
        over["progress"] = True
    if over:
        try:
            run = replace(run, **over)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    rc.run = run
    if getattr(args, "out", None):
        rc.output_dir = Path(args.out)
    return rc


def _out(rc: ResolvedConfig, suffix: str) -> Path:
    return rc.output_dir / f"{rc.prefix}_{suffix}"


def _say(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _fit_if_requested(rc: ResolvedConfig, points: list[PointResult], min_points: int = 3):
    if rc.gawbs.mode != "fit":
        return None
    measured = read_experiment_csv(rc.gawbs.data_file)
    fit = fit_c(sim_table(points), measured[:, :2], min_points=min_points)
    rc.run = replace(rc.run, gawbs_c=fit.c)
    apply_corrections(points, rc.run)
    return fit


def _write_points(rc: ResolvedConfig, points: list[PointResult], name: str, columns: list[str], extra=None):
    rows = [p.row() for p in points]
    written = []
    if "csv" in rc.formats:
        written.append(write_csv(_out(rc, f"{name}.csv"), columns, rows))
        written.append(write_csv(_out(rc, f"{name}_detail.csv"), DETAIL_COLUMNS, rows))
    if "json" in rc.formats:
        doc = {"points": rows, "gawbs_c": rc.run.gawbs_c, "loss_T": rc.run.loss_T,
               "method": rc.run.method, "n_traj": rc.run.n_traj, "seed": rc.run.master_seed}
        if extra:
            doc.update(extra)
        written.append(write_json(_out(rc, f"{name}.json"), doc))
    for w in written:
        _say(f"wrote {w}")


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    rc = _load(args)
    p = run_point(rc.run)
    thetas = np.deg2rad(np.linspace(-90.0, 90.0, 721))
    curve = p.angle_curve(thetas, rc.run)
    _write_points(rc, [p], "point", DETAIL_COLUMNS, {"grid": {"M": p.grid_M, "Tw": p.grid_Tw}})
    if "csv" in rc.formats:
        write_columns(_out(rc, "angles.csv"), {"theta_deg": np.rad2deg(curve[:, 0]), "noise_dB": curve[:, 1]})
        m = p.mean_field
        tau = np.linspace(-p.grid_Tw, p.grid_Tw, p.grid_M, endpoint=False)
        write_columns(_out(rc, "field.csv"), {"tau": tau, "re": m.real, "im": m.imag, "intensity": np.abs(m) ** 2})
    e = p.ellipse
    print(f"sq_dB={e.sq_dB:.3f} +- {e.se_sq_dB:.3f}  anti_dB={e.anti_dB:.3f} +- {e.se_anti_dB:.3f}  "
          f"theta_deg={e.theta_deg:.4f}")
    return EXIT_OK


def cmd_sweep_energy(args) -> int:
    rc = _load(args)
    energies = args.energies or rc.energies_pj
    if not energies:
        raise ConfigError("sweep-energy needs sweep/energies_pJ in the config or --energies")
    points = sweep_energy(rc.run, energies)
    fit = _fit_if_requested(rc, points, args.min_points)
    _write_points(rc, points, "energy", ENERGY_COLUMNS, {"gawbs_fit": fit.report() if fit else None})
    for p in points:
        e = p.ellipse
        print(f"{p.energy_pj:9.3f} pJ  sq {e.sq_dB:8.3f}  anti {e.anti_dB:8.3f}  theta {e.theta_deg:8.4f}")
    return EXIT_OK


def cmd_sweep_length(args) -> int:
    rc = _load(args)
    lengths = args.lengths or rc.lengths_m
    if not lengths:
        raise ConfigError("sweep-length needs sweep/lengths_m in the config or --lengths")
    points = sweep_length(rc.run, lengths)
    _write_points(rc, points, "length", LENGTH_COLUMNS)
    for p in points:
        e = p.ellipse
        print(f"{p.length_m:8.3f} m  sq {e.sq_dB:8.3f}  anti {e.anti_dB:8.3f}  theta {e.theta_deg:8.4f}")
    return EXIT_OK


def cmd_fit_gawbs(args) -> int:
    rc = _load(args)
    data_file = args.data or rc.gawbs.data_file
    if data_file is None:
        raise ConfigError("fit-gawbs needs --data or corrections/gawbs/data_file")
    measured = read_experiment_csv(data_file)
    if args.sim:
        header, data = read_csv(args.sim)
        sim = sim_rows_from_detail(header, data)
    else:
        energies = rc.energies_pj
        if not energies:
            raise ConfigError("fit-gawbs without --sim needs sweep/energies_pJ to simulate")
        sim = sim_table(sweep_energy(replace(rc.run, gawbs_c=0.0), energies))
    fit = fit_c(sim, measured[:, :2], min_points=args.min_points)
    path = write_json(_out(rc, "gawbs_fit.json"), fit.report())
    _say(f"wrote {path}")
    print(f"c={fit.c:.10g} residual_deg2={fit.residual_sum:.6g}")
    return EXIT_OK


def cmd_pulse_spectrum(args) -> int:
    rc = _load(args)
    run = rc.run
    if args.energy is not None:
        run = run.with_energy(args.energy)
    on = pulse_spectrum(replace(run, tod_enabled=True), args.zeta)
    off = pulse_spectrum(replace(run, tod_enabled=False), args.zeta, grid=on["grid"])
    p1 = write_columns(_out(rc, "spectrum.csv"), {
        "omega": on["omega"], "offset_THz": on["offset_THz"], "spectrum_in": on["spectrum_in"],
        "spectrum_tod_on": on["spectrum_out"], "spectrum_tod_off": off["spectrum_out"]})
    p2 = write_columns(_out(rc, "pulse.csv"), {
        "tau": on["tau"], "time_fs": on["time_fs"], "intensity_in": on["intensity_in"],
        "intensity_tod_on": on["intensity_out"], "intensity_tod_off": off["intensity_out"]})
    _say(f"wrote {p1}\nwrote {p2}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracles import (FockOracleConfig, classical_nlse, cw_limit_bridge, kerr_fock_oracle,
                          linearized_kerr_vmin, richardson_order, sech_soliton)
    from .grid import make_grid

    out = Path(args.out or "results")
    if args.kind == "fock":
        rows = []
        for r in args.r:
            res = kerr_fock_oracle(FockOracleConfig(args.nbar, -r / (2.0 * args.nbar)))
            rows.append([r, 10 * math.log10(res.V_min), 10 * math.log10(linearized_kerr_vmin(r)) if r > 0 else 0.0,
                         10 * math.log10(res.V_max), math.degrees(res.theta_sq)])
        path = write_csv(out / "oracle_fock.csv", ["r", "sq_dB", "linearized_sq_dB", "anti_dB", "theta_deg"], rows)
    elif args.kind == "bridge":
        rows = []
        for r in args.r:
            ell, fock = cw_limit_bridge(r, n_traj=args.n_traj, seed=args.seed)
            f_sq = 10 * math.log10(fock.V_min) if fock else 0.0
            f_th = math.degrees(fock.theta_sq) if fock else float("nan")
            rows.append([r, ell.sq_dB, ell.se_sq_dB, f_sq, ell.theta_deg, f_th])
            print(f"r={r:g}: engine {ell.sq_dB:.3f} +- {ell.se_sq_dB:.3f} dB, oracle {f_sq:.3f} dB")
        path = write_csv(out / "oracle_bridge.csv",
                         ["r", "engine_sq_dB", "engine_se_dB", "oracle_sq_dB", "engine_theta_deg", "oracle_theta_deg"],
                         rows)
    else:
        grid = make_grid(512, 20.0)
        f0 = 1.0 / np.cosh(grid.tau) + 0j
        rows = []
        for dz in (0.04, 0.02, 0.01, 0.005):
            phi = classical_nlse(f0, grid.tau, args.zeta, dz)
            ref = sech_soliton(grid.tau, args.zeta)
            rows.append([dz, float(np.linalg.norm(phi - ref) / np.linalg.norm(ref))])
        order = richardson_order(np.sqrt(1.5) / np.cosh(grid.tau) + 0j, grid.tau, min(args.zeta, 5.0),
                                 (0.04, 0.02, 0.01))
        print(f"observed Richardson order {order:.3f}")
        path = write_csv(out / "oracle_nlse.csv", ["delta_zeta", "rel_L2_vs_sech"], rows)
    _say(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fibersqueeze", description="Polarisation squeezing of fibre solitons.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides output/dir)")
        p.add_argument("--threads", type=int, help="worker processes (overrides config and FIBERSQUEEZE_THREADS)")
        p.add_argument("--n-traj", type=int, dest="n_traj")
        p.add_argument("--seed", type=int)
        p.add_argument("--progress", action="store_true", help="report progress on stderr")
        return p

    p = with_config("simulate", "one energy and length: ellipse, angle scan, output field")
    p.set_defaults(func=cmd_simulate)
    p = with_config("sweep-energy", "squeezing versus total pulse energy")
    p.add_argument("--energies", type=float, nargs="+")
    p.add_argument("--min-points", type=int, default=3, dest="min_points",
                   help="minimum measured energies for a phase-noise fit")
    p.set_defaults(func=cmd_sweep_energy)
    p = with_config("sweep-length", "squeezing versus fibre length (one propagation)")
    p.add_argument("--lengths", type=float, nargs="+")
    p.set_defaults(func=cmd_sweep_length)
    p = with_config("fit-gawbs", "fit the phase-noise constant c to measured angles")
    p.add_argument("--data", type=Path, help="measured CSV energy_pJ,theta_deg[,sq_dB,anti_dB]")
    p.add_argument("--sim", type=Path, help="detailed sweep CSV; simulated from the config if omitted")
    p.add_argument("--min-points", type=int, default=3, dest="min_points")
    p.set_defaults(func=cmd_fit_gawbs)
    p = with_config("pulse-spectrum", "classical output spectrum with and without TOD")
    p.add_argument("--zeta", type=float, help="propagation distance (default: fibre length)")
    p.add_argument("--energy", type=float, help="total pulse energy in pJ (overrides the config)")
    p.set_defaults(func=cmd_pulse_spectrum)

    p = sub.add_parser("oracle", help="reference solutions and comparison tables")
    p.add_argument("kind", choices=["fock", "bridge", "nlse"])
    p.add_argument("--r", type=float, nargs="+", default=[0.1, 0.3, 0.5], help="nonlinear phase values")
    p.add_argument("--nbar", type=float, default=1.0e4)
    p.add_argument("--n-traj", type=int, default=10000, dest="n_traj")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--zeta", type=float, default=25.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _say(f"config error: {exc}")
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError) as exc:
        _say(f"input error: {exc}")
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        _say(f"numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
