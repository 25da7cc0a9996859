"""JSON run configuration: schema, validation and resolution into RunConfig.

Unknown keys are rejected everywhere so that a typo fails loudly instead
of silently falling back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .ensemble import METHODS, RunConfig
from .params import FIBER_PRESETS, FiberSpec, PulseSpec, fiber_preset


class ConfigError(ValueError):
    """Invalid or ambiguous configuration (CLI exit code 2)."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_bool = {"type": "boolean"}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


FIBER_FIELDS = {
    "length_m": _pos,
    "gvd_fs2_per_mm": _num,
    "tod_fs3_per_mm": _num,
    "attenuation_db_per_km": {"type": "number", "minimum": 0},
    "gamma_per_w_m": _num,
    "soliton_energy_pJ": _pos,
    "raman_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "n2_m2_per_w": _num,
    "mode_field_diameter_um": _num,
}

SCHEMA = _obj({
    "fiber": _obj({"preset": {"type": "string"}, **FIBER_FIELDS}, required=["preset", "length_m"]),
    "pulse": _obj({"wavelength_nm": _pos, "fwhm_fs": _pos, "total_energy_pJ": {"type": "number", "minimum": 0}},
                  required=["wavelength_nm", "fwhm_fs", "total_energy_pJ"]),
    "grid": _obj({"M": {"type": "integer", "minimum": 8}, "Tw": _pos, "auto_window": _bool,
                  "window_tol": _pos}),
    "method": _obj({"name": {"enum": list(METHODS)}, "delta_zeta": _pos,
                    "n_substeps": {"type": "integer", "minimum": 1}}),
    "raman": _obj({"enabled": _bool, "model": {"type": "string"},
                   "temperature_K": {"type": "number", "minimum": 0}}),
    "physics": _obj({"tod_enabled": _bool, "absorber_enabled": _bool, "attenuation_enabled": _bool}),
    "corrections": _obj({
        "loss_T": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "gawbs": _obj({"mode": {"enum": ["fixed", "fit"]}, "c": {"type": "number", "minimum": 0},
                       "data_file": {"type": "string"}}, required=["mode"]),
    }),
    "ensemble": _obj({"n_traj": {"type": "integer", "minimum": 2}, "seed": {"type": "integer", "minimum": 0},
                      "threads": {"type": "integer", "minimum": 1},
                      "block_size": {"type": "integer", "minimum": 1}}),
    "sweep": _obj({"energies_pJ": {"type": "array", "items": _pos, "minItems": 1},
                   "lengths_m": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}}),
    "output": _obj({"dir": {"type": "string"}, "formats": {"type": "array", "items": {"enum": ["csv", "json"]}},
                    "prefix": {"type": "string"}}),
}, required=["fiber", "pulse"])


@dataclass
class GawbsSetting:
    mode: str = "fixed"
    c: float = 0.0
    data_file: Path | None = None


@dataclass
class ResolvedConfig:
    run: RunConfig
    gawbs: GawbsSetting = field(default_factory=GawbsSetting)
    energies_pj: list[float] | None = None
    lengths_m: list[float] | None = None
    output_dir: Path = Path("results")
    formats: tuple[str, ...] = ("csv", "json")
    prefix: str = "fibersqueeze"
    source: Path | None = None


def _path_str(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate(doc: dict) -> None:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"  at {_path_str(e)}: {e.message}" for e in errors]
        raise ConfigError("configuration does not match the schema:\n" + "\n".join(lines))


def _fiber(sec: dict, raman: dict) -> FiberSpec:
    preset = sec["preset"]
    extra = {k: v for k, v in sec.items() if k not in ("preset", "length_m")}
    rename = {"soliton_energy_pJ": "soliton_energy_pj"}
    extra = {rename.get(k, k): v for k, v in extra.items()}
    extra_t = {"temperature_k": raman["temperature_K"]} if "temperature_K" in raman else {}
    if preset == "custom":
        if "gvd_fs2_per_mm" not in extra:
            raise ConfigError("fiber: custom fibre needs at least gvd_fs2_per_mm")
        return FiberSpec(length_m=sec["length_m"], **extra, **extra_t)
    if preset not in FIBER_PRESETS:
        raise ConfigError(f"fiber/preset: unknown preset {preset!r}; choose from {sorted(FIBER_PRESETS)} or 'custom'")
    if extra:
        raise ConfigError(f"fiber: preset {preset!r} cannot be combined with explicit fields {sorted(extra)}; "
                          "use preset 'custom' to specify a fibre by hand")
    return fiber_preset(preset, sec["length_m"], **extra_t)


def resolve(doc: dict, base_dir: Path | None = None) -> ResolvedConfig:
    validate(doc)
    base_dir = Path(".") if base_dir is None else base_dir
    raman = doc.get("raman", {})
    try:
        fiber = _fiber(doc["fiber"], raman)
        p = doc["pulse"]
        pulse = PulseSpec(p["wavelength_nm"], p["fwhm_fs"], p["total_energy_pJ"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    grid = doc.get("grid", {})
    meth = doc.get("method", {})
    phys = doc.get("physics", {})
    corr = doc.get("corrections", {})
    ens = doc.get("ensemble", {})
    g = corr.get("gawbs", {"mode": "fixed"})
    gawbs = GawbsSetting(mode=g["mode"], c=float(g.get("c", 0.0)),
                         data_file=(base_dir / g["data_file"]) if "data_file" in g else None)
    if gawbs.mode == "fit" and gawbs.data_file is None:
        raise ConfigError("corrections/gawbs: mode 'fit' needs data_file")
    if gawbs.mode == "fit" and "c" in g:
        raise ConfigError("corrections/gawbs: give either a fixed c or mode 'fit', not both")
    model = raman.get("model", "default")
    model_path = None if model == "default" else str(base_dir / model)
    kw = dict(
        method=meth.get("name", "wigner"),
        delta_zeta=meth.get("delta_zeta", 0.05),
        n_substeps=meth.get("n_substeps", 1),
        M=grid.get("M", 512),
        Tw=grid.get("Tw", 20.0),
        auto_window=grid.get("auto_window", True),
        window_tol=grid.get("window_tol", 1e-3),
        raman_enabled=raman.get("enabled", True),
        raman_model=model_path,
        tod_enabled=phys.get("tod_enabled", True),
        absorber_enabled=phys.get("absorber_enabled", True),
        include_attenuation=phys.get("attenuation_enabled", True),
        loss_T=corr.get("loss_T", 1.0),
        gawbs_c=gawbs.c if gawbs.mode == "fixed" else 0.0,
        n_traj=ens.get("n_traj", 1000),
        master_seed=ens.get("seed", 20070601),
        threads=ens.get("threads"),
        block_size=ens.get("block_size", 250),
    )
    try:
        run = RunConfig(fiber=fiber, pulse=pulse, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sw = doc.get("sweep", {})
    out = doc.get("output", {})
    return ResolvedConfig(
        run=run, gawbs=gawbs,
        energies_pj=sw.get("energies_pJ"), lengths_m=sw.get("lengths_m"),
        output_dir=Path(out.get("dir", "results")),
        formats=tuple(out.get("formats", ["csv", "json"])),
        prefix=out.get("prefix", "fibersqueeze"),
    )


def parse_config(path: str | Path) -> ResolvedConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    rc = resolve(doc, path.parent)
    rc.source = path
    return rc
