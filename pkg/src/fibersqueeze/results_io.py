"""CSV/JSON result files and measured-data ingestion.

Writes go to a temporary file in the target directory followed by an
atomic rename, so an interrupted run never leaves a truncated file.
Floats are written with 17 significant digits and re-parse exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def _atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header: list[str], rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if isinstance(r, dict):
            r = [r[h] for h in header]
        w.writerow([_fmt(v) for v in r])
    return _atomic_write(Path(path), buf.getvalue())


def write_columns(path, columns: dict[str, np.ndarray]) -> Path:
    header = list(columns)
    arrs = [np.asarray(columns[h]) for h in header]
    n = len(arrs[0])
    if any(len(a) != n for a in arrs):
        raise ValueError("columns must have equal length")
    return write_csv(path, header, zip(*arrs))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and a float array of the rows."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]], float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.size == 0:
        data = np.empty((0, len(header)))
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: rows do not match the header width")
    return header, data


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, obj) -> Path:
    text = json.dumps(obj, indent=2, default=_json_default, allow_nan=True)
    return _atomic_write(Path(path), text + "\n")


def read_experiment_csv(path) -> np.ndarray:
    """Measured rows (energy_pJ, theta_deg[, sq_dB, anti_dB]).

    Energies must be strictly increasing and angles finite.
    """
    header, data = read_csv(path)
    if header[:2] != ["energy_pJ", "theta_deg"]:
        raise ValueError(f"{path}: header must start with energy_pJ,theta_deg (got {','.join(header)})")
    allowed = ["energy_pJ", "theta_deg", "sq_dB", "anti_dB"]
    if header != allowed[:len(header)]:
        raise ValueError(f"{path}: unexpected columns {header}; expected a prefix of {allowed}")
    if data.shape[0] == 0:
        raise ValueError(f"{path}: no data rows")
    e = data[:, 0]
    if np.any(np.diff(e) <= 0):
        raise ValueError(f"{path}: energies must be strictly increasing")
    if not np.all(np.isfinite(data[:, 1])):
        raise ValueError(f"{path}: angles must be finite")
    return data


def sim_rows_from_detail(header: list[str], data: np.ndarray) -> np.ndarray:
    """(E, a, b, theta_K) rows from a detailed sweep CSV (raw ellipse columns)."""
    ix = {h: i for i, h in enumerate(header)}
    need = ["energy_pJ", "raw_sq_dB", "raw_anti_dB", "raw_theta_deg"]
    missing = [n for n in need if n not in ix]
    if missing:
        raise ValueError(f"simulation table lacks columns {missing}")
    E = data[:, ix["energy_pJ"]]
    a = 10.0 ** (data[:, ix["raw_sq_dB"]] / 10.0)
    b = 10.0 ** (data[:, ix["raw_anti_dB"]] / 10.0)
    th = np.deg2rad(data[:, ix["raw_theta_deg"]])
    return np.column_stack([E, a, b, th])


def finite_or_none(x: float):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x
