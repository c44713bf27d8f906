"""File formats: table cache, path dumps, CSV tables, reports.

Formats are stable interfaces:

* table cache: binary, header ``magic 'IPDW', version u32, beta f64,
  N_max u32, G_max u32, constraint u8`` then row-major log-mass values
  (f64, little-endian) of the ``(step, value, area)`` cube;
* paths: one per line, a JSON array of stretch integers;
* sample dumps: JSON lines ``{"L":..,"trials":..,"stretches":[..]}``;
* excursion dumps: CSV ``k,ext,area,vtau``;
* extension laws: CSV ``L,beta,N,prob,log_contrib``;
* plot curves: CSV ``x,y,yerr``.

All numeric text uses %.17g (round-trip) precision.
"""
from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .engine import DpTable, extension_law
from .paths import PolymerPath, path_from_line, path_to_line

__all__ = [
    "save_table",
    "load_table",
    "write_paths",
    "read_paths",
    "write_sample_dump",
    "write_excursions_csv",
    "write_extension_csv",
    "write_curve_csv",
    "write_report_json",
    "fmt",
]

_MAGIC = b"IPDW"
_VERSION = 1
_CONSTRAINT_CODE = {"free": 0, "positive-until-return": 1}
_CONSTRAINT_NAME = {v: k for k, v in _CONSTRAINT_CODE.items()}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# binary table cache
# ---------------------------------------------------------------------------

def save_table(path, table: DpTable):
    """Serialize the log-mass cube of a slice-retaining table."""
    if table.slices is None:
        raise ValueError("only tables built with keep_slices can be cached")
    p = Path(path)
    n_max, g_max = table.n_max, table.g_max
    with open(p, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<d", table.beta))
        f.write(struct.pack("<II", n_max, g_max))
        f.write(struct.pack("<B", _CONSTRAINT_CODE[table.constraint]))
        for n in range(n_max + 1):
            cube = table.log_mass(n).astype("<f8")   # (2 g_max + 1, g_max + 1)
            f.write(cube.tobytes(order="C"))


def load_table(path):
    """Read a cached cube; returns ``(header dict, log_mass array)``.

    The array has shape ``(N_max + 1, 2 G_max + 1, G_max + 1)`` indexed by
    (step, value + G_max, area).
    """
    p = Path(path)
    with open(p, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError("not a table cache file")
        (version,) = struct.unpack("<I", f.read(4))
        (beta,) = struct.unpack("<d", f.read(8))
        n_max, g_max = struct.unpack("<II", f.read(8))
        (code,) = struct.unpack("<B", f.read(1))
        count = (n_max + 1) * (2 * g_max + 1) * (g_max + 1)
        data = np.frombuffer(f.read(count * 8), dtype="<f8", count=count)
    header = {
        "version": version,
        "beta": beta,
        "n_max": n_max,
        "g_max": g_max,
        "constraint": _CONSTRAINT_NAME[code],
    }
    return header, data.reshape(n_max + 1, 2 * g_max + 1, g_max + 1)


def table_from_cube(header, cube) -> DpTable:
    """Rebuild a free-walk sampling table from a cached cube."""
    if header["constraint"] != "free":
        raise ValueError("only free tables can be rebuilt from a cube")
    from .thermo import model_params

    beta = header["beta"]
    g_max = header["g_max"]
    n_max = header["n_max"]
    p = model_params(beta)
    xpow = p.x ** np.arange(g_max + 1)
    slices = []
    log_close = np.full((n_max + 1, g_max + 1), -np.inf)
    log_zero = np.full((n_max + 1, g_max + 1), -np.inf)
    for n in range(n_max + 1):
        with np.errstate(over="ignore"):
            mass = np.exp(cube[n])                   # (2g+1, g+1), [v0+v, g]
        gcap = g_max - n if n else 0
        sl = np.zeros((gcap + 1, 2 * gcap + 1))
        for g in range(gcap + 1):
            w = min(g, gcap)
            sl[g, gcap - w : gcap + w + 1] = mass[g_max - w : g_max + w + 1, g]
        slices.append(sl)
        if n >= 1:
            vr = np.arange(-g_max, g_max + 1)
            close = (mass * xpow[np.abs(vr)][:, None]).sum(axis=0) / p.c_beta
            with np.errstate(divide="ignore"):
                log_close[n] = np.where(close > 0, np.log(np.maximum(close, 1e-320)), -np.inf)
                log_zero[n] = np.where(mass[g_max] > 0,
                                       np.log(np.maximum(mass[g_max], 1e-320)), -np.inf)
    return DpTable(
        beta=beta, n_max=n_max, g_max=g_max, constraint="free",
        log_close=log_close, log_zero=log_zero, slices=slices,
        log_scales=np.zeros(n_max + 1),
    )


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------

def write_paths(path, polymer_paths):
    with open(path, "w") as f:
        for p in polymer_paths:
            f.write(path_to_line(p) + "\n")


def read_paths(path):
    with open(path) as f:
        return [path_from_line(line) for line in f if line.strip()]


def write_sample_dump(path, records):
    """``records``: iterable of (L, trials, PolymerPath)."""
    with open(path, "w") as f:
        for L, trials, p in records:
            f.write(json.dumps(
                {"L": int(L), "trials": int(trials), "stretches": list(p.stretches)},
                separators=(",", ":"),
            ) + "\n")


def write_excursions_csv(path, records):
    with open(path, "w") as f:
        f.write("k,ext,area,vtau\n")
        for k, r in enumerate(records):
            f.write(f"{k},{r.extension},{r.area},{r.v_tau}\n")


def write_extension_csv(path, laws):
    """``laws``: iterable of ExtensionLaw."""
    with open(path, "w") as f:
        f.write("L,beta,N,prob,log_contrib\n")
        for law in laws:
            for N in range(1, law.L + 1):
                f.write(
                    f"{law.L},{fmt(law.beta)},{N},{fmt(law.probs[N - 1])},"
                    f"{fmt(law.log_contrib[N - 1])}\n"
                )


def write_curve_csv(path, x, y, yerr=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    e = np.zeros_like(y) if yerr is None else np.asarray(yerr, dtype=float)
    with open(path, "w") as f:
        f.write("x,y,yerr\n")
        for xi, yi, ei in zip(x, y, e):
            f.write(f"{fmt(xi)},{fmt(yi)},{fmt(ei)}\n")


def write_report_json(path, payload: dict):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
