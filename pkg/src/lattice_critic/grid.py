"""Rectangular (sigma, t) grids of |U_K|, arg U_K, arg U and arg F for external contouring."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import fastline as fl
from .errors import DomainError

__all__ = ["GRID_FUNCS", "MAX_GRID", "grid_values", "export_grid"]

MAX_GRID = 2000
GRID_FUNCS = ("absUK", "argUK", "argU", "argF")


def _evaluate(func: str, s: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        p = fl.LineParts(s)
        if func == "absUK":
            return np.abs(p.uk)
        if func == "argUK":
            return np.angle(p.uk)
        if func == "argU":
            return np.angle(p.u)
        return np.angle(p.f)


def grid_values(func: str, sigma_range, t_range, n_sigma: int, n_t: int):
    """(sigmas, ts, values) with values[j, i] at sigma_i + i t_j; non-finite entries are nan.

    Arguments are principal values in (-pi, pi].
    """
    if func not in GRID_FUNCS:
        raise ValueError(f"unknown grid function {func!r}; choose from {', '.join(GRID_FUNCS)}")
    if not (1 <= n_sigma <= MAX_GRID and 1 <= n_t <= MAX_GRID):
        raise DomainError(f"grid {n_sigma}x{n_t} exceeds the {MAX_GRID}x{MAX_GRID} cap")
    sigmas = np.linspace(float(sigma_range[0]), float(sigma_range[1]), n_sigma)
    ts = np.linspace(float(t_range[0]), float(t_range[1]), n_t)
    out = np.empty((n_t, n_sigma))
    rows = max(1, 20000 // n_sigma)
    for j in range(0, n_t, rows):
        s = sigmas[None, :] + 1j * ts[j:j + rows, None]
        out[j:j + rows] = _evaluate(func, s.ravel()).reshape(-1, n_sigma)
    out[~np.isfinite(out)] = np.nan
    if func != "absUK":
        out[out <= -np.pi] = np.pi
    return sigmas, ts, out


def export_grid(path, func: str, sigma_range, t_range, n_sigma: int, n_t: int) -> Path:
    """Write the grid as CSV: a header of sigma values, then one row per t.

    Poles and other non-finite values become empty cells.
    """
    sigmas, ts, vals = grid_values(func, sigma_range, t_range, n_sigma, n_t)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t\\sigma"] + [f"{x:.15g}" for x in sigmas])
        for t, row in zip(ts, vals):
            w.writerow([f"{t:.15g}"] + ["" if np.isnan(v) else f"{v:.15g}" for v in row])
    return path
