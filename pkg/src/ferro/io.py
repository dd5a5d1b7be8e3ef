"""Artifact persistence: CSV field tables, history, JSON reports.

All writers are deterministic (sorted keys, no timestamps, repr-exact
floats), so a rerun with the same config and seed reproduces every byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os

import numpy as np

from .errors import ConfigError, InvalidInputError
from .grid import DomainGrid


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_field_csv(path: str, grid: DomainGrid, field: np.ndarray, names):
    ii, jj = np.nonzero(grid.inside)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", *names])
        for i, j in zip(ii, jj):
            w.writerow([repr(float(grid.x[i])), repr(float(grid.y[j])),
                        *(repr(float(v)) for v in field[i, j])])


def save_fields(outdir: str, grid: DomainGrid, q: np.ndarray, M: np.ndarray) -> None:
    _write_field_csv(os.path.join(outdir, "q.csv"), grid, q, ["q1", "q2"])
    _write_field_csv(os.path.join(outdir, "m.csv"), grid, M, ["M1", "M2"])


def _load_field_csv(path: str, grid: DomainGrid, ncols: int) -> np.ndarray:
    field = grid.zero_field(ncols)
    x0, y0, h = grid.x[0], grid.y[0], grid.h
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        for row in r:
            x, y = float(row[0]), float(row[1])
            i = int(round((x - x0) / h))
            j = int(round((y - y0) / h))
            if not (0 <= i < grid.shape[0] and 0 <= j < grid.shape[1]):
                raise InvalidInputError(f"field row ({x}, {y}) off the grid")
            field[i, j] = [float(v) for v in row[2:2 + ncols]]
    return field


def load_fields(outdir: str, grid: DomainGrid):
    q = _load_field_csv(os.path.join(outdir, "q.csv"), grid, 2)
    M = _load_field_csv(os.path.join(outdir, "m.csv"), grid, 2)
    return q, M


def save_history(outdir: str, history: np.ndarray) -> None:
    with open(os.path.join(outdir, "history.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "F_eps", "residual"])
        for step, F, res in history:
            w.writerow([int(step), repr(float(F)), repr(float(res))])


def save_grid_table(outdir: str, grid: DomainGrid) -> None:
    names = {0: "exterior", 1: "boundary", 2: "interior"}
    with open(os.path.join(outdir, "grid.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "class"])
        nx, ny = grid.shape
        for i in range(nx):
            for j in range(ny):
                if grid.cls[i, j]:
                    w.writerow([repr(float(grid.x[i])), repr(float(grid.y[j])),
                                names[int(grid.cls[i, j])]])


def load_run(rundir: str):
    """Rebuild (cfg, grid, bc, params, q, M) from a persisted relaxation run."""
    from . import potential, solver
    from .grid import Domain, build_grid, make_boundary_data

    cfg_path = os.path.join(rundir, "config.json")
    if not os.path.exists(cfg_path):
        raise ConfigError(f"no config.json under {rundir}")
    cfg = read_json(cfg_path)
    domain = Domain.from_config(cfg["domain"])
    grid = build_grid(domain, cfg["h"])
    bc = make_boundary_data(grid, cfg["beta"], cfg["degree"], cfg["mode"])
    params = potential.CouplingParams(beta=cfg["beta"], eps=cfg["eps"])
    q, M = load_fields(rundir, grid)
    return cfg, grid, bc, params, q, M
