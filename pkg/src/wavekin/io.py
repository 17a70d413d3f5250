"""Snapshot and time-series output.

All files are delimited text with headers.  Floating point values are
written with repr-exact precision (%.17g), so write -> read -> write is
byte-identical and read-back states match bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .bundles import TrajectoryBundle
from .errors import ConfigurationError
from .scenario import Scenario
from .solver import SystemState

_FMT = "%.17g"


def write_snapshot(out_dir: str | Path, state: SystemState, scenario: Scenario, cfg_hash: str) -> Path:
    """Write f.csv, n.csv and manifest.json into out_dir/step_<k>."""
    snap = Path(out_dir) / f"step_{state.step:08d}"
    snap.mkdir(parents=True, exist_ok=True)

    rows = []
    nr, npar, nperp = state.f.shape
    rc = scenario.grid_r.centers
    pc = scenario.grid_p_par.centers
    qc = scenario.grid_p_perp.centers
    for xi in range(nr):
        for i in range(npar):
            for j in range(nperp):
                rows.append(
                    f"{xi},{i},{j},{_FMT % rc[xi]},{_FMT % pc[i]},{_FMT % qc[j]},"
                    f"{_FMT % state.f[xi, i, j]}"
                )
    (snap / "f.csv").write_text(
        "r_index,p_par_index,p_perp_index,r,p_par,p_perp,value\n" + "\n".join(rows) + "\n"
    )

    rows = []
    for b, value in zip(scenario.bundles, state.n):
        rows.append(
            f"{b.id},{b.phz_cell},{b.interval_index},{_FMT % b.measure},{_FMT % value}"
        )
    (snap / "n.csv").write_text(
        "bundle,phz_cell,interval,measure,value\n" + "\n".join(rows) + "\n"
    )

    manifest = {"config_hash": cfg_hash, "step": state.step, "t": state.t}
    (snap / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return snap


def read_snapshot(snap_dir: str | Path, scenario: Scenario) -> tuple[SystemState, dict]:
    snap = Path(snap_dir)
    manifest = json.loads((snap / "manifest.json").read_text())

    f = np.zeros((scenario.grid_r.n, scenario.grid_p_par.n, scenario.grid_p_perp.n))
    lines = (snap / "f.csv").read_text().splitlines()
    for line in lines[1:]:
        parts = line.split(",")
        f[int(parts[0]), int(parts[1]), int(parts[2])] = float(parts[6])

    n = np.zeros(len(scenario.bundles))
    lines = (snap / "n.csv").read_text().splitlines()
    for line in lines[1:]:
        parts = line.split(",")
        n[int(parts[0])] = float(parts[4])

    state = SystemState(t=float(manifest["t"]), step=int(manifest["step"]), f=f, n=n)
    return state, manifest


class SeriesWriter:
    """Append-only conservation time series."""

    HEADER = "t,mass,momentum_z,energy,e_rel_mass,e_rel_momentum,e_rel_energy"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(self.HEADER + "\n")

    def append(self, t, mass, momentum_z, energy, e_mass, e_mom, e_energy) -> None:
        with self.path.open("a") as fh:
            fh.write(
                ",".join(_FMT % v for v in (t, mass, momentum_z, energy, e_mass, e_mom, e_energy))
                + "\n"
            )


def write_bundle_table(path: str | Path, bundles: Sequence[TrajectoryBundle]) -> Path:
    """One record per bundle: id, cell, band index, cover size, measure."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        f"{b.id},{b.phz_cell},{b.interval_index},{b.cover_size},{_FMT % b.measure}"
        for b in bundles
    ]
    path.write_text("bundle,phz_cell,interval,cover_size,measure\n" + "\n".join(rows) + "\n")
    return path


def read_config_file(path: str | Path) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    return p.read_text()
