"""Plain-text artifacts: time-series CSV, field snapshots, legacy VTK.

All writers are deterministic: fixed column order, floats rendered with
%.17g (round-trip exact for doubles), no timestamps or environment state.
Re-running the same resolved configuration must reproduce every artifact
byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .mesh import NodalField, PeriodicMesh
from .stepper import SimState

TIMESERIES_COLUMNS = [
    "step",
    "time",
    "energy_gradient",
    "energy_potential",
    "energy_nutrient",
    "energy_stabilization",
    "energy_total",
    "dissipation_m",
    "dissipation_g",
    "c_mass",
    "phi_mu_combo",
    "phi_min",
    "phi_max",
    "c_min",
    "c_max",
    "newton_iters",
]


@dataclass
class TimeSeriesRow:
    step: int
    time: float
    energy_gradient: float
    energy_potential: float
    energy_nutrient: float
    energy_stabilization: float
    energy_total: float
    dissipation_m: float
    dissipation_g: float
    c_mass: float
    phi_mu_combo: float
    phi_min: float
    phi_max: float
    c_min: float
    c_max: float
    newton_iters: int


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_timeseries_csv(path: str | Path, rows: list[TimeSeriesRow]) -> None:
    """Write diagnostic rows with the fixed documented header."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TIMESERIES_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, name)) for name in TIMESERIES_COLUMNS])


def read_timeseries_csv(path: str | Path) -> list[TimeSeriesRow]:
    """Read rows written by :func:`write_timeseries_csv`."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != TIMESERIES_COLUMNS:
            raise ValueError(f"unexpected time-series header in {path}")
        rows = []
        for rec in reader:
            kwargs = dict(zip(TIMESERIES_COLUMNS, rec))
            kwargs["step"] = int(kwargs["step"])
            kwargs["newton_iters"] = int(kwargs["newton_iters"])
            for key in TIMESERIES_COLUMNS:
                if key not in ("step", "newton_iters"):
                    kwargs[key] = float(kwargs[key])
            rows.append(TimeSeriesRow(**kwargs))
    return rows


def write_fields_csv(path: str | Path, state: SimState) -> None:
    """Nodal snapshot: node_index, x, y, phi, c, mu - one row per node."""
    path = Path(path)
    mesh = state.mesh
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["node_index", "x", "y", "phi", "c", "mu"])
        for j in range(mesh.node_count):
            writer.writerow([
                str(j),
                _fmt(mesh.node_coords[j, 0]),
                _fmt(mesh.node_coords[j, 1]),
                _fmt(state.phi.values[j]),
                _fmt(state.c.values[j]),
                _fmt(state.mu.values[j]),
            ])


def read_fields_csv(path: str | Path, mesh: PeriodicMesh) -> SimState:
    """Rebuild a state (step/time zeroed) from a fields snapshot."""
    path = Path(path)
    phi = np.empty(mesh.node_count)
    c = np.empty(mesh.node_count)
    mu = np.empty(mesh.node_count)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["node_index", "x", "y", "phi", "c", "mu"]:
            raise ValueError(f"unexpected fields header in {path}")
        count = 0
        for rec in reader:
            j = int(rec[0])
            phi[j] = float(rec[3])
            c[j] = float(rec[4])
            mu[j] = float(rec[5])
            count += 1
    if count != mesh.node_count:
        raise ValueError(f"expected {mesh.node_count} rows, found {count}")
    return SimState(NodalField(mesh, phi), NodalField(mesh, c), NodalField(mesh, mu))


def write_vtk(path: str | Path, state: SimState) -> None:
    """Legacy ASCII VTK unstructured grid with phi, c, mu point scalars.

    Nodes are written once (periodic identification preserved); every
    triangle is VTK cell type 5.  Paraview renders the seam triangles
    stretched across the domain, which is the standard trade-off for
    keeping the topology honest.
    """
    path = Path(path)
    mesh = state.mesh
    lines = [
        "# vtk DataFile Version 3.0",
        f"periodic P1 fields step={state.step} time={_fmt(state.time)}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.node_count} double",
    ]
    for j in range(mesh.node_count):
        lines.append(f"{_fmt(mesh.node_coords[j, 0])} {_fmt(mesh.node_coords[j, 1])} 0")
    lines.append(f"CELLS {mesh.triangle_count} {4 * mesh.triangle_count}")
    for tri in mesh.triangles:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {mesh.triangle_count}")
    lines.extend(["5"] * mesh.triangle_count)
    lines.append(f"POINT_DATA {mesh.node_count}")
    for name, values in (("phi", state.phi.values), ("c", state.c.values),
                         ("mu", state.mu.values)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_fmt(v) for v in values)
    path.write_text("\n".join(lines) + "\n")


def write_resolved_config(path: str | Path, cfg: RunConfig) -> None:
    """Echo the fully resolved configuration as a reloadable key=value file."""
    path = Path(path)
    lines = [f"{key} = {value}" for key, value in cfg.resolved_items()]
    path.write_text("\n".join(lines) + "\n")
