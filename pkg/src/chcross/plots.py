"""Figure rendering for run reports.

Every function draws to a file through the Agg backend and returns the
path; nothing here opens a window.  Figures accompany the delimited
output, they never replace it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .outputs import TimeSeriesRow
from .stepper import SimState


def _grid(state: SimState, values: np.ndarray) -> np.ndarray:
    m = state.mesh.M
    return values.reshape(m, m)


def plot_fields(state: SimState, path: str | Path) -> Path:
    """Pseudocolor panels of phi, c, mu on the periodic grid."""
    path = Path(path)
    mesh = state.mesh
    edges = np.linspace(0.0, mesh.L, mesh.M + 1)
    fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.8), constrained_layout=True)
    panels = [("phi", state.phi.values), ("c", state.c.values), ("mu", state.mu.values)]
    for ax, (name, values) in zip(axes, panels):
        img = ax.pcolormesh(edges, edges, _grid(state, values), shading="flat")
        ax.set_title(f"{name}  (t = {state.time:g})")
        ax.set_aspect("equal")
        fig.colorbar(img, ax=ax, shrink=0.9)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_timeseries(rows: list[TimeSeriesRow], outdir: str | Path) -> list[Path]:
    """Energy decay, conserved masses, and field bounds along a run."""
    outdir = Path(outdir)
    t = np.array([r.time for r in rows])
    made = []

    fig, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    ax.plot(t, [r.energy_total for r in rows], label="total")
    ax.plot(t, [r.energy_gradient for r in rows], "--", label="gradient")
    ax.plot(t, [r.energy_potential for r in rows], "--", label="potential")
    ax.plot(t, [r.energy_nutrient for r in rows], "--", label="coupling")
    ax.set_xlabel("t")
    ax.set_ylabel("discrete energy")
    ax.legend()
    p = outdir / "energy.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    made.append(p)

    fig, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    ax.plot(t, [r.c_mass for r in rows], label="solute mass")
    ax.plot(t, [r.phi_mu_combo for r in rows], label="phi + sigma tau^2 mu mass")
    ax.set_xlabel("t")
    ax.set_ylabel("lumped integral")
    ax.legend()
    p = outdir / "mass.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    made.append(p)

    fig, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    ax.plot(t, [r.phi_min for r in rows], label="min phi")
    ax.plot(t, [r.phi_max for r in rows], label="max phi")
    ax.plot(t, [r.c_min for r in rows], label="min c")
    ax.plot(t, [r.c_max for r in rows], label="max c")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.axhline(1.0, color="k", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("nodal bounds")
    ax.legend(ncols=2)
    p = outdir / "bounds.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    made.append(p)
    return made


def plot_convergence(rows, path: str | Path) -> Path:
    """Log-log error-versus-tau plot with a first-order reference slope."""
    path = Path(path)
    taus = np.array([r.tau for r in rows])
    e_phi = np.array([r.err_phi for r in rows])
    e_c = np.array([r.err_c for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 4.4), constrained_layout=True)
    ax.loglog(taus, e_phi, "o-", label="phi error")
    ax.loglog(taus, e_c, "s-", label="c error")
    ref = e_phi[0] * taus / taus[0]
    ax.loglog(taus, ref, "k--", lw=0.8, label="slope 1")
    ax.set_xlabel("tau")
    ax.set_ylabel("L2 error at T")
    ax.legend()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_min_c(times: list[float], table: dict[int, list[float]], path: str | Path) -> Path:
    """Minimum solute value against time for several mesh resolutions."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.4), constrained_layout=True)
    for m, mins in sorted(table.items()):
        ax.plot(times, mins, "o-", label=f"M = {m}")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("min c")
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.legend()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(values: list[float], max_phis: list[float], parameter: str,
               path: str | Path) -> Path:
    """Largest phi reached over each run of a parameter sweep."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.4), constrained_layout=True)
    ax.semilogx(values, max_phis, "o-")
    ax.axhline(1.0, color="r", lw=0.8, label="phi = 1")
    ax.set_xlabel(parameter)
    ax.set_ylabel("max phi over run")
    ax.legend()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
