"""Reproducible experiment drivers.

Each driver resolves a configuration into deterministic artifacts: the
time-series CSV, field snapshots, a structure certificate, figures, and an
echo of the resolved configuration.  Initial data comes from a seeded
PCG64 generator with a documented draw order (phi first, then c, both in
row-major node order), so a (seed, mesh) pair pins the initial state
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import plots
from .config import ConfigError, RunConfig
from .diagnostics import (discrete_energy, dissipation, convergence_rates,
                          energy_step_defect, extrema, masses, RateTable)
from .mesh import NodalField, PeriodicMesh, build_mesh, l2_error
from .outputs import (TimeSeriesRow, write_fields_csv, write_resolved_config,
                      write_timeseries_csv, write_vtk)
from .physics import ModelParams
from .stepper import SimState, init_mu0, run

ENERGY_DEFECT_TOL = 1e-8   # relative slack allowed in the per-step energy inequality
MASS_DRIFT_TOL = 1e-9      # relative drift allowed in the conserved lumped integrals


@dataclass(frozen=True)
class InitialSpec:
    """Affine maps applied to uniform [0, 1) draws at every node."""

    phi_scale: float = 0.08
    phi_offset: float = 0.2
    c_scale: float = 0.1
    c_offset: float = 0.4

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "InitialSpec":
        return cls(phi_scale=cfg.phi0_scale, phi_offset=cfg.phi0_offset,
                   c_scale=cfg.c0_scale, c_offset=cfg.c0_offset)


def gen_initial(mesh: PeriodicMesh, spec: InitialSpec, seed: int) -> tuple[NodalField, NodalField]:
    """Seeded random initial fields; phi is drawn before c, nodes row-major."""
    gen = np.random.Generator(np.random.PCG64(seed))
    u_phi = gen.random(mesh.node_count)
    u_c = gen.random(mesh.node_count)
    phi0 = NodalField(mesh, spec.phi_scale * u_phi + spec.phi_offset)
    c0 = NodalField(mesh, spec.c_scale * u_c + spec.c_offset)
    return phi0, c0


def initial_state(cfg: RunConfig) -> tuple[SimState, ModelParams]:
    """Mesh, fields, and consistent (or zero) chemical potential at t = 0."""
    p = cfg.params()
    mesh = build_mesh(p.M, p.L)
    phi0, c0 = gen_initial(mesh, InitialSpec.from_config(cfg), cfg.seed)
    if cfg.mu0_mode == "zero":
        mu0 = NodalField.constant(mesh, 0.0)
    else:
        mu0 = init_mu0(phi0, c0, p)
    return SimState(phi0, c0, mu0, step=0, time=0.0), p


@dataclass
class Certificate:
    """Pass/fail record of the structural guarantees over one run."""

    n_steps: int
    max_energy_defect_rel: float
    c_mass_drift_rel: float
    combo_drift_rel: float
    phi_min: float
    phi_max: float
    c_min: float
    c_max: float

    @property
    def energy_ok(self) -> bool:
        return self.max_energy_defect_rel <= ENERGY_DEFECT_TOL

    @property
    def c_mass_ok(self) -> bool:
        return self.c_mass_drift_rel <= MASS_DRIFT_TOL

    @property
    def combo_ok(self) -> bool:
        return self.combo_drift_rel <= MASS_DRIFT_TOL

    @property
    def bounds_ok(self) -> bool:
        return 0.0 < self.phi_min and self.phi_max < 1.0

    @property
    def ok(self) -> bool:
        return self.energy_ok and self.c_mass_ok and self.combo_ok and self.bounds_ok

    def lines(self) -> list[str]:
        def mark(flag: bool) -> str:
            return "PASS" if flag else "FAIL"

        return [
            f"certificate over {self.n_steps} steps:",
            f"  energy inequality   {mark(self.energy_ok)}"
            f"  (max relative defect {self.max_energy_defect_rel:.3e},"
            f" tol {ENERGY_DEFECT_TOL:g})",
            f"  solute mass         {mark(self.c_mass_ok)}"
            f"  (relative drift {self.c_mass_drift_rel:.3e}, tol {MASS_DRIFT_TOL:g})",
            f"  phi+sigma*tau^2*mu  {mark(self.combo_ok)}"
            f"  (relative drift {self.combo_drift_rel:.3e}, tol {MASS_DRIFT_TOL:g})",
            f"  phi bounds          {mark(self.bounds_ok)}"
            f"  (phi in [{self.phi_min:.6g}, {self.phi_max:.6g}], must stay inside (0, 1))",
            f"overall: {mark(self.ok)}",
        ]


@dataclass
class SimResult:
    final_state: SimState
    rows: list[TimeSeriesRow]
    certificate: Certificate


def _relative(delta: float, reference: float) -> float:
    # tolerance form |drift| <= tol * (1 + |initial|); robust near zero
    return delta / (1.0 + abs(reference))


def simulate(cfg: RunConfig, outdir: Path | None = None) -> SimResult:
    """Run one configured simulation, collecting diagnostics every step.

    Rows are recorded at the diag_every cadence (step 0 and the final step
    always included); the certificate is accumulated from every step
    regardless of cadence.  Field dumps go to ``outdir`` when requested.
    """
    state0, p = initial_state(cfg)
    e0 = discrete_energy(state0, p)
    cm0, combo0 = masses(state0, p)
    ex0 = extrema(state0)

    rows = [TimeSeriesRow(
        step=0, time=0.0,
        energy_gradient=e0.gradient_part, energy_potential=e0.potential_part,
        energy_nutrient=e0.nutrient_part, energy_stabilization=e0.stabilization_part,
        energy_total=e0.total, dissipation_m=0.0, dissipation_g=0.0,
        c_mass=cm0, phi_mu_combo=combo0,
        phi_min=ex0[0], phi_max=ex0[1], c_min=ex0[2], c_max=ex0[3],
        newton_iters=0,
    )]

    tracker = {
        "e_prev": e0.total,
        "max_defect_rel": 0.0,
        "c_drift": 0.0,
        "combo_drift": 0.0,
        "phi_min": ex0[0], "phi_max": ex0[1],
        "c_min": ex0[2], "c_max": ex0[3],
    }

    if outdir is not None and cfg.dump_every > 0:
        write_fields_csv(outdir / "fields_000000.csv", state0)
        write_vtk(outdir / "fields_000000.vtk", state0)

    def observer(state: SimState, info) -> None:
        e = discrete_energy(state, p)
        d_m, d_g = dissipation(info.previous, state, p)
        defect = energy_step_defect(tracker["e_prev"], e.total, d_m, d_g)
        tracker["max_defect_rel"] = max(
            tracker["max_defect_rel"], defect / (1.0 + abs(tracker["e_prev"]))
        )
        tracker["e_prev"] = e.total
        cm, combo = masses(state, p)
        tracker["c_drift"] = max(tracker["c_drift"], _relative(abs(cm - cm0), cm0))
        tracker["combo_drift"] = max(
            tracker["combo_drift"], _relative(abs(combo - combo0), combo0)
        )
        ex = extrema(state)
        tracker["phi_min"] = min(tracker["phi_min"], ex[0])
        tracker["phi_max"] = max(tracker["phi_max"], ex[1])
        tracker["c_min"] = min(tracker["c_min"], ex[2])
        tracker["c_max"] = max(tracker["c_max"], ex[3])

        if state.step % cfg.diag_every == 0 or state.step == cfg.n_steps:
            rows.append(TimeSeriesRow(
                step=state.step, time=state.time,
                energy_gradient=e.gradient_part, energy_potential=e.potential_part,
                energy_nutrient=e.nutrient_part,
                energy_stabilization=e.stabilization_part,
                energy_total=e.total, dissipation_m=d_m, dissipation_g=d_g,
                c_mass=cm, phi_mu_combo=combo,
                phi_min=ex[0], phi_max=ex[1], c_min=ex[2], c_max=ex[3],
                newton_iters=info.report.newton_iters,
            ))
        if outdir is not None and cfg.dump_every > 0 and state.step % cfg.dump_every == 0:
            write_fields_csv(outdir / f"fields_{state.step:06d}.csv", state)
            write_vtk(outdir / f"fields_{state.step:06d}.vtk", state)

    final = run(state0, p, cfg.n_steps, observer=observer)

    certificate = Certificate(
        n_steps=cfg.n_steps,
        max_energy_defect_rel=tracker["max_defect_rel"],
        c_mass_drift_rel=tracker["c_drift"],
        combo_drift_rel=tracker["combo_drift"],
        phi_min=tracker["phi_min"], phi_max=tracker["phi_max"],
        c_min=tracker["c_min"], c_max=tracker["c_max"],
    )
    return SimResult(final_state=final, rows=rows, certificate=certificate)


def _prepare_outdir(cfg: RunConfig) -> Path | None:
    if cfg.outdir is None:
        return None
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def cmd_run(cfg: RunConfig) -> SimResult:
    """Single simulation with full artifact set."""
    outdir = _prepare_outdir(cfg)
    result = simulate(cfg, outdir=outdir)
    for line in result.certificate.lines():
        print(line)
    if outdir is not None:
        write_timeseries_csv(outdir / "timeseries.csv", result.rows)
        write_fields_csv(outdir / "fields_final.csv", result.final_state)
        write_vtk(outdir / "fields_final.vtk", result.final_state)
        write_resolved_config(outdir / "config_resolved.txt", cfg)
        (outdir / "certificate.txt").write_text(
            "\n".join(result.certificate.lines()) + "\n"
        )
        if cfg.figures:
            plots.plot_timeseries(result.rows, outdir)
            plots.plot_fields(result.final_state, outdir / "fields_final.png")
        print(f"artifacts written to {outdir}")
    return result


DEFAULT_SWEEP_TAUS = (0.0064, 0.0032, 0.0016, 0.0008, 0.0004, 0.0002)


def cmd_convergence(cfg: RunConfig, taus=DEFAULT_SWEEP_TAUS, tau_ref: float = 1e-4,
                    tmax: float = 0.064) -> RateTable:
    """Temporal self-convergence against a fine-step reference run.

    All runs start from the same seeded initial state on cfg's mesh; the
    configured tau is ignored in favor of the study ladder.  Errors are
    L2 differences against the tau_ref solution at t = tmax.
    """
    taus = tuple(sorted(taus, reverse=True))
    if taus[-1] <= tau_ref:
        raise ConfigError("every study tau must exceed the reference tau")
    steps_of = {}
    for tau in taus + (tau_ref,):
        steps = int(round(tmax / tau))
        if steps < 1 or abs(steps * tau - tmax) > 1e-9:
            raise ConfigError(f"tmax = {tmax} is not an integer multiple of tau = {tau}")
        steps_of[tau] = steps

    outdir = _prepare_outdir(cfg)
    base, _ = initial_state(cfg)

    def final_at(tau: float) -> SimState:
        p = replace(cfg, tau=tau).params()
        return run(base, p, steps_of[tau])

    reference = final_at(tau_ref)
    errors = []
    for tau in taus:
        final = final_at(tau)
        errors.append((tau,
                       l2_error(final.phi, reference.phi),
                       l2_error(final.c, reference.c)))
    table = convergence_rates(errors)

    header = f"{'tau':>10}  {'err_phi':>12}  {'rate':>6}  {'err_c':>12}  {'rate':>6}"
    print(header)
    for row in table.rows:
        rp = f"{row.rate_phi:.2f}" if row.rate_phi is not None else "-"
        rc = f"{row.rate_c:.2f}" if row.rate_c is not None else "-"
        print(f"{row.tau:>10.4g}  {row.err_phi:>12.4e}  {rp:>6}  {row.err_c:>12.4e}  {rc:>6}")

    if outdir is not None:
        lines = ["tau,err_phi,rate_phi,err_c,rate_c"]
        for row in table.rows:
            rp = format(row.rate_phi, ".17g") if row.rate_phi is not None else ""
            rc = format(row.rate_c, ".17g") if row.rate_c is not None else ""
            lines.append(f"{row.tau:.17g},{row.err_phi:.17g},{rp},{row.err_c:.17g},{rc}")
        (outdir / "rates.csv").write_text("\n".join(lines) + "\n")
        write_resolved_config(outdir / "config_resolved.txt", cfg)
        if cfg.figures:
            plots.plot_convergence(table.rows, outdir / "convergence.png")
    return table


def cmd_min_c(cfg: RunConfig, meshes=(30, 60, 90),
              times=(0.2, 0.4, 0.6)) -> tuple[list[float], dict[int, list[float]]]:
    """Minimum nodal solute value at checkpoint times across mesh resolutions.

    Unless the configuration says otherwise this uses the near-vacuum
    protocol: tau = 1e-4 and c0 = 0.001 * rand (phi0 as configured).  The
    returned table maps mesh subdivisions to min-c values per checkpoint.
    """
    cfg = replace(cfg)
    if "tau" not in cfg.explicit:
        cfg.tau = 1e-4
    if "c0_scale" not in cfg.explicit:
        cfg.c0_scale = 0.001
    if "c0_offset" not in cfg.explicit:
        cfg.c0_offset = 0.0

    times = sorted(times)
    checkpoints = {}
    for t in times:
        steps = int(round(t / cfg.tau))
        if steps < 1 or abs(steps * cfg.tau - t) > 1e-9:
            raise ConfigError(f"checkpoint t = {t} is not an integer multiple of tau")
        checkpoints[steps] = t
    total_steps = max(checkpoints)

    outdir = _prepare_outdir(cfg)
    table: dict[int, list[float]] = {}
    for m in meshes:
        sub = replace(cfg, mesh_subdivisions=int(m), n_steps=total_steps, tmax=None,
                      outdir=None)
        sub.explicit = set(cfg.explicit) - {"tmax", "steps", "out"}
        sub = sub.validate()
        state0, p = initial_state(sub)
        mins: dict[int, float] = {}

        def observer(state, info, mins=mins):
            if state.step in checkpoints:
                mins[state.step] = float(state.c.values.min())

        run(state0, p, total_steps, observer=observer)
        table[int(m)] = [mins[s] for s in sorted(checkpoints)]
        print(f"M = {m:>3}: " + "  ".join(
            f"min c(t={checkpoints[s]:g}) = {mins[s]: .6e}" for s in sorted(checkpoints)
        ))

    if outdir is not None:
        lines = ["time," + ",".join(f"M{m}" for m in meshes)]
        for k, t in enumerate(times):
            vals = ",".join(format(table[int(m)][k], ".17g") for m in meshes)
            lines.append(f"{t:.17g},{vals}")
        (outdir / "min_c.csv").write_text("\n".join(lines) + "\n")
        write_resolved_config(outdir / "config_resolved.txt", cfg)
        if cfg.figures:
            plots.plot_min_c(times, table, outdir / "min_c.png")
    return times, table


_SWEEPABLE = {"tau": "tau", "delta": "delta", "theta0": "theta0"}


@dataclass
class SweepRow:
    parameter: str
    value: float
    max_phi: float
    phi_exceeds_one: bool
    energy_ok: bool
    min_c: float
    c_mass_drift_rel: float


def cmd_sweep(cfg: RunConfig, parameter: str, values) -> list[SweepRow]:
    """Re-run one configuration while varying a single parameter.

    Each run writes its own artifact set under ``<out>/<parameter>_<value>``;
    a summary CSV collects the structure flags, in particular whether phi
    stayed below 1 (it can escape for coarse regularizations).
    """
    if parameter not in _SWEEPABLE:
        raise ConfigError(f"cannot sweep {parameter!r}; choose from {sorted(_SWEEPABLE)}")
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")

    outdir = _prepare_outdir(cfg)
    rows: list[SweepRow] = []
    for value in values:
        sub = replace(cfg, **{_SWEEPABLE[parameter]: value})
        if parameter == "tau" and cfg.tmax is not None:
            sub.explicit = set(cfg.explicit) - {"steps"}
        sub_out = None
        if outdir is not None:
            sub_out = outdir / f"{parameter}_{value:g}"
            sub = replace(sub, outdir=str(sub_out))
        sub = sub.validate()
        result = cmd_run(sub)
        cert = result.certificate
        rows.append(SweepRow(
            parameter=parameter, value=value,
            max_phi=cert.phi_max, phi_exceeds_one=cert.phi_max >= 1.0,
            energy_ok=cert.energy_ok, min_c=cert.c_min,
            c_mass_drift_rel=cert.c_mass_drift_rel,
        ))

    print(f"{parameter:>8}  {'max_phi':>12}  {'phi>=1':>7}  {'energy':>7}  {'min_c':>12}")
    for row in rows:
        print(f"{row.value:>8g}  {row.max_phi:>12.6g}  {str(row.phi_exceeds_one):>7}"
              f"  {'PASS' if row.energy_ok else 'FAIL':>7}  {row.min_c:>12.4e}")

    if outdir is not None:
        lines = ["parameter,value,max_phi,phi_exceeds_one,energy_monotone,min_c,c_mass_drift"]
        for row in rows:
            lines.append(
                f"{row.parameter},{row.value:.17g},{row.max_phi:.17g},"
                f"{str(row.phi_exceeds_one).lower()},{str(row.energy_ok).lower()},"
                f"{row.min_c:.17g},{row.c_mass_drift_rel:.17g}"
            )
        (outdir / "sweep.csv").write_text("\n".join(lines) + "\n")
        write_resolved_config(outdir / "config_resolved.txt", cfg)
        if cfg.figures:
            plots.plot_sweep([r.value for r in rows], [r.max_phi for r in rows],
                             parameter, outdir / "sweep.png")
    return rows
