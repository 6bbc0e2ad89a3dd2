"""End-to-end certification suite.

One test per advertised guarantee, each ending in a single PASS line with
the measured numbers.  Heavy simulations are shared via session fixtures;
the whole module takes roughly an hour of wall time, dominated by the
90x90 near-vacuum run.  Tolerances are pinned here and nowhere else.
"""

import numpy as np
import pytest

from chcross.config import load_config
from chcross.diagnostics import convergence_rates, discrete_energy
from chcross.experiments import ENERGY_DEFECT_TOL, MASS_DRIFT_TOL, cmd_run, simulate
from chcross.mesh import (
    NodalField, build_mesh, l2_error, l2_norm, lumped_weights, stiffness_matrix)
from chcross.physics import F, ModelParams, f1_delta, f1_delta_prime, f2, g, m, mobility_matrix
from chcross.stepper import SimState, advance_with_report, assemble_step_system, init_mu0

from conftest import dense_consistent_mass, dense_lumped, dense_stiffness

RATE_WINDOW = (0.8, 1.8)
MIN_C_FLOOR = -1e-3

STUDY_TAUS = (6.4e-3, 3.2e-3, 1.6e-3, 8e-4, 4e-4, 2e-4)
TAU_REF = 1e-4
HORIZON = 0.064

MINC_MESHES = (30, 60, 90)
MINC_TIMES = (0.2, 0.4, 0.6)
MINC_TAU = 1e-4


def study_config(**overrides):
    values = {"mesh": "60", "seed": "1", "diag_every": "1"}
    values.update({k: str(v) for k, v in overrides.items()})
    return load_config(None, values)


@pytest.fixture(scope="session")
def phase_run():
    # reference phase-separation run: 5000 steps of tau = 1e-3 to t = 5
    return simulate(study_config(steps=5000, tau=1e-3))


@pytest.fixture(scope="session")
def convergence_study():
    results = {}
    for tau in STUDY_TAUS + (TAU_REF,):
        steps = int(round(HORIZON / tau))
        assert abs(steps * tau - HORIZON) <= 1e-12
        results[tau] = simulate(study_config(steps=steps, tau=tau))
    ref = results[TAU_REF].final_state
    errors = [
        (tau,
         l2_error(results[tau].final_state.phi, ref.phi),
         l2_error(results[tau].final_state.c, ref.c))
        for tau in STUDY_TAUS
    ]
    return {"results": results, "table": convergence_rates(errors)}


@pytest.fixture(scope="session")
def delta_sweep():
    # wide initial phi range so a loose regularization can overshoot 1
    out = {}
    for delta in (1e-3, 1e-2, 0.1):
        out[delta] = simulate(study_config(
            steps=1000, tau=1e-3, delta=delta, phi0_scale=0.6, phi0_offset=0.2))
    return out


@pytest.fixture(scope="session")
def delta_zero_run():
    return simulate(study_config(steps=1000, tau=1e-3, delta=0.0))


@pytest.fixture(scope="session")
def min_c_study():
    runs = {}
    for mesh in MINC_MESHES:
        runs[mesh] = simulate(study_config(
            mesh=mesh, tau=MINC_TAU, steps=6000, c0_scale=0.001, c0_offset=0.0))
    return runs


@pytest.fixture(scope="session")
def all_certified(phase_run, convergence_study, delta_sweep, delta_zero_run,
                  min_c_study):
    named = {"phase": phase_run, "delta=0": delta_zero_run}
    for tau, result in convergence_study["results"].items():
        named[f"tau={tau:g}"] = result
    for delta, result in delta_sweep.items():
        named[f"delta={delta:g}"] = result
    for mesh, result in min_c_study.items():
        named[f"min-c M={mesh}"] = result
    return named


def test_criterion_1_temporal_convergence(convergence_study):
    table = convergence_study["table"]
    errs_phi = [row.err_phi for row in table.rows]
    errs_c = [row.err_c for row in table.rows]
    assert all(a > b for a, b in zip(errs_phi, errs_phi[1:])), errs_phi
    assert all(a > b for a, b in zip(errs_c, errs_c[1:])), errs_c
    tail = table.rows[-3:]
    for row in tail:
        assert RATE_WINDOW[0] <= row.rate_phi <= RATE_WINDOW[1], (row.tau, row.rate_phi)
        assert RATE_WINDOW[0] <= row.rate_c <= RATE_WINDOW[1], (row.tau, row.rate_c)
    rates = ", ".join(f"tau={r.tau:g}: ({r.rate_phi:.2f}, {r.rate_c:.2f})" for r in tail)
    print(f"criterion 1 (temporal convergence): PASS - errors monotone, "
          f"tail rates in [{RATE_WINDOW[0]}, {RATE_WINDOW[1]}]: {rates}")


def test_criterion_2_energy_stability(all_certified):
    for name, result in all_certified.items():
        defect = result.certificate.max_energy_defect_rel
        assert defect <= ENERGY_DEFECT_TOL, (name, defect)
        for row in result.rows:
            assert row.dissipation_m >= 0.0, name
            assert row.dissipation_g >= 0.0, name
    worst = max(r.certificate.max_energy_defect_rel for r in all_certified.values())
    print(f"criterion 2 (energy stability): PASS - {len(all_certified)} runs, "
          f"worst relative defect {worst:.3e} <= {ENERGY_DEFECT_TOL:g}")


def test_criterion_3_mass_conservation(phase_run, min_c_study):
    long_runs = {"phase": phase_run}
    long_runs.update({f"min-c M={mesh}": run for mesh, run in min_c_study.items()})
    for name, result in long_runs.items():
        cert = result.certificate
        assert cert.n_steps >= 5000, name
        assert cert.c_mass_drift_rel <= MASS_DRIFT_TOL, (name, cert.c_mass_drift_rel)
        assert cert.combo_drift_rel <= MASS_DRIFT_TOL, (name, cert.combo_drift_rel)
    worst_c = max(r.certificate.c_mass_drift_rel for r in long_runs.values())
    worst_combo = max(r.certificate.combo_drift_rel for r in long_runs.values())
    print(f"criterion 3 (mass conservation): PASS - worst drifts "
          f"c {worst_c:.3e}, phi+sigma*tau^2*mu {worst_combo:.3e} <= {MASS_DRIFT_TOL:g}")


def test_criterion_4_phi_bounds(phase_run, delta_zero_run, delta_sweep):
    early = [row for row in phase_run.rows if row.time <= 1.0 + 1e-12]
    lo = min(row.phi_min for row in early)
    hi = max(row.phi_max for row in early)
    assert lo > 0.0 and hi < 1.0, (lo, hi)

    cert0 = delta_zero_run.certificate
    assert 0.0 < cert0.phi_min and cert0.phi_max < 1.0, (cert0.phi_min, cert0.phi_max)

    for delta in (1e-3, 1e-2):
        assert delta_sweep[delta].certificate.phi_max < 1.0, delta
    loose = delta_sweep[0.1].certificate
    assert loose.phi_max > 1.0, loose.phi_max
    assert loose.energy_ok, loose.max_energy_defect_rel
    print(f"criterion 4 (phi bounds): PASS - t<=1 range [{lo:.4g}, {hi:.4g}]; "
          f"delta=0 run inside (0,1); delta=0.1 overshoot {loose.phi_max:.4f} "
          f"flagged with energy still decreasing")


def test_criterion_5_min_c_trend(min_c_study):
    def min_c_at(mesh, t):
        step = int(round(t / MINC_TAU))
        row = min_c_study[mesh].rows[step]
        assert row.step == step
        return row.c_min

    cells = {(mesh, t): min_c_at(mesh, t) for mesh in MINC_MESHES for t in MINC_TIMES}
    assert cells[(90, 0.2)] > cells[(30, 0.2)], (cells[(90, 0.2)], cells[(30, 0.2)])
    worst = min(cells.values())
    assert worst >= MIN_C_FLOOR, cells
    print(f"criterion 5 (min-c trend): PASS - min c(t=0.2): "
          f"M=30 {cells[(30, 0.2)]:.3e} < M=90 {cells[(90, 0.2)]:.3e}; "
          f"worst cell {worst:.3e} >= {MIN_C_FLOOR:g}")


def test_criterion_6_oracle_suite():
    # constant consistent states are exact fixed points
    p = ModelParams()
    mesh = build_mesh(8)
    phi = NodalField.constant(mesh, 0.5)
    c = NodalField.constant(mesh, 0.4)
    state = SimState(phi, c, init_mu0(phi, c, p), step=0, time=0.0)
    np.testing.assert_allclose(state.mu.values, -0.4, atol=1e-14)
    new, report = advance_with_report(state, p)
    np.testing.assert_array_equal(new.phi.values, state.phi.values)
    np.testing.assert_array_equal(new.c.values, state.c.values)
    assert report.newton_iters <= 1

    # Jacobian against forward differences on the 2x2 mesh
    p2 = ModelParams(M=2)
    mesh2 = build_mesh(2)
    rng = np.random.default_rng(1)
    n = mesh2.node_count
    old = SimState(
        NodalField(mesh2, rng.uniform(0.2, 0.8, size=n)),
        NodalField(mesh2, rng.uniform(0.1, 0.5, size=n)),
        NodalField(mesh2, rng.standard_normal(n)),
        step=0, time=0.0,
    )
    x = np.concatenate([old.phi.values, old.c.values, old.mu.values])

    def as_state(vec):
        return SimState(NodalField(mesh2, vec[:n].copy()),
                        NodalField(mesh2, vec[n:2 * n].copy()),
                        NodalField(mesh2, vec[2 * n:].copy()), step=0, time=0.0)

    r0, jac = assemble_step_system(old, as_state(x), p2)
    dense = jac.toarray()
    e = 1e-6
    for col in range(3 * n):
        xp = x.copy()
        xp[col] += e
        rp, _ = assemble_step_system(old, as_state(xp), p2)
        np.testing.assert_allclose(dense[:, col], (rp - r0) / e, rtol=1e-4, atol=5e-3)

    # mesh assembly against dense brute force
    for subdiv in (2, 3, 4):
        msh = build_mesh(subdiv)
        np.testing.assert_allclose(stiffness_matrix(msh).toarray(),
                                   dense_stiffness(msh), atol=1e-13)
        np.testing.assert_allclose(lumped_weights(msh).values,
                                   dense_lumped(msh), rtol=1e-13)
        u = np.random.default_rng(subdiv).standard_normal(msh.node_count)
        mm = dense_consistent_mass(msh)
        assert l2_norm(NodalField(msh, u)) == pytest.approx(
            float(np.sqrt(u @ mm @ u)), rel=1e-12)

    # split-potential derivative and slope bound
    grid = np.linspace(-0.5, 1.5, 101)
    eps = 1e-5
    fd = (f1_delta(grid + eps, 1e-3) - f1_delta(grid - eps, 1e-3)) / (2 * eps)
    np.testing.assert_allclose(f1_delta_prime(grid, 1e-3), fd, rtol=1e-5, atol=1e-4)
    wide = np.linspace(-2.0, 3.0, 501)
    for delta in (1e-3, 0.1, 0.25):
        assert np.all(f1_delta_prime(wide, delta) >= 4.0 - 1e-12)

    # mobility matrix: PSD with determinant m*g
    for phi_v in np.linspace(0.0, 1.0, 9):
        for c_v in np.linspace(0.0, 2.0, 7):
            mat = mobility_matrix(phi_v, c_v)
            assert np.min(np.linalg.eigvalsh(mat)) >= -1e-14
            det = np.linalg.det(mat)
            expected = m(phi_v) * g(c_v)
            assert abs(det - expected) <= 1e-12 * (1.0 + abs(expected))

    # lumped energy of the symmetric constant state
    rep = discrete_energy(state, p)
    area = (2.0 * np.pi) ** 2
    assert rep.potential_part == pytest.approx(area * F(0.5, p.theta0) / p.eps, rel=1e-12)
    assert rep.gradient_part == 0.0
    assert f2(1.0, 7.0) == 3.5

    print("criterion 6 (oracle suite): PASS - fixed point, finite-difference "
          "Jacobian, dense assembly, slope bound, mobility determinant")


def test_criterion_7_determinism(tmp_path):
    def run_into(subdir):
        cfg = study_config(mesh=30, steps=200, tau=1e-3, seed=1,
                           figures="false", out=str(tmp_path / subdir))
        result = cmd_run(cfg)
        assert result.certificate.ok
        return {
            name: (tmp_path / subdir / name).read_bytes()
            for name in ("timeseries.csv", "fields_final.csv", "fields_final.vtk")
        }

    first = run_into("a")
    second = run_into("b")
    assert first == second
    print("criterion 7 (determinism): PASS - repeated runs byte-identical "
          "across timeseries, fields, and VTK artifacts")
