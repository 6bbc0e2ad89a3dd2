"""Structure diagnostics: discrete energy, dissipation, invariants, rates.

The quantities here are the certificates of the scheme.  The discrete
energy must not increase from step to step once the dissipation terms are
added back, the lumped solute mass and the phi + sigma tau^2 mu combination
must stay constant, and phi must remain inside (0, 1).  The dissipation
integrals reuse the exact per-triangle quadrature weights of the stepper
(mobilities at old-state vertex means), because the energy inequality is an
algebraic identity only for that choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import physics
from .mesh import lumped_weights, stiffness_matrix, triangle_averages
from .physics import ModelParams
from .sparse import matvec
from .stepper import SimState


@dataclass
class EnergyReport:
    """Discrete free energy split into its parts, plus step dissipations.

    The dissipation fields describe the transition INTO the reported state
    and are zero for reports produced from a single state.
    """

    gradient_part: float
    potential_part: float
    nutrient_part: float
    stabilization_part: float
    total: float
    dissipation_m: float = 0.0
    dissipation_g: float = 0.0


@dataclass
class RateRow:
    tau: float
    err_phi: float
    rate_phi: float | None
    err_c: float
    rate_c: float | None


@dataclass
class RateTable:
    rows: list[RateRow]


def discrete_energy(state: SimState, p: ModelParams) -> EnergyReport:
    """Evaluate the discrete free energy of a state.

    E = eps/2 phi^T K phi + 1/eps sum_j beta_j (F1_delta - F2)(phi_j)
        + sum_j beta_j h(phi_j, c_j) + sigma tau^2 / 2 sum_j beta_j mu_j^2
    """
    mesh = state.mesh
    beta = lumped_weights(mesh).values
    phi = state.phi.values
    c = state.c.values
    mu = state.mu.values
    gradient = 0.5 * p.eps * float(phi @ matvec(stiffness_matrix(mesh), phi))
    potential = float(
        np.sum(beta * (physics.F1_delta(phi, p.delta) - physics.F2(phi, p.theta0)))
    ) / p.eps
    nutrient = float(np.sum(beta * physics.h(phi, c)))
    stabilization = 0.5 * p.sigma * p.tau * p.tau * float(np.sum(beta * mu * mu))
    total = gradient + potential + nutrient + stabilization
    return EnergyReport(
        gradient_part=gradient,
        potential_part=potential,
        nutrient_part=nutrient,
        stabilization_part=stabilization,
        total=total,
    )


def dissipation(old: SimState, new: SimState, p: ModelParams) -> tuple[float, float]:
    """Dissipation released by the step old -> new, as (D_m, D_g), both >= 0.

    D_m = tau sum_T area w_m(T) |grad mu_new - cbar(T) (grad c_new - grad phi_old)|^2
    D_g = tau sum_T area w_g(T) |grad c_new - grad phi_old|^2

    with w_m, w_g and the vertex means taken from the OLD state, matching
    the stepper's quadrature exactly.
    """
    if old.mesh.key != new.mesh.key:
        raise ValueError("states live on different meshes")
    mesh = old.mesh
    phibar = triangle_averages(old.phi)
    cbar = triangle_averages(old.c)
    w_m = physics.m(phibar)
    w_g = physics.g(cbar, p.g_kind)

    grad_mu = mesh.triangle_gradients(new.mu.values)
    grad_c = mesh.triangle_gradients(new.c.values)
    grad_phi_old = mesh.triangle_gradients(old.phi.values)

    dgc = grad_c - grad_phi_old
    flux_m = grad_mu - cbar[:, None] * dgc
    area = mesh.triangle_area
    d_m = p.tau * float(np.sum(w_m * np.sum(flux_m * flux_m, axis=1)) * area)
    d_g = p.tau * float(np.sum(w_g * np.sum(dgc * dgc, axis=1)) * area)
    return d_m, d_g


def energy_step_defect(e_old: float, e_new: float, d_m: float, d_g: float) -> float:
    """Slack of the per-step energy inequality; nonpositive up to roundoff."""
    return e_new - e_old + d_m + d_g


def masses(state: SimState, p: ModelParams) -> tuple[float, float]:
    """Conserved lumped quantities: (solute mass, phi + sigma tau^2 mu mass)."""
    beta = lumped_weights(state.mesh).values
    c_mass = float(np.sum(beta * state.c.values))
    combo = float(np.sum(beta * (state.phi.values + p.sigma * p.tau * p.tau * state.mu.values)))
    return c_mass, combo


def extrema(state: SimState) -> tuple[float, float, float, float]:
    """(min phi, max phi, min c, max c) over the nodes."""
    phi = state.phi.values
    c = state.c.values
    return float(phi.min()), float(phi.max()), float(c.min()), float(c.max())


def convergence_rates(errors: list[tuple[float, float, float]]) -> RateTable:
    """Turn (tau, err_phi, err_c) rows into observed-order rows.

    Rows must come ordered by strictly decreasing tau.  The first row has no
    rate; later rows report log(e_prev / e) / log(tau_prev / tau), or None
    when a zero error makes the quotient meaningless.
    """
    if len(errors) < 2:
        raise ValueError("need at least two (tau, err_phi, err_c) rows")
    taus = [row[0] for row in errors]
    if any(t2 >= t1 for t1, t2 in zip(taus, taus[1:])):
        raise ValueError("tau values must be strictly decreasing")
    rows: list[RateRow] = []
    prev = None
    for tau, e_phi, e_c in errors:
        if any(not np.isfinite(v) or v < 0 for v in (e_phi, e_c)):
            raise ValueError("errors must be finite and nonnegative")
        rate_phi = rate_c = None
        if prev is not None:
            t_prev, ep_prev, ec_prev = prev
            shrink = np.log(t_prev / tau)
            if ep_prev > 0.0 and e_phi > 0.0:
                rate_phi = float(np.log(ep_prev / e_phi) / shrink)
            if ec_prev > 0.0 and e_c > 0.0:
                rate_c = float(np.log(ec_prev / e_c) / shrink)
        rows.append(RateRow(tau=tau, err_phi=e_phi, rate_phi=rate_phi,
                            err_c=e_c, rate_c=rate_c))
        prev = (tau, e_phi, e_c)
    return RateTable(rows=rows)
