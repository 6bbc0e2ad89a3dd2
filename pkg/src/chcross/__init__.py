"""Structure-preserving finite element solver for a Cahn-Hilliard
cross-diffusion system on the periodic square.

The package couples a conserved volume fraction phi with a solute
concentration c through a degenerate mobility matrix and solves the pair
with mass-lumped P1 elements and a stabilized convex-splitting time step.
Every run can certify three structural facts about its own output: the
discrete energy never increases once dissipation is accounted for, the
lumped solute mass and the phi + sigma tau^2 mu integral are conserved to
solver precision, and phi stays strictly inside (0, 1).
"""

from .config import ConfigError, RunConfig, load_config
from .diagnostics import (EnergyReport, RateRow, RateTable, convergence_rates,
                          discrete_energy, dissipation, energy_step_defect,
                          extrema, masses)
from .experiments import (Certificate, InitialSpec, SimResult, cmd_convergence,
                          cmd_min_c, cmd_run, cmd_sweep, gen_initial,
                          initial_state, simulate)
from .mesh import (NodalField, PeriodicMesh, build_mesh, l2_error, l2_norm,
                   lumped_inner, lumped_weights, stiffness_matrix,
                   triangle_average, triangle_averages, weighted_stiffness)
from .physics import ModelParams
from .sparse import (CsrMatrix, Factorization, SingularMatrixError, Triplets,
                     compress, matvec, solve)
from .stepper import (NewtonError, NewtonSettings, PhiOutOfDomainError, SimState,
                      StepReport, advance, advance_with_report,
                      assemble_step_system, init_mu0, run)

__all__ = [
    "Certificate",
    "ConfigError",
    "CsrMatrix",
    "EnergyReport",
    "Factorization",
    "InitialSpec",
    "ModelParams",
    "NewtonError",
    "NewtonSettings",
    "NodalField",
    "PeriodicMesh",
    "PhiOutOfDomainError",
    "RateRow",
    "RateTable",
    "RunConfig",
    "SimResult",
    "SimState",
    "SingularMatrixError",
    "StepReport",
    "Triplets",
    "advance",
    "advance_with_report",
    "assemble_step_system",
    "build_mesh",
    "cmd_convergence",
    "cmd_min_c",
    "cmd_run",
    "cmd_sweep",
    "compress",
    "convergence_rates",
    "discrete_energy",
    "dissipation",
    "energy_step_defect",
    "extrema",
    "gen_initial",
    "init_mu0",
    "initial_state",
    "l2_error",
    "l2_norm",
    "load_config",
    "lumped_inner",
    "lumped_weights",
    "masses",
    "matvec",
    "run",
    "simulate",
    "solve",
    "stiffness_matrix",
    "triangle_average",
    "triangle_averages",
    "weighted_stiffness",
]

__version__ = "0.1.0"
