"""One time step of the stabilized semi-implicit convex-splitting scheme.

Unknowns per step are the nodal vectors (phi, c, mu).  With B the lumped
mass matrix, K the plain stiffness matrix, and K_w the stiffness matrix
weighted per triangle by w evaluated from the OLD state (vertex means
phibar, cbar), the residual of the new state is

    R1 = B (phi - phi_n)/tau + sigma tau B (mu - mu_n)
         + K_m mu - K_mc c + K_mc phi_n
    R2 = B (c - c_n)/tau + K_g (c - phi_n) - K_mc mu + K_mc2 (c - phi_n)
    R3 = B mu - eps K phi - B f1_delta(phi)/eps + B f2(phi_n)/eps + B c

with triangle weights w_m = m(phibar), w_mc = w_m cbar, w_mc2 = w_m cbar^2,
w_g = g(cbar).  Freezing the weights at the old state keeps the discrete
energy inequality a sum of nonnegative per-triangle quadratic forms, so
the dissipation terms reported by the diagnostics must reuse these exact
weights.  R1 and R2 are linear in the unknowns, which is what gives mass
conservation to solver tolerance (machine precision after a full Newton
step).

The nonlinear system is solved by a damped Newton method on the stacked
vector x = (phi, c, mu).  Only the R3/phi Jacobian block changes between
iterations, so the sparsity pattern is assembled once per step and the
diagonal f1_delta' entries are rewritten in place.  The LU factors are
refreshed lazily: a factorization is reused for further iterations while
the residual keeps contracting strongly, and rebuilt from the current
iterate the moment it does not.  Convergence is always judged on the true
residual, so the accepted state never depends on the refresh policy.

Unknowns are eliminated in a nested-dissection order of the grid nodes
(all three fields of a node together), computed once per mesh size; on
this structured graph that keeps the fill of the factors low.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import physics
from .mesh import NodalField, PeriodicMesh, lumped_weights, stiffness_matrix, \
    triangle_averages, weighted_stiffness
from .physics import ModelParams
from .sparse import CsrMatrix, Factorization, Triplets, compress, matvec


@dataclass
class SimState:
    """Discrete solution at one time level; time is step * tau by construction."""

    phi: NodalField
    c: NodalField
    mu: NodalField
    step: int = 0
    time: float = 0.0

    def __post_init__(self):
        if not (self.phi.mesh.key == self.c.mesh.key == self.mu.mesh.key):
            raise ValueError("phi, c, mu must live on the same mesh")

    @property
    def mesh(self) -> PeriodicMesh:
        return self.phi.mesh


@dataclass
class NewtonSettings:
    """Stopping and damping controls for the per-step Newton solve."""

    abs_tol: float = 1e-11
    rel_tol: float = 1e-10
    max_iter: int = 25
    max_halvings: int = 8
    phi_guard: float = 1e-12  # open-interval margin enforced when delta = 0
    # reuse the LU factors while each update shrinks the residual by at
    # least this factor; 0 refactors every iteration (textbook Newton)
    refresh_ratio: float = 0.1

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.max_halvings < 0:
            raise ValueError("max_iter >= 1 and max_halvings >= 0 required")
        if not 0.0 < self.phi_guard < 0.5:
            raise ValueError("phi_guard must lie in (0, 1/2)")
        if not 0.0 <= self.refresh_ratio < 1.0:
            raise ValueError("refresh_ratio must lie in [0, 1)")


class NewtonError(RuntimeError):
    """Newton iteration failed to converge or to keep phi admissible."""

    def __init__(self, message: str, step: int, iterations: int, residual_norm: float):
        super().__init__(message)
        self.step = step
        self.iterations = iterations
        self.residual_norm = residual_norm


class PhiOutOfDomainError(ValueError):
    """An iterate left (0, 1) while running with the unregularized potential."""


@dataclass
class StepReport:
    """Per-step solver observability."""

    newton_iters: int
    residual_norm: float
    initial_residual_norm: float
    increment_norms: list[float] = field(default_factory=list)


@lru_cache(maxsize=8)
def _nd_node_order(m: int) -> np.ndarray:
    """Nested-dissection elimination order of the m x m periodic grid.

    Two column and two row grid lines cut the torus into four planar
    boxes, which are then bisected recursively; separators are eliminated
    after the parts they split.  Purely structural, so it is computed once
    per mesh size.
    """
    order: list[int] = []

    def box(i0: int, ni: int, j0: int, nj: int) -> None:
        if ni <= 0 or nj <= 0:
            return
        if ni * nj <= 16:
            for j in range(j0, j0 + nj):
                for i in range(i0, i0 + ni):
                    order.append((j % m) * m + (i % m))
            return
        if ni >= nj:
            c = ni // 2
            box(i0, c, j0, nj)
            box(i0 + c + 1, ni - c - 1, j0, nj)
            for j in range(j0, j0 + nj):
                order.append((j % m) * m + ((i0 + c) % m))
        else:
            c = nj // 2
            box(i0, ni, j0, c)
            box(i0, ni, j0 + c + 1, nj - c - 1)
            for i in range(i0, i0 + ni):
                order.append(((j0 + c) % m) * m + (i % m))

    half = m // 2
    for i0, ni in ((1, half - 1), (half + 1, m - half - 1)):
        for j0, nj in ((1, half - 1), (half + 1, m - half - 1)):
            box(i0, ni, j0, nj)
        for i in range(i0, i0 + ni):  # row separators inside this strip
            order.append(i % m)
            order.append(half * m + (i % m))
    for j in range(m):  # the two column separators close the torus
        order.append(j * m)
        order.append(j * m + half)
    out = np.array(order, dtype=np.int64)
    if out.shape != (m * m,) or np.any(np.sort(out) != np.arange(m * m)):
        raise AssertionError("elimination order is not a permutation")
    return out


def _solver_ordering(mesh: PeriodicMesh) -> np.ndarray:
    """Unknown elimination order for the stacked (phi, c, mu) system.

    The three unknowns of a node stay adjacent (they share the node's
    neighborhood), visiting nodes in nested-dissection order.
    """
    n = mesh.node_count
    nodes = _nd_node_order(mesh.M)
    ordering = np.empty(3 * n, dtype=np.int64)
    for b in range(3):
        ordering[3 * np.arange(n) + b] = b * n + nodes
    return ordering


def init_mu0(phi0: NodalField, c0: NodalField, p: ModelParams) -> NodalField:
    """Chemical potential consistent with the discrete phi equation at t = 0.

    mu0_j = eps (K phi0)_j / beta_j + (f1_delta(phi0_j) - f2(phi0_j)) / eps - c0_j
    """
    if phi0.mesh.key != c0.mesh.key:
        raise ValueError("phi0 and c0 must live on the same mesh")
    mesh = phi0.mesh
    beta = lumped_weights(mesh).values
    k_phi = matvec(stiffness_matrix(mesh), phi0.values)
    f1 = physics.f1_delta(phi0.values, p.delta)
    f2 = physics.f2(phi0.values, p.theta0)
    return NodalField(mesh, p.eps * k_phi / beta + (f1 - f2) / p.eps - c0.values)


class _StepSystem:
    """Residual and Jacobian of one step, frozen at the old state."""

    def __init__(self, old: SimState, p: ModelParams, phi_guard: float):
        mesh = old.mesh
        self.mesh = mesh
        self.p = p
        self.phi_guard = phi_guard
        self.n = mesh.node_count
        self.beta = lumped_weights(mesh).values
        self.k_plain = stiffness_matrix(mesh)

        phibar = triangle_averages(old.phi)
        cbar = triangle_averages(old.c)
        w_m = physics.m(phibar)
        self.k_m = weighted_stiffness(mesh, w_m)
        self.k_mc = weighted_stiffness(mesh, w_m * cbar)
        self.k_mc2 = weighted_stiffness(mesh, w_m * cbar * cbar)
        self.k_g = weighted_stiffness(mesh, physics.g(cbar, p.g_kind))

        self.phi_n = old.phi.values
        self.c_n = old.c.values
        self.mu_n = old.mu.values

        # constant parts of the residual blocks
        self.r1_const = (
            -self.beta * self.phi_n / p.tau
            - p.sigma * p.tau * self.beta * self.mu_n
            + matvec(self.k_mc, self.phi_n)
        )
        self.r2_const = (
            -self.beta * self.c_n / p.tau
            - matvec(self.k_g, self.phi_n)
            - matvec(self.k_mc2, self.phi_n)
        )
        self.r3_const = self.beta * physics.f2(self.phi_n, p.theta0) / p.eps

        self.ordering = _solver_ordering(mesh)
        self._pattern, self._diag_pos = self._build_jacobian_pattern()

    def _build_jacobian_pattern(self) -> tuple[CsrMatrix, np.ndarray]:
        n = self.n
        p = self.p
        rows = []
        cols = []
        vals = []

        def put_diag(bi: int, bj: int, d: np.ndarray) -> None:
            idx = np.arange(n, dtype=np.int64)
            rows.append(bi * n + idx)
            cols.append(bj * n + idx)
            vals.append(np.asarray(d, dtype=np.float64))

        def put_block(bi: int, bj: int, a: CsrMatrix, scale: float) -> None:
            r, c, v = a.coo()
            rows.append(bi * n + r)
            cols.append(bj * n + c)
            vals.append(scale * v)

        put_diag(0, 0, self.beta / p.tau)                 # dR1/dphi
        put_block(0, 1, self.k_mc, -1.0)                  # dR1/dc
        put_diag(0, 2, p.sigma * p.tau * self.beta)       # dR1/dmu
        put_block(0, 2, self.k_m, 1.0)
        put_diag(1, 1, self.beta / p.tau)                 # dR2/dc
        put_block(1, 1, self.k_g, 1.0)
        put_block(1, 1, self.k_mc2, 1.0)
        put_block(1, 2, self.k_mc, -1.0)                  # dR2/dmu
        put_block(2, 0, self.k_plain, -p.eps)             # dR3/dphi, linear part
        put_diag(2, 1, self.beta)                         # dR3/dc
        put_diag(2, 2, self.beta)                         # dR3/dmu

        pattern = compress(
            Triplets(3 * n, 3 * n, np.concatenate(rows), np.concatenate(cols),
                     np.concatenate(vals))
        )
        # positions of the (2N+j, j) entries rewritten each iteration; they
        # exist structurally because -eps K populates its full diagonal
        entry_rows = np.repeat(np.arange(3 * n), np.diff(pattern.row_ptr))
        diag_pos = np.flatnonzero(
            (entry_rows >= 2 * n) & (pattern.col_idx == entry_rows - 2 * n)
        )
        if diag_pos.shape != (n,):
            raise AssertionError("stiffness diagonal entries missing from pattern")
        return pattern, diag_pos

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return x[:n], x[n:2 * n], x[2 * n:]

    def admissible(self, x: np.ndarray) -> bool:
        """With delta = 0 the logarithms require phi in (guard, 1 - guard)."""
        if self.p.delta > 0.0:
            return True
        phi = x[:self.n]
        return bool(np.all(phi > self.phi_guard) and np.all(phi < 1.0 - self.phi_guard))

    def residual(self, x: np.ndarray) -> np.ndarray:
        p = self.p
        phi, c, mu = self.split(x)
        if not self.admissible(x):
            raise PhiOutOfDomainError(
                "phi left the admissible interval while delta = 0; "
                "use a positive delta or a smaller time step"
            )
        r1 = (
            self.beta * phi / p.tau
            + p.sigma * p.tau * self.beta * mu
            + matvec(self.k_m, mu)
            - matvec(self.k_mc, c)
            + self.r1_const
        )
        r2 = (
            self.beta * c / p.tau
            + matvec(self.k_g, c)
            + matvec(self.k_mc2, c)
            - matvec(self.k_mc, mu)
            + self.r2_const
        )
        r3 = (
            self.beta * mu
            - p.eps * matvec(self.k_plain, phi)
            - self.beta * physics.f1_delta(phi, p.delta) / p.eps
            + self.beta * c
            + self.r3_const
        )
        return np.concatenate([r1, r2, r3])

    def jacobian(self, x: np.ndarray) -> CsrMatrix:
        phi = x[:self.n]
        vals = self._pattern.values.copy()
        vals[self._diag_pos] -= (
            self.beta * physics.f1_delta_prime(phi, self.p.delta) / self.p.eps
        )
        return self._pattern.with_values(vals)


def assemble_step_system(old: SimState, guess: SimState, p: ModelParams,
                         phi_guard: float = 1e-12) -> tuple[np.ndarray, CsrMatrix]:
    """Residual vector and Jacobian matrix of the step system at ``guess``."""
    system = _StepSystem(old, p, phi_guard)
    x = np.concatenate([guess.phi.values, guess.c.values, guess.mu.values])
    return system.residual(x), system.jacobian(x)


def advance_with_report(old: SimState, p: ModelParams,
                        settings: NewtonSettings | None = None) -> tuple[SimState, StepReport]:
    """Advance one step and report the Newton iteration history."""
    s = settings if settings is not None else NewtonSettings()
    system = _StepSystem(old, p, s.phi_guard)
    x = np.concatenate([old.phi.values, old.c.values, old.mu.values])
    r = system.residual(x)
    rnorm = float(np.max(np.abs(r)))
    rnorm0 = rnorm
    report = StepReport(newton_iters=0, residual_norm=rnorm, initial_residual_norm=rnorm0)

    # convergence is checked before the first update, so states that already
    # satisfy the step equations (e.g. constant consistent states) pass
    # through bitwise unchanged
    factor = None
    factor_fresh = False
    while rnorm > s.abs_tol and rnorm > s.rel_tol * rnorm0:
        if report.newton_iters >= s.max_iter:
            raise NewtonError(
                f"Newton did not converge in {s.max_iter} iterations at step "
                f"{old.step + 1} (residual {rnorm:.3e})",
                step=old.step + 1, iterations=report.newton_iters, residual_norm=rnorm,
            )
        if factor is None:
            factor = Factorization(system.jacobian(x), ordering=system.ordering)
            factor_fresh = True
        dx = factor.solve(-r)

        alpha = 1.0
        accepted = None  # (cand, r_cand, rnorm_cand, alpha)
        fallback = None  # last admissible trial, kept in case damping exhausts
        for _ in range(s.max_halvings + 1):
            cand = x + alpha * dx
            if system.admissible(cand):
                r_cand = system.residual(cand)
                rnorm_cand = float(np.max(np.abs(r_cand)))
                fallback = (cand, r_cand, rnorm_cand, alpha)
                if rnorm_cand < rnorm:
                    accepted = fallback
                    break
            alpha *= 0.5
        if accepted is None:
            if not factor_fresh:
                # stale factors caused the stall; retry from the same
                # iterate with the exact Jacobian before giving up
                factor = None
                continue
            if fallback is None:
                raise NewtonError(
                    f"damping could not keep phi inside (0, 1) at step {old.step + 1}",
                    step=old.step + 1, iterations=report.newton_iters,
                    residual_norm=rnorm,
                )
            accepted = fallback  # non-decreasing residual, damping exhausted
        rnorm_prev = rnorm
        x, r, rnorm, alpha = accepted
        contraction = rnorm / max(rnorm_prev, np.finfo(float).tiny)
        report.newton_iters += 1
        report.increment_norms.append(float(alpha * np.max(np.abs(dx))))
        report.residual_norm = rnorm
        if contraction > s.refresh_ratio or alpha < 1.0:
            factor = None  # rebuild from the new iterate next time
        else:
            factor_fresh = False

    mesh = old.mesh
    phi, c, mu = system.split(x)
    new = SimState(
        phi=NodalField(mesh, phi.copy()),
        c=NodalField(mesh, c.copy()),
        mu=NodalField(mesh, mu.copy()),
        step=old.step + 1,
        time=(old.step + 1) * p.tau,
    )
    return new, report


def advance(old: SimState, p: ModelParams,
            settings: NewtonSettings | None = None) -> SimState:
    """Advance the state by one time step of size ``p.tau``."""
    new, _ = advance_with_report(old, p, settings)
    return new


@dataclass
class StepInfo:
    """Passed to run() observers next to the freshly computed state."""

    previous: SimState
    report: StepReport


def run(initial: SimState, p: ModelParams, n_steps: int, observer=None,
        settings: NewtonSettings | None = None) -> SimState:
    """March ``n_steps`` steps; the observer sees every new state as it appears."""
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    state = initial
    for _ in range(n_steps):
        previous = state
        state, report = advance_with_report(state, p, settings)
        if observer is not None:
            observer(state, StepInfo(previous=previous, report=report))
    return state
