"""Uniform periodic P1 triangulation of the square torus.

The domain (0, L)^2 with opposite sides identified is split into an M x M
grid of cells, each cut along its lower-left to upper-right diagonal into
two positively oriented triangles.  Node n = j*M + i sits at (i*h, j*h)
with h = L/M; cell (i, j) produces triangles 2*(j*M+i) (lower) and
2*(j*M+i)+1 (upper).  On this mesh every node carries lumped mass h^2 and
the assembled stiffness matrix has the classical five-point stencil with
two extra structural zeros along the cut diagonal.

The module provides the primitives the scheme is written in terms of:
lumped (mass-lumped) inner products, plain and triangle-weighted stiffness
matrices, per-triangle vertex averages and gradients of P1 fields, and
consistent-mass L2 norms for error measurement.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .sparse import CsrMatrix, Triplets, compress

TWO_PI = 2.0 * np.pi

# Element stiffness matrices for the two triangle shapes, in units of 1
# (grad-grad element integrals are h-independent in two dimensions).
# Lower triangle: vertices (i,j), (i+1,j), (i+1,j+1).
# Upper triangle: vertices (i,j), (i+1,j+1), (i,j+1).
_ELEM_STIFF = np.array(
    [
        [[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 0.5]],
        [[0.5, 0.0, -0.5], [0.0, 0.5, -0.5], [-0.5, -0.5, 1.0]],
    ]
)

# Consistent P1 element mass matrix in units of the triangle area.
_ELEM_MASS = np.array(
    [[1 / 6, 1 / 12, 1 / 12], [1 / 12, 1 / 6, 1 / 12], [1 / 12, 1 / 12, 1 / 6]]
)


class PeriodicMesh:
    """Uniform periodic triangulation with cached assembly arrays."""

    def __init__(self, M: int, L: float = TWO_PI):
        if int(M) != M or M < 2:
            raise ValueError("M must be an integer >= 2")
        if not (L > 0.0 and np.isfinite(L)):
            raise ValueError("L must be positive and finite")
        self.M = int(M)
        self.L = float(L)
        self.h = self.L / self.M
        self.node_count = self.M * self.M
        self.triangle_count = 2 * self.M * self.M
        self.triangle_area = 0.5 * self.h * self.h
        self.node_coords = self._build_coords()
        self.triangles = self._build_triangles()

    @property
    def key(self) -> tuple[int, float]:
        """Identity used to decide whether two fields live on the same mesh."""
        return (self.M, self.L)

    def _build_coords(self) -> np.ndarray:
        idx = np.arange(self.node_count)
        coords = np.empty((self.node_count, 2))
        coords[:, 0] = (idx % self.M) * self.h
        coords[:, 1] = (idx // self.M) * self.h
        return coords

    def _build_triangles(self) -> np.ndarray:
        m = self.M
        i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="xy")
        i = i.ravel()
        j = j.ravel()  # cell (i, j) has flat index j*m + i, matching node order
        n00 = j * m + i
        n10 = j * m + (i + 1) % m
        n11 = ((j + 1) % m) * m + (i + 1) % m
        n01 = ((j + 1) % m) * m + i
        tris = np.empty((self.triangle_count, 3), dtype=np.int64)
        tris[0::2] = np.column_stack([n00, n10, n11])
        tris[1::2] = np.column_stack([n00, n11, n01])
        return tris

    @cached_property
    def _types(self) -> np.ndarray:
        return np.arange(self.triangle_count, dtype=np.int64) % 2

    @cached_property
    def _asm_rows(self) -> np.ndarray:
        return np.repeat(self.triangles, 3, axis=1).ravel()

    @cached_property
    def _asm_cols(self) -> np.ndarray:
        return np.tile(self.triangles, (1, 3)).ravel()

    @cached_property
    def _elem_flat(self) -> np.ndarray:
        # (T, 9) per-triangle element stiffness entries in _asm_rows/_asm_cols order
        return _ELEM_STIFF.reshape(2, 9)[self._types]

    @cached_property
    def _beta(self) -> np.ndarray:
        # one third of the incident triangle areas; h^2 at every node here,
        # but accumulate honestly so the formula stays the definition
        beta = np.zeros(self.node_count)
        np.add.at(beta, self.triangles.ravel(), self.triangle_area / 3.0)
        return beta

    @cached_property
    def _stiffness(self) -> CsrMatrix:
        return weighted_stiffness(self, np.ones(self.triangle_count))

    @cached_property
    def _consistent_mass(self) -> CsrMatrix:
        vals = np.tile(self.triangle_area * _ELEM_MASS.ravel(), self.triangle_count)
        return compress(
            Triplets(self.node_count, self.node_count, self._asm_rows, self._asm_cols, vals)
        )

    def triangle_gradients(self, values: np.ndarray) -> np.ndarray:
        """Per-triangle constant gradients of a P1 field, shape (T, 2).

        Vertex values are interpreted on the local unwrapped geometry, so
        periodic wrap-around does not corrupt the differences.
        """
        v = values[self.triangles]  # (T, 3)
        grads = np.empty((self.triangle_count, 2))
        lower = self._types == 0
        upper = ~lower
        grads[lower, 0] = v[lower, 1] - v[lower, 0]
        grads[lower, 1] = v[lower, 2] - v[lower, 1]
        grads[upper, 0] = v[upper, 1] - v[upper, 2]
        grads[upper, 1] = v[upper, 2] - v[upper, 0]
        grads /= self.h
        return grads

    def __repr__(self) -> str:
        return f"PeriodicMesh(M={self.M}, L={self.L})"


@dataclass
class NodalField:
    """A P1 finite element function, stored by its nodal values."""

    mesh: PeriodicMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.mesh.node_count,):
            raise ValueError(
                f"expected {self.mesh.node_count} nodal values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("nodal values must be finite")

    @classmethod
    def constant(cls, mesh: PeriodicMesh, value: float) -> "NodalField":
        return cls(mesh, np.full(mesh.node_count, float(value)))

    def copy(self) -> "NodalField":
        return NodalField(self.mesh, self.values.copy())


def _require_same_mesh(u: NodalField, v: NodalField) -> None:
    if u.mesh.key != v.mesh.key:
        raise ValueError(f"fields live on different meshes: {u.mesh.key} vs {v.mesh.key}")


def build_mesh(M: int, L: float = TWO_PI) -> PeriodicMesh:
    """Construct the uniform periodic triangulation of (0, L)^2 with M cells per side."""
    return PeriodicMesh(M, L)


def lumped_weights(mesh: PeriodicMesh) -> NodalField:
    """Nodal weights of the lumped mass matrix (incident areas / 3)."""
    return NodalField(mesh, mesh._beta.copy())


def lumped_inner(u: NodalField, v: NodalField) -> float:
    """Mass-lumped inner product sum_j beta_j u_j v_j."""
    _require_same_mesh(u, v)
    return float(np.sum(u.mesh._beta * u.values * v.values))


def stiffness_matrix(mesh: PeriodicMesh) -> CsrMatrix:
    """Assembled P1 stiffness matrix (grad-grad, unit coefficient)."""
    return mesh._stiffness


def weighted_stiffness(mesh: PeriodicMesh, triangle_weights: np.ndarray) -> CsrMatrix:
    """Stiffness matrix with one constant coefficient per triangle.

    This is the one-point-quadrature operator: each element contribution
    is scaled by its weight, so rows built from different weight vectors
    share one sparsity pattern.
    """
    w = np.asarray(triangle_weights, dtype=np.float64)
    if w.shape != (mesh.triangle_count,):
        raise ValueError(f"expected {mesh.triangle_count} triangle weights, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("triangle weights must be finite")
    vals = (w[:, None] * mesh._elem_flat).ravel()
    return compress(
        Triplets(mesh.node_count, mesh.node_count, mesh._asm_rows, mesh._asm_cols, vals)
    )


def triangle_average(u: NodalField, t: int) -> float:
    """Mean of the three vertex values of triangle ``t``."""
    if not 0 <= t < u.mesh.triangle_count:
        raise IndexError(f"triangle index {t} out of range [0, {u.mesh.triangle_count})")
    return float(np.mean(u.values[u.mesh.triangles[t]]))


def triangle_averages(u: NodalField) -> np.ndarray:
    """Vertex means for every triangle at once, shape (T,)."""
    return u.values[u.mesh.triangles].mean(axis=1)


def l2_norm(u: NodalField) -> float:
    """Exact L2 norm of the P1 function (consistent mass matrix)."""
    q = u.values @ matvec_mass(u.mesh, u.values)
    return float(np.sqrt(max(q, 0.0)))


def l2_error(u: NodalField, v: NodalField) -> float:
    """L2 norm of the difference of two fields on the same mesh."""
    _require_same_mesh(u, v)
    return l2_norm(NodalField(u.mesh, u.values - v.values))


def matvec_mass(mesh: PeriodicMesh, values: np.ndarray) -> np.ndarray:
    """Consistent mass matrix times a nodal vector."""
    return mesh._consistent_mass.to_scipy() @ values
