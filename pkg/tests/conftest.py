"""Shared brute-force oracles for the test suite.

Everything here is rebuilt from first principles (plain loops, dense
arrays, textbook formulas) so the vectorized assembly in the package is
checked against an independent implementation, not against itself.
"""

import numpy as np


def unwrapped_triangulation(mesh):
    """Rebuild the triangulation from (M, L) alone.

    Returns (tri_nodes, tri_coords): integer vertex ids of every triangle
    and the *unwrapped* vertex coordinates, so triangles crossing the
    periodic seam keep their true geometry (x or y may reach L).
    Cell (i, j) is split along the up-right diagonal: the lower triangle
    is (p00, p10, p11), the upper one (p00, p11, p01).
    """
    m, h = mesh.M, mesh.h
    tri_nodes = []
    tri_coords = []
    for j in range(m):
        for i in range(m):
            n00 = j * m + i
            n10 = j * m + (i + 1) % m
            n01 = ((j + 1) % m) * m + i
            n11 = ((j + 1) % m) * m + (i + 1) % m
            p00 = (i * h, j * h)
            p10 = ((i + 1) * h, j * h)
            p01 = (i * h, (j + 1) * h)
            p11 = ((i + 1) * h, (j + 1) * h)
            tri_nodes.append((n00, n10, n11))
            tri_coords.append((p00, p10, p11))
            tri_nodes.append((n00, n11, n01))
            tri_coords.append((p00, p11, p01))
    return np.array(tri_nodes), np.array(tri_coords)


def lambda_gradients(coords):
    """Barycentric gradients and area of one triangle.

    coords is (3, 2); returns (grads (3, 2), area). Standard formula:
    grad lambda_a = rot90(p_{a+2} - p_{a+1}) / (2A).
    """
    (x0, y0), (x1, y1), (x2, y2) = coords
    twice_area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    grads = np.array([
        [y1 - y2, x2 - x1],
        [y2 - y0, x0 - x2],
        [y0 - y1, x1 - x0],
    ]) / twice_area
    return grads, 0.5 * abs(twice_area)


def dense_stiffness(mesh, triangle_weights=None):
    """Dense weighted stiffness matrix assembled triangle by triangle."""
    tri_nodes, tri_coords = unwrapped_triangulation(mesh)
    n = mesh.node_count
    k = np.zeros((n, n))
    for t in range(len(tri_nodes)):
        grads, area = lambda_gradients(tri_coords[t])
        w = 1.0 if triangle_weights is None else triangle_weights[t]
        for a in range(3):
            for b in range(3):
                k[tri_nodes[t, a], tri_nodes[t, b]] += w * area * grads[a] @ grads[b]
    return k


def dense_consistent_mass(mesh):
    """Dense P1 mass matrix: area/12 * (1 + delta_ab) per triangle."""
    tri_nodes, tri_coords = unwrapped_triangulation(mesh)
    n = mesh.node_count
    mm = np.zeros((n, n))
    for t in range(len(tri_nodes)):
        _, area = lambda_gradients(tri_coords[t])
        for a in range(3):
            for b in range(3):
                mm[tri_nodes[t, a], tri_nodes[t, b]] += area / 12.0 * (1.0 + (a == b))
    return mm


def dense_lumped(mesh):
    """Lumped quadrature weights: one third of the adjacent triangle area."""
    tri_nodes, tri_coords = unwrapped_triangulation(mesh)
    beta = np.zeros(mesh.node_count)
    for t in range(len(tri_nodes)):
        _, area = lambda_gradients(tri_coords[t])
        for a in range(3):
            beta[tri_nodes[t, a]] += area / 3.0
    return beta


def dense_gradients(mesh, values):
    """Per-triangle gradient of the P1 interpolant, shape (T, 2)."""
    tri_nodes, tri_coords = unwrapped_triangulation(mesh)
    out = np.zeros((len(tri_nodes), 2))
    for t in range(len(tri_nodes)):
        grads, _ = lambda_gradients(tri_coords[t])
        out[t] = values[tri_nodes[t]] @ grads
    return out
