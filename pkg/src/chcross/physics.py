"""Scalar model functions and parameters.

Logarithmic double-well potential with its convex/concave splitting, the
regularized convex part that extends the singular logarithms to all of R,
the coupling energy between volume fraction and solute, and the degenerate
mobilities.  Everything here is nodal-pointwise or triangle-pointwise
arithmetic: each function accepts scalars or numpy arrays and returns the
matching type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

_G_KINDS = ("quadratic",)


@dataclass
class ModelParams:
    """Model and discretization constants for one run."""

    eps: float = 0.15
    theta0: float = 7.0
    sigma: float = 0.1
    delta: float = 1e-3
    tau: float = 1e-3
    M: int = 60
    L: float = TWO_PI
    g_kind: str = "quadratic"

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if not self.theta0 > 0.0:
            raise ValueError("theta0 must be positive")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if not 0.0 <= self.delta < 0.5:
            raise ValueError("delta must lie in [0, 1/2)")
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError("M must be an integer >= 2")
        if not self.L > 0.0:
            raise ValueError("L must be positive")
        if self.g_kind not in _G_KINDS:
            raise ValueError(f"unknown g_kind {self.g_kind!r}; known: {_G_KINDS}")


def _as_array(x):
    return np.asarray(x, dtype=np.float64)


def _match(out):
    # scalar in, scalar out; array in, array out (numpy 0-d results unwrap)
    return out.item() if out.ndim == 0 else out


def _check_open_unit(phi: np.ndarray, name: str) -> None:
    if np.any(phi <= 0.0) or np.any(phi >= 1.0):
        raise ValueError(f"{name} requires phi in the open interval (0, 1)")


def _check_delta(delta: float) -> None:
    if not 0.0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 1/2)")


def F(phi, theta0: float):
    """Logarithmic double-well F(phi) = phi ln phi + (1-phi) ln(1-phi) - theta0/2 phi(phi-1)."""
    p = _as_array(phi)
    _check_open_unit(p, "F")
    out = p * np.log(p) + (1.0 - p) * np.log1p(-p) - 0.5 * theta0 * p * (p - 1.0)
    return _match(out)


def f(phi, theta0: float):
    """Derivative of :func:`F`."""
    p = _as_array(phi)
    _check_open_unit(p, "f")
    out = np.log(p) - np.log1p(-p) - 0.5 * theta0 * (2.0 * p - 1.0)
    return _match(out)


def F2(phi, theta0: float):
    """Concave part theta0/2 phi(phi-1); F = F1 - F2."""
    p = _as_array(phi)
    out = 0.5 * theta0 * p * (p - 1.0)
    return _match(out)


def f2(phi, theta0: float):
    """Derivative of :func:`F2`."""
    p = _as_array(phi)
    out = 0.5 * theta0 * (2.0 * p - 1.0)
    return _match(out)


def F1_delta(phi, delta: float):
    """Regularized convex part of the potential.

    For delta > 0 the logarithmic entropy phi ln phi + (1-phi) ln(1-phi) is
    replaced outside (delta, 1-delta) by its quadratic Taylor extension at
    the matching point, which makes the function C^2 and finite on all of R.
    delta = 0 keeps the exact entropy and restricts the domain to (0, 1).
    """
    _check_delta(delta)
    p = _as_array(phi)
    if delta == 0.0:
        _check_open_unit(p, "F1_delta with delta=0")
        out = p * np.log(p) + (1.0 - p) * np.log1p(-p)
        return _match(out)
    out = np.empty_like(p, dtype=np.float64)
    lo = p <= delta
    hi = p >= 1.0 - delta
    mid = ~(lo | hi)
    ld = np.log(delta)
    pm = p[mid]
    out[mid] = pm * np.log(pm) + (1.0 - pm) * np.log1p(-pm)
    pl = p[lo]
    out[lo] = (
        (1.0 - pl) * np.log1p(-pl)
        + 0.5 * (pl - delta) ** 2 / delta
        + (ld + 1.0) * (pl - delta)
        + delta * ld
    )
    ph = p[hi]
    out[hi] = (
        ph * np.log(ph)
        + 0.5 * (ph - 1.0 + delta) ** 2 / delta
        - (ld + 1.0) * (ph - 1.0 + delta)
        + delta * ld
    )
    return _match(out)


def f1_delta(phi, delta: float):
    """Derivative of :func:`F1_delta`; strictly increasing and C^1 on R for delta > 0."""
    _check_delta(delta)
    p = _as_array(phi)
    if delta == 0.0:
        _check_open_unit(p, "f1_delta with delta=0")
        out = np.log(p) - np.log1p(-p)
        return _match(out)
    out = np.empty_like(p, dtype=np.float64)
    lo = p <= delta
    hi = p >= 1.0 - delta
    mid = ~(lo | hi)
    ld = np.log(delta)
    pm = p[mid]
    out[mid] = np.log(pm) - np.log1p(-pm)
    pl = p[lo]
    out[lo] = (pl - delta) / delta + ld - np.log1p(-pl)
    ph = p[hi]
    out[hi] = (ph - 1.0 + delta) / delta + np.log(ph) - ld
    return _match(out)


def f1_delta_prime(phi, delta: float):
    """Second derivative of :func:`F1_delta`; bounded below by 4 for delta <= 1/4."""
    _check_delta(delta)
    p = _as_array(phi)
    if delta == 0.0:
        _check_open_unit(p, "f1_delta_prime with delta=0")
        out = 1.0 / p + 1.0 / (1.0 - p)
        return _match(out)
    out = np.empty_like(p, dtype=np.float64)
    lo = p <= delta
    hi = p >= 1.0 - delta
    mid = ~(lo | hi)
    pm = p[mid]
    out[mid] = 1.0 / pm + 1.0 / (1.0 - pm)
    out[lo] = 1.0 / delta + 1.0 / (1.0 - p[lo])
    out[hi] = 1.0 / delta + 1.0 / p[hi]
    return _match(out)


def h(phi, c):
    """Coupling energy density h(phi, c) = c^2/2 + c(1 - phi)."""
    p = _as_array(phi)
    cc = _as_array(c)
    out = 0.5 * cc * cc + cc * (1.0 - p)
    return _match(out)


def h_c(phi, c):
    """Partial derivative of h with respect to c."""
    p = _as_array(phi)
    cc = _as_array(c)
    out = cc + 1.0 - p
    return _match(out)


def h_phi(phi, c):
    """Partial derivative of h with respect to phi."""
    cc = _as_array(c)
    out = -cc + 0.0 * _as_array(phi)
    return _match(out)


def h1(c):
    """Convex-in-c part c^2/2; h = h1 - h2."""
    cc = _as_array(c)
    out = 0.5 * cc * cc
    return _match(out)


def h2(phi, c):
    """Part treated explicitly in phi: c(phi - 1)."""
    p = _as_array(phi)
    cc = _as_array(c)
    out = cc * (p - 1.0)
    return _match(out)


def m(phi):
    """Degenerate volume-fraction mobility phi^2 (1-phi)^2."""
    p = _as_array(phi)
    out = (p * (1.0 - p)) ** 2
    return _match(out)


def g(c, kind: str = "quadratic"):
    """Solute mobility; ``quadratic`` means g(c) = c^2."""
    if kind not in _G_KINDS:
        raise ValueError(f"unknown g_kind {kind!r}; known: {_G_KINDS}")
    cc = _as_array(c)
    out = cc * cc
    return _match(out)


def mobility_matrix(phi: float, c: float, kind: str = "quadratic") -> np.ndarray:
    """Full 2x2 mobility matrix of the coupled flux; determinant m(phi) g(c)."""
    mm = m(phi)
    gg = g(c, kind)
    return np.array([[mm, -c * mm], [-c * mm, gg + c * c * mm]])
