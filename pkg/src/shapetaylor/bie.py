"""Helmholtz layer operators by Kress' logarithmic-splitting Nystrom method.

For a ``2*pi``-periodic parametrization with ``n_nodes = 2m`` nodes, a kernel
``K(t, s)`` with a logarithmic singularity is split as

    K(t, s) = K1(t, s) * log(4 sin^2((t - s) / 2)) + K2(t, s)

with ``K1``, ``K2`` smooth. ``K1`` is integrated with the trigonometric
product weights ``R_j(t)`` and ``K2`` with the trapezoid rule. Every kernel
here is of the form ``c(t, s) * H_nu(k r)``; its ``K1`` is ``c * (i/pi) J_nu(k r)``.

Normalisation: ``G(x, y) = (i/4) H0(k|x - y|)``, operators integrate with
respect to arc length and carry no factor 2. With outward normals the
exterior traces are ``S rho -> S rho`` and ``D rho -> +rho/2 + D rho``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import BoundaryCurve
from .specfun import EULER_GAMMA, hankel01

KINDS = ("single", "double", "adjoint_double", "identity")


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class IllConditionedWarning(RuntimeWarning):
    pass


class NearBoundaryWarning(RuntimeWarning):
    pass


def greens_function(k, x, y):
    """Free-space Green's function ``(i/4) H0(1)(k|x - y|)``."""
    r = float(np.hypot(*(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
    if r == 0.0:
        raise ValueError("Green's function is singular at x = y")
    h0, _, _, _ = hankel01(np.array([k * r]))
    return complex(0.25j * h0[0])


def kress_weights(n_nodes):
    """Circulant matrix ``R[i, j]`` of the log-weighted trigonometric quadrature."""
    m = n_nodes // 2
    d = np.arange(n_nodes)
    ms = np.arange(1, m)
    angles = np.pi * d[:, None] * ms[None, :] / m
    row = -(2.0 * np.pi / m) * np.sum(np.cos(angles) / ms, axis=1)
    row -= (np.pi / m**2) * np.cos(np.pi * d)
    idx = (d[:, None] - d[None, :]) % n_nodes
    return row[idx]


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    """Nystrom matrix of a boundary integral operator on a curve."""

    matrix: np.ndarray
    kind: str
    k: float
    curve: BoundaryCurve

    def __matmul__(self, values):
        return self.matrix @ values

    def apply(self, values):
        return self.matrix @ values


class _Geometry:
    """Pairwise node quantities shared by all kernels on one curve."""

    def __init__(self, curve: BoundaryCurve, k: float):
        n = curve.n_nodes
        self.curve = curve
        self.k = k
        pos = curve.position
        self.diff = pos[:, None, :] - pos[None, :, :]  # x_i - y_j
        r = np.hypot(self.diff[..., 0], self.diff[..., 1])
        np.fill_diagonal(r, 1.0)
        self.r = r
        self.h0, self.h1, self.j0, self.j1 = hankel01(k * r)
        t = curve.nodes
        s = np.sin(0.5 * (t[:, None] - t[None, :]))
        logsin = np.log(np.where(np.eye(n, dtype=bool), 1.0, 4.0 * s * s))
        self.logsin = logsin
        self.R = kress_weights(n)
        self.trap = 2.0 * np.pi / n
        self.diag = np.eye(n, dtype=bool)

    def combine(self, k1, k_full, diag_k2):
        k2 = k_full - k1 * self.logsin
        k2[self.diag] = diag_k2
        k1 = k1.copy()
        k1[self.diag] = np.diag(k1)
        return self.R * k1 + self.trap * k2


def _single(g: _Geometry):
    speed = g.curve.speed
    k = g.k
    full = 0.25j * g.h0 * speed[None, :]
    k1 = -g.j0 * speed[None, :] / (4.0 * np.pi)
    np.fill_diagonal(k1, -speed / (4.0 * np.pi))
    diag = (0.25j - EULER_GAMMA / (2.0 * np.pi) - np.log(0.5 * k * speed) / (2.0 * np.pi)) * speed
    return g.combine(k1, full, diag)


def _double(g: _Geometry):
    c = g.curve
    k = g.k
    # speed-scaled source normal: (y2', -y1')
    nt = np.column_stack([c.d1[:, 1], -c.d1[:, 0]])
    ndot = np.einsum("ijk,jk->ij", g.diff, nt) / g.r
    full = 0.25j * k * ndot * g.h1
    k1 = -(k / (4.0 * np.pi)) * ndot * g.j1
    np.fill_diagonal(k1, 0.0)
    diag = -c.curvature * c.speed / (4.0 * np.pi)
    return g.combine(k1, full, diag)


def _adjoint_double(g: _Geometry):
    c = g.curve
    k = g.k
    ndot = np.einsum("ijk,ik->ij", g.diff, c.normal) / g.r
    w = c.speed[None, :]
    full = -0.25j * k * ndot * g.h1 * w
    k1 = (k / (4.0 * np.pi)) * ndot * g.j1 * w
    np.fill_diagonal(k1, 0.0)
    diag = -c.curvature * c.speed / (4.0 * np.pi)
    return g.combine(k1, full, diag)


_BUILDERS = {"single": _single, "double": _double, "adjoint_double": _adjoint_double}


def assemble(kind, curve: BoundaryCurve, k) -> BoundaryOperator:
    """Nystrom matrix of ``S``, ``D``, ``K'`` or the identity on ``curve``."""
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    if kind == "identity":
        return BoundaryOperator(np.eye(curve.n_nodes, dtype=complex), kind, k, curve)
    return assemble_many((kind,), curve, k)[kind]


def assemble_many(kinds, curve: BoundaryCurve, k):
    """Assemble several operators sharing one evaluation of the Hankel kernels."""
    g = _Geometry(curve, k)
    return {kind: BoundaryOperator(_BUILDERS[kind](g), kind, k, curve) for kind in kinds}


@dataclass(frozen=True, eq=False)
class FactorizedSystem:
    """LU factorization (partial pivoting) of a square complex matrix."""

    lu: np.ndarray
    piv: np.ndarray
    rcond: float

    @property
    def size(self) -> int:
        return self.lu.shape[0]

    @property
    def condition_estimate(self) -> float:
        return np.inf if self.rcond == 0 else 1.0 / self.rcond


def factorize(matrix, warn_condition=1e12) -> FactorizedSystem:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) <= 1e-14 * max(np.max(pivots), np.finfo(float).tiny):
        raise SingularMatrixError("matrix is numerically singular")
    anorm = np.linalg.norm(a, 1)
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, anorm, norm="1")
    rcond = float(rcond)
    if rcond * warn_condition < 1.0:
        warnings.warn(
            f"condition number estimate {1.0 / max(rcond, 1e-300):.3g} exceeds {warn_condition:.0e}; "
            "the wavenumber may be close to a resonance",
            IllConditionedWarning,
            stacklevel=2,
        )
    return FactorizedSystem(lu, piv, rcond)


def solve(system: FactorizedSystem, rhs):
    return scipy.linalg.lu_solve((system.lu, system.piv), np.asarray(rhs, dtype=complex))


def _check_points(curve, points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 2:
        raise ValueError("points must have shape (m, 2)")
    dist = curve.distance(pts)
    if np.any(dist < curve.node_spacing):
        warnings.warn(
            "evaluation point closer to the boundary than one node spacing; "
            "the trapezoid rule loses accuracy there",
            NearBoundaryWarning,
            stacklevel=3,
        )
    return pts


def eval_potential(kind, density, curve: BoundaryCurve, points, k):
    """Single- or double-layer potential of node samples ``density`` at off-curve points."""
    pts = _check_points(curve, points)
    diff = pts[:, None, :] - curve.position[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    h0, h1, _, _ = hankel01(k * r)
    trap = 2.0 * np.pi / curve.n_nodes
    density = np.asarray(density)
    if kind == "single":
        ker = 0.25j * h0 * curve.speed[None, :]
    elif kind == "double":
        nt = np.column_stack([curve.d1[:, 1], -curve.d1[:, 0]])
        ker = 0.25j * k * h1 * np.einsum("ijk,jk->ij", diff, nt) / r
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    return trap * (ker @ density)


def _moving_single(g: _Geometry):
    c = g.curve
    k = g.k
    tau = c.tangent
    dtau = tau[:, None, :] - tau[None, :, :]
    a = np.einsum("ijk,ijk->ij", g.diff, dtau) / g.r
    w = c.speed[None, :]
    full = -0.25j * k * g.h1 * a * w
    k1 = (k / (4.0 * np.pi)) * g.j1 * a * w
    np.fill_diagonal(k1, 0.0)
    return g.combine(k1, full, 0.0)


def _moving_double(g: _Geometry):
    c = g.curve
    k = g.k
    r = g.r
    tau, nrm = c.tangent, c.normal
    dtau = tau[:, None, :] - tau[None, :, :]
    a = np.einsum("ijk,ijk->ij", g.diff, dtau) / r
    b = np.einsum("ijk,jk->ij", g.diff, nrm)
    cc = np.einsum("ijk,jk->ij", dtau, nrm) + c.curvature[None, :] * np.einsum("ijk,jk->ij", g.diff, tau)
    w = c.speed[None, :]
    full = 0.25j * k * ((k * g.h0 / r - 2.0 * g.h1 / r**2) * a * b + g.h1 * cc / r) * w
    k1 = -(k / (4.0 * np.pi)) * ((k * g.j0 / r - 2.0 * g.j1 / r**2) * a * b + g.j1 * cc / r) * w
    np.fill_diagonal(k1, 0.0)
    diag = -c.dcurvature * c.speed / (4.0 * np.pi)
    return g.combine(k1, full, diag)


def assemble_moving(kind, curve: BoundaryCurve, k) -> BoundaryOperator:
    """Operators with kernel ``(d/dt + d/ds)`` applied to ``G`` or ``dG/dn(s)``.

    Derivatives are with respect to arc length at the target ``t`` and the
    source ``s``; for the double layer the source normal moves with ``s``.
    """
    builder = {"single": _moving_single, "double": _moving_double}[kind]
    return BoundaryOperator(builder(_Geometry(curve, k)), "moving_" + kind, k, curve)
