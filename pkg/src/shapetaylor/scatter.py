"""Incident fields and exterior scattering solvers for four boundary conditions.

The medium equation ``div(alpha grad u) + k^2 u = 0`` with constant ``alpha``
is the Helmholtz equation with effective wavenumber ``k / sqrt(alpha)``;
every kernel and incident field below uses that effective value.

Formulations (outward normal, ``S``/``D``/``K'`` as in :mod:`bie`):

* sound-soft: ``u = D rho - i k S rho``, ``(1/2 + D - i k S) rho = f``.
* sound-hard: ``u = S rho``, ``(-1/2 + K') rho = g``.
* impedance: ``u = D u - S dn u`` with ``alpha dn u + i lam u = g`` on the
  boundary, giving ``u/2 - D u - (i lam/alpha) S u = -S g / alpha``.
* transmission: unknowns are the interior Cauchy data ``(w, q)``, coupled to
  the exterior through the Dirichlet jump ``U - W`` and flux jump
  ``alpha_ex dn U - alpha_in dn W``.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import bie, traces
from .geometry import BoundaryCurve
from .specfun import hankel01

BOUNDARY_CONDITIONS = ("sound_soft", "sound_hard", "impedance", "transmission")


class SourceOnBoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class IncidentField:
    """Plane wave ``exp(i k x.z)`` or point source ``(i/4) H0(k |x - x_s|)``."""

    kind: str
    k: float
    direction: Optional[tuple] = None
    source: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("plane", "point_source"):
            raise ValueError(f"unknown incident kind {self.kind!r}")
        if not self.k > 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if self.kind == "plane":
            z = np.asarray(self.direction, dtype=float)
            if z.shape != (2,) or abs(np.hypot(*z) - 1.0) > 1e-12:
                raise ValueError("plane-wave direction must be a unit 2-vector")
        elif np.asarray(self.source, dtype=float).shape != (2,):
            raise ValueError("point source location must be a 2-vector")

    @classmethod
    def plane(cls, k, direction):
        z = np.asarray(direction, dtype=float)
        z = z / np.hypot(*z)
        return cls("plane", float(k), direction=(float(z[0]), float(z[1])))

    @classmethod
    def point_source(cls, k, source):
        return cls("point_source", float(k), source=tuple(float(c) for c in source))

    def with_wavenumber(self, k):
        return replace(self, k=float(k))

    def value(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "plane":
            return np.exp(1j * self.k * pts @ np.asarray(self.direction))
        d = pts - np.asarray(self.source)
        r = np.hypot(d[:, 0], d[:, 1])
        h0, _, _, _ = hankel01(self.k * r)
        return 0.25j * h0

    def gradient(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "plane":
            z = np.asarray(self.direction)
            return (1j * self.k * self.value(pts))[:, None] * z[None, :]
        d = pts - np.asarray(self.source)
        r = np.hypot(d[:, 0], d[:, 1])
        _, h1, _, _ = hankel01(self.k * r)
        return (-0.25j * self.k * h1 / r)[:, None] * d

    def normal_derivatives(self, curve: BoundaryCurve, max_order=3):
        """``[phi, dn phi, ..., dn^m phi]`` along the normal lines of ``curve``."""
        if not 0 <= max_order <= 3:
            raise ValueError("max_order must be between 0 and 3")
        if self.kind == "plane":
            phi = self.value(curve.position)
            c = 1j * self.k * (curve.normal @ np.asarray(self.direction))
            return [c**m * phi for m in range(max_order + 1)]
        d = curve.position - np.asarray(self.source)
        rho = np.hypot(d[:, 0], d[:, 1])
        if np.min(rho) < curve.node_spacing:
            raise SourceOnBoundaryError("point source lies on the boundary")
        k = self.k
        z = k * rho
        h0, h1, _, _ = hankel01(z)
        # derivatives of f(rho) = (i/4) H0(k rho)
        f = [0.25j * h0, -0.25j * k * h1, -0.25j * k**2 * (h0 - h1 / z),
             0.25j * k**3 * (h1 + h0 / z - 2.0 * h1 / z**2)]
        r1 = np.einsum("ij,ij->i", curve.normal, d) / rho
        r2 = (1.0 - r1 * r1) / rho
        r3 = -3.0 * r1 * r2 / rho
        out = [f[0], f[1] * r1, f[2] * r1**2 + f[1] * r2,
               f[3] * r1**3 + 3.0 * f[2] * r1 * r2 + f[1] * r3]
        return out[: max_order + 1]

    def tangential_derivative(self, curve: BoundaryCurve):
        return np.einsum("ij,ij->i", self.gradient(curve.position), curve.tangent)


@dataclass(frozen=True, eq=False)
class Medium:
    """Material and boundary parameters of a scattering problem."""

    bc: str
    alpha: float = 1.0
    lam: float = 0.0
    alpha_in: float = 1.0
    alpha_ex: float = 1.0

    def __post_init__(self):
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        for name in ("alpha", "alpha_in", "alpha_ex"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def exterior_alpha(self):
        return self.alpha_ex if self.bc == "transmission" else self.alpha


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Right-hand side of a boundary value problem.

    ``primary`` is the Dirichlet value (soft), the flux ``alpha dn u``
    (hard), the impedance combination ``alpha dn u + i lam u`` (impedance)
    or the Dirichlet jump ``U - W`` (transmission). ``secondary`` is the
    flux jump ``alpha_ex dn U - alpha_in dn W`` for transmission.
    """

    primary: np.ndarray
    secondary: Optional[np.ndarray] = None


class ForwardOperator:
    """Discretized and factorized boundary integral system for one geometry.

    Solving with new boundary data reuses the factorizations, which is how
    all shape-derivative orders share the forward operator.
    """

    def __init__(self, curve: BoundaryCurve, k, medium: Medium):
        self.curve = curve
        self.k = float(k)
        self.medium = medium
        n = curve.n_nodes
        eye = np.eye(n)
        bc = medium.bc
        self.k_ex = self.k / math.sqrt(medium.exterior_alpha)
        self.k_in = self.k / math.sqrt(medium.alpha_in) if bc == "transmission" else None
        if bc == "sound_soft":
            ops = bie.assemble_many(("single", "double"), curve, self.k_ex)
            s, d = ops["single"].matrix, ops["double"].matrix
            self.ops = ops
            self.system = bie.factorize(0.5 * eye + d - 1j * self.k_ex * s)
            self.dtn_system = bie.factorize(s)
        elif bc == "sound_hard":
            ops = bie.assemble_many(("single", "adjoint_double"), curve, self.k_ex)
            self.ops = ops
            self.system = bie.factorize(-0.5 * eye + ops["adjoint_double"].matrix)
        elif bc == "impedance":
            ops = bie.assemble_many(("single", "double"), curve, self.k_ex)
            s, d = ops["single"].matrix, ops["double"].matrix
            self.ops = ops
            self.system = bie.factorize(0.5 * eye - d - (1j * medium.lam / medium.alpha) * s)
        else:
            ops_ex = bie.assemble_many(("single", "double"), curve, self.k_ex)
            ops_in = bie.assemble_many(("single", "double"), curve, self.k_in)
            self.ops, self.ops_in = ops_ex, ops_in
            beta = medium.alpha_in / medium.alpha_ex
            s_ex, d_ex = ops_ex["single"].matrix, ops_ex["double"].matrix
            s_in, d_in = ops_in["single"].matrix, ops_in["double"].matrix
            block = np.block([[0.5 * eye + d_in, -s_in],
                              [-0.5 * eye + d_ex, -beta * s_ex]])
            self.system = bie.factorize(block)

    def solve(self, data: BoundaryData) -> "ScatterSolution":
        """Solve for the radiating field with the given boundary data."""
        m = self.medium
        f = np.asarray(data.primary, dtype=complex)
        n = self.curve.n_nodes
        if f.shape != (n,):
            raise ValueError(f"boundary data must have shape ({n},)")
        if m.bc == "sound_soft":
            rho = bie.solve(self.system, f)
            s, d = self.ops["single"].matrix, self.ops["double"].matrix
            dnu = bie.solve(self.dtn_system, -0.5 * f + d @ f)
            return ScatterSolution(self, f, dnu, rho)
        if m.bc == "sound_hard":
            g = f / m.alpha
            rho = bie.solve(self.system, g)
            u = self.ops["single"].matrix @ rho
            return ScatterSolution(self, u, g, rho)
        if m.bc == "impedance":
            s = self.ops["single"].matrix
            u = bie.solve(self.system, -(s @ f) / m.alpha)
            dnu = (f - 1j * m.lam * u) / m.alpha
            return ScatterSolution(self, u, dnu, None)
        if data.secondary is None:
            raise ValueError("transmission data needs both jumps")
        nj = np.asarray(data.secondary, dtype=complex)
        s_ex, d_ex = self.ops["single"].matrix, self.ops["double"].matrix
        rhs = np.concatenate([np.zeros(n, dtype=complex),
                              -(-0.5 * f + d_ex @ f) + s_ex @ nj / m.alpha_ex])
        sol = bie.solve(self.system, rhs)
        w, q = sol[:n], sol[n:]
        u_ex = w + f
        dnu_ex = (m.alpha_in * q + nj) / m.alpha_ex
        return ScatterSolution(self, u_ex, dnu_ex, None, inner_dirichlet=w, inner_neumann=q)


@dataclass(frozen=True, eq=False)
class ScatterSolution:
    """Boundary traces of a radiating field, with the operator that produced them.

    ``dirichlet`` and ``neumann`` are exterior traces of the scattered field.
    For transmission ``inner_dirichlet`` and ``inner_neumann`` hold the
    traces of the interior field (the total field inside).
    """

    operator: ForwardOperator
    dirichlet: np.ndarray
    neumann: np.ndarray
    density: Optional[np.ndarray] = None
    inner_dirichlet: Optional[np.ndarray] = None
    inner_neumann: Optional[np.ndarray] = None
    incident: Optional[IncidentField] = None

    @property
    def curve(self) -> BoundaryCurve:
        return self.operator.curve

    @property
    def bc(self) -> str:
        return self.operator.medium.bc

    @property
    def medium(self) -> Medium:
        return self.operator.medium

    @property
    def k(self) -> float:
        return self.operator.k

    def eval_exterior(self, points):
        op = self.operator
        c, k = self.curve, op.k_ex
        if self.bc == "sound_soft":
            return (bie.eval_potential("double", self.density, c, points, k)
                    - 1j * k * bie.eval_potential("single", self.density, c, points, k))
        if self.bc == "sound_hard":
            return bie.eval_potential("single", self.density, c, points, k)
        return (bie.eval_potential("double", self.dirichlet, c, points, k)
                - bie.eval_potential("single", self.neumann, c, points, k))

    def eval_interior(self, points):
        if self.bc != "transmission":
            raise ValueError("interior field exists only for transmission problems")
        c, k = self.curve, self.operator.k_in
        return (bie.eval_potential("single", self.inner_neumann, c, points, k)
                - bie.eval_potential("double", self.inner_dirichlet, c, points, k))

    def eval(self, points, inside=None):
        """Field values at off-boundary points.

        Exterior points give the scattered field. For transmission, interior
        points (auto-detected by winding number unless ``inside`` is given)
        give the interior field.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.bc != "transmission":
            return self.eval_exterior(pts)
        if inside is None:
            inside = self.curve.contains(pts)
        inside = np.asarray(inside, dtype=bool)
        out = np.empty(len(pts), dtype=complex)
        if np.any(inside):
            out[inside] = self.eval_interior(pts[inside])
        if np.any(~inside):
            out[~inside] = self.eval_exterior(pts[~inside])
        return out

    def eval_total(self, points, inside=None):
        """Total field: incident plus scattered outside, interior field inside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if inside is None:
            inside = self.curve.contains(pts)
        inside = np.asarray(inside, dtype=bool)
        out = self.eval(pts, inside)
        phi = self.operator_incident().value(pts)
        if self.bc == "transmission":
            return np.where(inside, out, out + phi)
        return out + phi

    def operator_incident(self) -> IncidentField:
        if self.incident is None:
            raise ValueError("solution carries no incident field")
        return self.incident.with_wavenumber(self.operator.k_ex)

    def boundary_residual(self) -> float:
        """Max nodewise residual of the boundary condition for the total field."""
        phi, dphi = self.operator_incident().normal_derivatives(self.curve, 1)
        m = self.medium
        if self.bc == "sound_soft":
            res = self.dirichlet + phi
        elif self.bc == "sound_hard":
            res = m.alpha * (self.neumann + dphi)
        elif self.bc == "impedance":
            res = m.alpha * (self.neumann + dphi) + 1j * m.lam * (self.dirichlet + phi)
        else:
            r1 = self.dirichlet + phi - self.inner_dirichlet
            r2 = m.alpha_ex * (self.neumann + dphi) - m.alpha_in * self.inner_neumann
            res = np.maximum(np.abs(r1), np.abs(r2))
        return float(np.max(np.abs(res)))

    def dtn_residual(self) -> float:
        op = self.operator
        return traces.dtn_residual(self.dirichlet, self.neumann, self.curve, op.k_ex,
                                   ops=op.ops if "double" in op.ops else None)


def incident_data(operator: ForwardOperator, field: IncidentField) -> BoundaryData:
    """Boundary data that cancels the incident field."""
    m = operator.medium
    phi, dphi = field.with_wavenumber(operator.k_ex).normal_derivatives(operator.curve, 1)
    if m.bc == "sound_soft":
        return BoundaryData(-phi)
    if m.bc == "sound_hard":
        return BoundaryData(-m.alpha * dphi)
    if m.bc == "impedance":
        return BoundaryData(-(m.alpha * dphi + 1j * m.lam * phi))
    return BoundaryData(-phi, -m.alpha_ex * dphi)


def _forward(curve, field, medium):
    _check_source(curve, field)
    op = ForwardOperator(curve, field.k, medium)
    sol = op.solve(incident_data(op, field))
    return replace(sol, incident=field)


def _check_source(curve, field):
    if field.kind == "point_source":
        src = np.asarray(field.source)[None, :]
        if curve.distance(src)[0] < curve.node_spacing:
            raise SourceOnBoundaryError("point source lies on the boundary")


def solve_sound_soft(curve: BoundaryCurve, field: IncidentField, alpha=1.0) -> ScatterSolution:
    return _forward(curve, field, Medium("sound_soft", alpha=alpha))


def solve_sound_hard(curve: BoundaryCurve, field: IncidentField, alpha=1.0) -> ScatterSolution:
    return _forward(curve, field, Medium("sound_hard", alpha=alpha))


def solve_impedance(curve: BoundaryCurve, field: IncidentField, lam, alpha=1.0) -> ScatterSolution:
    return _forward(curve, field, Medium("impedance", alpha=alpha, lam=float(lam)))


def solve_transmission(curve: BoundaryCurve, field: IncidentField, alpha_in, alpha_ex=1.0) -> ScatterSolution:
    return _forward(curve, field, Medium("transmission", alpha_in=alpha_in, alpha_ex=alpha_ex))


def solve(curve: BoundaryCurve, field: IncidentField, medium: Medium) -> ScatterSolution:
    """Dispatch on ``medium.bc``."""
    return _forward(curve, field, medium)
