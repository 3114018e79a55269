"""Boundary traces of Helmholtz solutions: tangential and high-order normal derivatives.

All formulas assume ``(Delta + k^2) u = 0`` near the curve, with ``k`` the
effective wavenumber of the medium. Normal derivatives are taken along the
straight normal line through each node (the coordinate ``eta`` of the
local frame ``x = gamma(s) + eta n(s)``).
"""

from dataclasses import dataclass

import numpy as np

from . import bie
from .geometry import BoundaryCurve


def tangential_derivative(values, curve: BoundaryCurve, order=1):
    """Arc-length derivative of node samples, exact on trigonometric polynomials."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return curve.arc_derivative(values, order)


def normal_derivative_2(u, dnu, curve: BoundaryCurve, k):
    """Second normal derivative ``-kappa dn u - dtau^2 u - k^2 u``."""
    u = np.asarray(u)
    d2u = curve.arc_derivative(u, 2)
    return -curve.curvature * np.asarray(dnu) - d2u - k * k * u


def normal_derivative_3(u, dnu, curve: BoundaryCurve, k):
    """Third normal derivative on a general smooth curve."""
    u = np.asarray(u)
    dnu = np.asarray(dnu)
    kap = curve.curvature
    du = curve.arc_derivative(u)
    d2u = curve.arc_derivative(du)
    d2dnu = curve.arc_derivative(dnu, 2)
    return (3.0 * kap * d2u + curve.dcurvature * du + k * k * kap * u
            - d2dnu + (2.0 * kap * kap - k * k) * dnu)


def normal_derivatives(u, dnu, curve: BoundaryCurve, k, max_order=3):
    """List ``[u, dn u, dn^2 u, ...]`` up to ``max_order`` (at most 3)."""
    if max_order > 3:
        raise ValueError("normal derivatives on general curves are available up to order 3")
    out = [np.asarray(u), np.asarray(dnu)]
    if max_order >= 2:
        out.append(normal_derivative_2(u, dnu, curve, k))
    if max_order >= 3:
        out.append(normal_derivative_3(u, dnu, curve, k))
    return out[: max_order + 1]


# Polynomials in 1/chi are stored as {power: coefficient}.

def _padd(p, q):
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0.0) + c
    return {e: c for e, c in out.items() if c != 0.0}


def _pmul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            out[e1 + e2] = out.get(e1 + e2, 0.0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0.0}


def _pdeta(p, kappa):
    # d/deta chi^-p = -p kappa chi^(-p-1)
    return {e + 1: -e * kappa * c for e, c in p.items() if e != 0}


@dataclass(frozen=True)
class NormalDerivativeCoefficients:
    """Coefficients of ``dn^N u = sum a_i dtau^i u + sum b_j dtau^j dn u`` on a circle.

    ``a`` has ``N + 1`` entries and ``b`` has ``N``, both evaluated on the curve.
    """

    order: int
    a: tuple
    b: tuple
    kappa: float
    k: float


def circle_normal_coefficients(order, radius, k) -> NormalDerivativeCoefficients:
    """Recurrence for the normal-derivative coefficients on a circle of given radius."""
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    if not radius > 0:
        raise ValueError("radius must be positive")
    kap = 1.0 / radius
    a2 = [{0: -k * k}, {}, {2: -1.0}]
    b2 = [{1: -kap}, {}]
    a, b = a2, b2
    for _ in range(2, order):
        n = len(a) - 1
        new_a = []
        for i in range(n + 2):
            term = _pdeta(a[i], kap) if i <= n else {}
            for shift, coef in ((0, a2[0]), (1, a2[1]), (2, a2[2])):
                j = i - shift
                if 0 <= j < len(b):
                    term = _padd(term, _pmul(b[j], coef))
            new_a.append(term)
        new_b = []
        for j in range(n + 1):
            term = dict(a[j])
            if j < len(b):
                term = _padd(term, _pdeta(b[j], kap))
                term = _padd(term, _pmul(b[j], b2[0]))
            if 0 <= j - 1 < len(b):
                term = _padd(term, _pmul(b[j - 1], b2[1]))
            new_b.append(term)
        a, b = new_a, new_b

    def at_zero(p):
        return float(sum(p.values()))

    return NormalDerivativeCoefficients(order, tuple(at_zero(p) for p in a),
                                        tuple(at_zero(p) for p in b), kap, float(k))


def circle_normal_derivative(order, u, dnu, curve: BoundaryCurve, k):
    """``dn^N u`` on a circle from the Cauchy data via the coefficient recurrence."""
    if not curve.is_circle:
        raise ValueError("circle_normal_derivative requires a circle")
    if order == 0:
        return np.asarray(u)
    if order == 1:
        return np.asarray(dnu)
    coef = circle_normal_coefficients(order, curve.params["radius"], k)
    out = np.zeros(curve.n_nodes, dtype=complex)
    du = np.asarray(u, dtype=complex)
    for i, a in enumerate(coef.a):
        if i:
            du = curve.arc_derivative(du)
        if a:
            out += a * du
    dq = np.asarray(dnu, dtype=complex)
    for j, bj in enumerate(coef.b):
        if j:
            dq = curve.arc_derivative(dq)
        if bj:
            out += bj * dq
    return out


def _calderon_ops(curve, k, ops):
    if ops is None:
        ops = bie.assemble_many(("single", "double"), curve, k)
    return ops["single"].matrix, ops["double"].matrix


def dtn(u, curve: BoundaryCurve, k, ops=None, system=None):
    """Neumann trace of a radiating solution from its Dirichlet trace.

    Solves ``S dn u = (-1/2 + D) u``. ``system`` may carry a factorization
    of ``S`` to be reused.
    """
    s, d = _calderon_ops(curve, k, ops)
    if system is None:
        system = bie.factorize(s)
    return bie.solve(system, -0.5 * np.asarray(u) + d @ np.asarray(u))


def ntd(dnu, curve: BoundaryCurve, k, ops=None, system=None):
    """Dirichlet trace of a radiating solution from its Neumann trace."""
    s, d = _calderon_ops(curve, k, ops)
    if system is None:
        system = bie.factorize(d - 0.5 * np.eye(curve.n_nodes))
    return bie.solve(system, s @ np.asarray(dnu))


def dtn_residual(u, dnu, curve: BoundaryCurve, k, ops=None):
    """Max-norm residual of ``S dn u - (-1/2 + D) u``, relative to the trace size."""
    s, d = _calderon_ops(curve, k, ops)
    res = s @ dnu + 0.5 * u - d @ u
    scale = max(np.max(np.abs(u)), np.max(np.abs(dnu)), 1e-300)
    return float(np.max(np.abs(res)) / scale)


def moving_kernel_operator(j, kind, curve: BoundaryCurve, k) -> bie.BoundaryOperator:
    """Nystrom matrix of the operator with kernel ``(d_t + d_s) G`` (``j = 1`` only)."""
    if j != 1:
        raise ValueError("only j = 1 is supported")
    if kind not in ("single", "double"):
        raise ValueError(f"kind must be 'single' or 'double', got {kind!r}")
    return bie.assemble_moving(kind, curve, k)
