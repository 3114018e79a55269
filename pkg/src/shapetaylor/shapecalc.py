"""Shape derivatives of scattered fields and shape Taylor expansions.

A shape derivative ``delta_{[v_1..v_N]} u`` is a radiating Helmholtz
solution with the same operator as the forward problem; only its boundary
data changes. The data follow from differentiating the boundary condition
on the perturbed curve ``gamma + (sum eps_i v_i) n`` and are built from the
normal derivatives of lower-order derivatives.

Derivatives are keyed by sorted tuples of field indices: ``()`` is the
forward solution, ``(0,)`` is ``delta_{v_0} u``, ``(0, 0)`` is
``delta_{[v_0, v_0]} u`` and ``(0, 3)`` the mixed second derivative.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from . import traces
from .geometry import BoundaryCurve, VelocityField, perturb
from .scatter import BoundaryData, ScatterSolution, solve as forward_solve

MAX_ORDER = {"sound_soft": 3, "sound_hard": 2, "impedance": 2, "transmission": 2}
FORMULAS = ("corrected", "uncorrected")


class MissingOrderError(KeyError):
    pass


class UnsupportedOrderError(ValueError):
    pass


def _key(idx):
    return tuple(sorted(idx))


@dataclass(eq=False)
class DerivativeStack:
    """Forward solution plus shape derivatives sharing its factorized operator."""

    forward: ScatterSolution
    fields: List[VelocityField]
    formula: str = "corrected"
    entries: Dict[tuple, ScatterSolution] = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.entries.setdefault((), self.forward)

    @property
    def curve(self) -> BoundaryCurve:
        return self.forward.curve

    @property
    def bc(self) -> str:
        return self.forward.bc

    @property
    def incident(self):
        return self.forward.operator_incident()

    @property
    def max_order(self) -> int:
        return max(len(key) for key in self.entries)

    def entry(self, idx) -> ScatterSolution:
        key = _key(idx)
        if key not in self.entries:
            raise MissingOrderError(f"shape derivative {key} has not been computed")
        return self.entries[key]

    def normal_derivatives(self, idx, side="ex"):
        """``[f, dn f, dn^2 f, dn^3 f]`` for ``f = delta_idx`` of the total field.

        On the exterior side the total field includes the incident wave at
        order zero; on the interior side (transmission) it is the interior field.
        """
        key = (_key(idx), side)
        if key in self._cache:
            return self._cache[key]
        sol = self.entry(idx)
        op = sol.operator
        if side == "ex":
            k = op.k_ex
            derivs = traces.normal_derivatives(sol.dirichlet, sol.neumann, self.curve, k, 3)
            if not key[0]:
                inc = self.incident.normal_derivatives(self.curve, 3)
                derivs = [d + p for d, p in zip(derivs, inc)]
        else:
            if op.k_in is None:
                raise ValueError("interior side exists only for transmission problems")
            derivs = traces.normal_derivatives(sol.inner_dirichlet, sol.inner_neumann,
                                               self.curve, op.k_in, 3)
        self._cache[key] = derivs
        return derivs

    def eval(self, idx, points, inside=None):
        return self.entry(idx).eval(points, inside)


def _dirichlet_type(stack, idx, side="ex"):
    """Data for ``delta_idx`` of a quantity whose total value vanishes on the boundary.

    ``-sum_{B nonempty} prod_{i in B} v_i dn^|B| delta_{idx minus B} u_tot``.
    """
    n = len(idx)
    out = np.zeros(stack.curve.n_nodes, dtype=complex)
    for size in range(1, n + 1):
        for sub in itertools.combinations(range(n), size):
            rest = tuple(idx[i] for i in range(n) if i not in sub)
            amp = np.ones(stack.curve.n_nodes)
            for i in sub:
                amp = amp * stack.fields[idx[i]].values
            out -= amp * stack.normal_derivatives(rest, side)[size]
    return out


def _flux_type_uncorrected(stack, idx):
    """Second-order sound-hard data with the uncorrected normal variation.

    This variant carries a wrong second variation of the normal and fails the
    finite-difference check; it is kept to reproduce reference error tables
    that were computed with it.
    """
    curve = stack.curve
    iv, iw = idx
    v, w = stack.fields[iv], stack.fields[iw]
    tot = stack.normal_derivatives(())
    dv = stack.normal_derivatives((iv,))
    dw = stack.normal_derivatives((iw,))
    kap = curve.curvature
    dtau_u = curve.arc_derivative(tot[0])
    sym = v.values * w.dvalues + w.values * v.dvalues
    return (-w.values * dv[2] - w.values * kap * dv[1] + w.dvalues * curve.arc_derivative(dv[0])
            - v.values * dw[2] - v.values * kap * dw[1] + v.dvalues * curve.arc_derivative(dw[0])
            - v.values * w.values * tot[3] - 2.0 * v.values * w.values * kap * tot[2]
            + 0.5 * sym * kap * dtau_u)


def _flux_type(stack, idx, lam_over_alpha=0.0, side="ex"):
    """Data for ``delta_idx`` of ``dn u_tot + c u_tot`` where that combination vanishes.

    Returns the right-hand side for ``dn delta u + c delta u`` with
    ``c = lam_over_alpha`` (``i lam / alpha`` enters as ``1j * c``).
    """
    curve = stack.curve
    c = 1j * lam_over_alpha
    tot = stack.normal_derivatives((), side)
    if len(idx) == 1:
        v = stack.fields[idx[0]]
        dtau = curve.arc_derivative(tot[0])
        return -v.values * tot[2] - c * v.values * tot[1] + v.dvalues * dtau
    if len(idx) != 2:
        raise UnsupportedOrderError("flux-type shape derivative data are available up to order 2")
    iv, iw = idx
    v, w = stack.fields[iv], stack.fields[iw]
    dv = stack.normal_derivatives((iv,), side)
    dw = stack.normal_derivatives((iw,), side)
    kap = curve.curvature
    sym = v.values * w.dvalues + w.values * v.dvalues
    dtau_u = curve.arc_derivative(tot[0])
    dtau_dn_u = curve.arc_derivative(tot[1])
    out = (v.dvalues * w.dvalues * tot[1]
           - 2.0 * sym * kap * dtau_u
           + v.dvalues * curve.arc_derivative(dw[0])
           + w.dvalues * curve.arc_derivative(dv[0])
           + sym * dtau_dn_u
           - v.values * dw[2] - w.values * dv[2]
           - v.values * w.values * tot[3])
    out -= c * (v.values * dw[1] + w.values * dv[1] + v.values * w.values * tot[2])
    return out


def soft_rhs(stack: DerivativeStack, idx) -> np.ndarray:
    """Dirichlet data of ``delta_idx u`` for a sound-soft obstacle."""
    _check_order(stack, idx)
    return _dirichlet_type(stack, _key(idx))


def hard_rhs(stack: DerivativeStack, idx) -> np.ndarray:
    """Flux data ``alpha dn delta_idx u`` for a sound-hard obstacle."""
    _check_order(stack, idx)
    key = _key(idx)
    if stack.formula == "uncorrected" and len(key) == 2:
        return stack.forward.medium.alpha * _flux_type_uncorrected(stack, key)
    return stack.forward.medium.alpha * _flux_type(stack, key)


def impedance_rhs(stack: DerivativeStack, idx) -> np.ndarray:
    """Data ``alpha dn delta u + i lam delta u`` for an impedance obstacle."""
    _check_order(stack, idx)
    m = stack.forward.medium
    return m.alpha * _flux_type(stack, _key(idx), m.lam / m.alpha)


def transmission_rhs(stack: DerivativeStack, idx):
    """Dirichlet jump ``delta U - delta W`` and flux jump data across the interface."""
    _check_order(stack, idx)
    key = _key(idx)
    m = stack.forward.medium
    dj = _dirichlet_type(stack, key, "ex") - _dirichlet_type(stack, key, "in")
    nj = m.alpha_ex * _flux_type(stack, key, 0.0, "ex") - m.alpha_in * _flux_type(stack, key, 0.0, "in")
    return dj, nj


def _check_order(stack, idx):
    n = len(idx)
    if n < 1:
        raise UnsupportedOrderError("shape derivative data need order >= 1")
    if n > MAX_ORDER[stack.bc]:
        raise UnsupportedOrderError(
            f"order {n} exceeds the supported maximum {MAX_ORDER[stack.bc]} for {stack.bc}")


def boundary_data(stack: DerivativeStack, idx) -> BoundaryData:
    bc = stack.bc
    if bc == "sound_soft":
        return BoundaryData(soft_rhs(stack, idx))
    if bc == "sound_hard":
        return BoundaryData(hard_rhs(stack, idx))
    if bc == "impedance":
        return BoundaryData(impedance_rhs(stack, idx))
    return BoundaryData(*transmission_rhs(stack, idx))


def add_derivative(stack: DerivativeStack, idx) -> ScatterSolution:
    """Solve for ``delta_idx u`` (all lower orders must already be present)."""
    key = _key(idx)
    if key not in stack.entries:
        stack.entries[key] = stack.forward.operator.solve(boundary_data(stack, key))
    return stack.entries[key]


def build_stack(forward: ScatterSolution, fields, max_order, mixed=False,
                formula="corrected") -> DerivativeStack:
    """Shape derivatives up to ``max_order`` for one or more velocity fields.

    With several fields, pure derivatives ``(i, i, ...)`` are built for each
    field; ``mixed=True`` adds the mixed second derivatives ``(i, j)``.
    ``formula="uncorrected"`` switches second-order sound-hard data to the
    uncorrected form, for table reproduction only.
    """
    if formula not in FORMULAS:
        raise ValueError(f"formula must be one of {FORMULAS}, got {formula!r}")
    if formula == "uncorrected" and forward.bc != "sound_hard":
        raise ValueError("the uncorrected variant exists only for sound-hard data")
    if isinstance(fields, VelocityField):
        fields = [fields]
    fields = list(fields)
    limit = MAX_ORDER[forward.bc]
    if not 0 <= max_order <= limit:
        raise UnsupportedOrderError(f"max_order must be in [0, {limit}] for {forward.bc}")
    stack = DerivativeStack(forward, fields, formula)
    for order in range(1, max_order + 1):
        for i in range(len(fields)):
            add_derivative(stack, (i,) * order)
        if mixed and order == 2:
            for i, j in itertools.combinations(range(len(fields)), 2):
                add_derivative(stack, (i, j))
    return stack


def taylor_terms(stack: DerivativeStack, points, order=None, field_index=0, inside=None):
    """Values of ``delta^m u`` for ``m = 0..order`` at ``points`` (single field)."""
    order = stack.max_order if order is None else order
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if inside is None:
        inside = stack.curve.contains(pts)
    return [stack.eval((field_index,) * m, pts, inside) for m in range(order + 1)]


def taylor_eval(stack: DerivativeStack, eps, points, order=None, field_index=0, inside=None):
    """Shape Taylor polynomial ``sum_m eps^m / m! delta^m u`` at ``points``."""
    terms = taylor_terms(stack, points, order, field_index, inside)
    return _combine(terms, eps)


def _combine(terms, eps):
    out = np.zeros_like(terms[0])
    for m, t in enumerate(terms):
        out = out + eps**m / math.factorial(m) * t
    return out


def perturbed_solution(stack: DerivativeStack, eps, field_index=0) -> ScatterSolution:
    """Forward solution on the curve displaced by ``eps * v``."""
    fwd = stack.forward
    if eps == 0:
        return fwd
    curve = perturb(stack.curve, [stack.fields[field_index]], [eps])
    return forward_solve(curve, fwd.incident, fwd.medium)


def residual(stack: DerivativeStack, eps, obs_points, order=None, field_index=0, perturbed=None):
    """``(sum_j |u_eps(x_j) - Taylor(x_j)|)^(1/(N+1))`` over the observation points."""
    order = stack.max_order if order is None else order
    if eps == 0:
        return 0.0
    pts = np.atleast_2d(np.asarray(obs_points, dtype=float))
    inside = stack.curve.contains(pts)
    if perturbed is None:
        perturbed = perturbed_solution(stack, eps, field_index)
    exact = perturbed.eval(pts, inside)
    approx = taylor_eval(stack, eps, pts, order, field_index, inside)
    return float(np.sum(np.abs(exact - approx)) ** (1.0 / (order + 1)))


def relative_error(stack: DerivativeStack, eps, point, order=None, field_index=0, perturbed=None):
    """``|u_eps(x) - Taylor(x)| / |u_eps(x)|`` for the scattered (or interior) field."""
    order = stack.max_order if order is None else order
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    inside = stack.curve.contains(pts)
    if perturbed is None:
        perturbed = perturbed_solution(stack, eps, field_index)
    exact = perturbed.eval(pts, inside)
    approx = taylor_eval(stack, eps, pts, order, field_index, inside)
    return float(np.abs(exact - approx)[0] / np.abs(exact)[0])


def observation_ring(radius, count, center=(0.0, 0.0)):
    """``count`` equispaced points on a circle."""
    th = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([radius * np.cos(th), radius * np.sin(th)]) + np.asarray(center, dtype=float)
