"""Closed parametrized curves, normal velocity fields and frame shape derivatives.

Curves are sampled at equidistant nodes ``t_j = 2*pi*j/n`` of their native
parameter. Arc-length derivatives are obtained with the chain rule
``d/ds = |gamma'(t)|**-1 d/dt`` and trigonometric (FFT) differentiation.

Orientation is counter-clockwise with ``n = [tau_2, -tau_1]`` pointing out of
the enclosed domain, and curvature is signed so that ``dn/ds = kappa * tau``.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_NODES = 400


class SelfIntersectionError(ValueError):
    """Raised when a normal offset would fold the curve onto itself."""


def spectral_derivative(values, order=1):
    """Derivative of periodic samples with respect to a ``2*pi``-periodic parameter.

    Works along the first axis, so position arrays of shape ``(n, 2)`` are
    differentiated componentwise.
    """
    values = np.asarray(values)
    n = values.shape[0]
    freqs = np.fft.fftfreq(n, d=1.0 / n)
    if order % 2 == 1 and n % 2 == 0:
        freqs[n // 2] = 0.0
    mult = (1j * freqs) ** order
    mult = mult.reshape((n,) + (1,) * (values.ndim - 1))
    out = np.fft.ifft(mult * np.fft.fft(values, axis=0), axis=0)
    if np.isrealobj(values):
        return out.real
    return out


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Sampled smooth closed curve.

    Attributes
    ----------
    position : ndarray, shape (n, 2)
        Node positions ``gamma(t_j)``.
    d1 : ndarray, shape (n, 2)
        Parameter derivative ``gamma'(t_j)``.
    d2 : ndarray, shape (n, 2)
        Second parameter derivative ``gamma''(t_j)``.
    curvature : ndarray, shape (n,)
        Signed curvature, positive for convex counter-clockwise curves.
    dcurvature : ndarray, shape (n,)
        Arc-length derivative of the curvature.
    kind : str
        ``"circle"``, ``"ellipse"`` or ``"sampled"``.
    params : dict
        Shape parameters of analytic curves (``radius`` or ``a``, ``b``).
    """

    position: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    curvature: np.ndarray
    dcurvature: np.ndarray
    kind: str = "sampled"
    params: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.position.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.d1[:, 0], self.d1[:, 1])

    @property
    def tangent(self) -> np.ndarray:
        return self.d1 / self.speed[:, None]

    @property
    def normal(self) -> np.ndarray:
        tau = self.tangent
        return np.column_stack([tau[:, 1], -tau[:, 0]])

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid arc-length weights ``(2*pi/n) |gamma'(t_j)|``."""
        return 2.0 * np.pi / self.n_nodes * self.speed

    @property
    def node_spacing(self) -> float:
        return float(np.max(self.weights))

    @property
    def is_circle(self) -> bool:
        return self.kind == "circle"

    def arc_derivative(self, values, order=1):
        """Tangential (arc-length) derivative of node samples."""
        out = np.asarray(values)
        for _ in range(order):
            out = spectral_derivative(out) / self.speed
        return out

    def length(self) -> float:
        return float(np.sum(self.weights))

    def area(self) -> float:
        """Enclosed area by the trapezoid rule applied to ``(x y' - y x') / 2``."""
        x, y = self.position[:, 0], self.position[:, 1]
        integrand = 0.5 * (x * self.d1[:, 1] - y * self.d1[:, 0])
        return float(np.sum(integrand) * 2.0 * np.pi / self.n_nodes)

    def distance(self, points) -> np.ndarray:
        """Distance from each point to the nearest node."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        diff = pts[:, None, :] - self.position[None, :, :]
        return np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1)

    def contains(self, points) -> np.ndarray:
        """Winding-number test: True for points enclosed by the curve."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = self.position[None, :, :] - pts[:, None, :]
        ang = np.arctan2(rel[..., 1], rel[..., 0])
        dang = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
        dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
        winding = np.sum(dang, axis=1) / (2.0 * np.pi)
        return np.abs(winding) > 0.5

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "n_nodes": self.n_nodes,
            "position": self.position.tolist(),
            "normal": self.normal.tolist(),
            "curvature": self.curvature.tolist(),
        }

    @classmethod
    def from_samples(cls, position) -> "BoundaryCurve":
        """Build a curve from node positions alone, by spectral differentiation."""
        position = np.asarray(position, dtype=float)
        d1 = spectral_derivative(position, 1)
        d2 = spectral_derivative(position, 2)
        speed = np.hypot(d1[:, 0], d1[:, 1])
        kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
        dkappa = spectral_derivative(kappa) / speed
        return cls(position, d1, d2, kappa, dkappa)


def make_circle(radius, n_nodes=DEFAULT_NODES, center=(0.0, 0.0)):
    """Circle parametrized by angle, ``gamma(t) = c + r [cos t, sin t]``."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    _check_nodes(n_nodes)
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    c, s = np.cos(t), np.sin(t)
    pos = np.column_stack([radius * c, radius * s]) + np.asarray(center, dtype=float)
    d1 = np.column_stack([-radius * s, radius * c])
    d2 = np.column_stack([-radius * c, -radius * s])
    kappa = np.full(n_nodes, 1.0 / radius)
    return BoundaryCurve(pos, d1, d2, kappa, np.zeros(n_nodes), "circle",
                         {"radius": float(radius), "center": tuple(map(float, center))})


def make_ellipse(a, b, n_nodes=DEFAULT_NODES):
    """Axis-aligned ellipse ``gamma(t) = [a cos t, b sin t]``."""
    if not (a > 0 and b > 0):
        raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
    _check_nodes(n_nodes)
    if a == b:
        return make_circle(a, n_nodes)
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    c, s = np.cos(t), np.sin(t)
    pos = np.column_stack([a * c, b * s])
    d1 = np.column_stack([-a * s, b * c])
    d2 = np.column_stack([-a * c, -b * s])
    q = a * a * s * s + b * b * c * c
    kappa = a * b / q**1.5
    dkappa_dt = -3.0 * a * b * (a * a - b * b) * s * c / q**2.5
    dkappa = dkappa_dt / np.sqrt(q)
    return BoundaryCurve(pos, d1, d2, kappa, dkappa, "ellipse", {"a": float(a), "b": float(b)})


def _check_nodes(n_nodes):
    if n_nodes < 8 or n_nodes % 2:
        raise ValueError(f"n_nodes must be even and >= 8, got {n_nodes}")


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Normal velocity amplitude ``v(t_j)`` on a curve, with its arc-length derivative."""

    values: np.ndarray
    dvalues: np.ndarray

    @classmethod
    def from_values(cls, curve: BoundaryCurve, values) -> "VelocityField":
        values = np.asarray(values, dtype=float)
        if values.shape != (curve.n_nodes,):
            raise ValueError(f"expected {curve.n_nodes} samples, got shape {values.shape}")
        return cls(values, curve.arc_derivative(values))

    @classmethod
    def from_function(cls, curve: BoundaryCurve, func: Callable) -> "VelocityField":
        """Sample ``func(t)`` at the curve's parameter nodes."""
        return cls.from_values(curve, func(curve.nodes))


def perturb(curve: BoundaryCurve, fields: Sequence[VelocityField], eps: Sequence[float]):
    """Offset the nodes along the normal, ``gamma + sum_j eps_j v_j n``.

    Geometry of the result is recomputed from the new positions.
    """
    fields = list(fields)
    eps = list(np.atleast_1d(np.asarray(eps, dtype=float)))
    if len(fields) != len(eps) or not fields:
        raise ValueError("fields and eps must be non-empty and of equal length")
    amp = np.zeros(curve.n_nodes)
    for f, e in zip(fields, eps):
        amp = amp + e * f.values
    jac = 1.0 + amp * curve.curvature
    if np.min(jac) <= 0:
        raise SelfIntersectionError(
            f"normal offset folds the curve (min 1 + eps v kappa = {np.min(jac):.3g})"
        )
    if not np.any(amp):
        return curve
    return BoundaryCurve.from_samples(curve.position + amp[:, None] * curve.normal)


def shape_derivative_normal_1(curve: BoundaryCurve, v: VelocityField) -> np.ndarray:
    """First shape derivative of the unit normal, ``-v' tau``."""
    return -v.dvalues[:, None] * curve.tangent


def shape_derivative_tangent_1(curve: BoundaryCurve, v: VelocityField) -> np.ndarray:
    return v.dvalues[:, None] * curve.normal


def shape_derivative_normal_2(curve: BoundaryCurve, v: VelocityField, w: VelocityField):
    """Mixed second shape derivative of the unit normal.

    Second-order Taylor coefficient of the perturbed-frame normal,
    ``-v'w' n + (v w' + w v') kappa tau``. Symmetric in ``v`` and ``w`` and
    orthogonal to ``n`` up to the ``-|dn|^2`` term required by ``|n| = 1``.
    """
    kappa = curve.curvature
    cn = -v.dvalues * w.dvalues
    ct = (v.values * w.dvalues + w.values * v.dvalues) * kappa
    return cn[:, None] * curve.normal + ct[:, None] * curve.tangent


def shape_derivative_tangent_2(curve: BoundaryCurve, v: VelocityField, w: VelocityField):
    kappa = curve.curvature
    ct = -v.dvalues * w.dvalues
    cn = -(v.values * w.dvalues + w.values * v.dvalues) * kappa
    return ct[:, None] * curve.tangent + cn[:, None] * curve.normal
