"""Moments of the scattered field under random boundary perturbations.

The random curve is ``gamma + eps * sum_i omega_i v_i n`` with independent
``omega_i ~ Uniform[-1, 1]``. Moments are complex moments ``E[u^n]`` of the
complex field. Shape Taylor expansion estimators use ``E[omega_i^2] = 1/3``
and the vanishing of odd monomials:

    E0 = u^n
    E1 = u^n + eps^2/3 sum_i C(n, 2) u^(n-2) (delta_i u)^2
    E2 = E1 + eps^2/3 sum_i n u^(n-1) delta_[i,i] u / 2
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .geometry import BoundaryCurve, SelfIntersectionError, VelocityField, perturb
from .scatter import IncidentField, Medium, solve as forward_solve
from .shapecalc import DerivativeStack, MissingOrderError


class MonteCarloFailure(RuntimeError):
    pass


def fourier_basis(curve: BoundaryCurve, modes=5) -> List[VelocityField]:
    """``1, cos t, ..., cos(modes t), sin t, ..., sin(modes t)`` on the curve parameter."""
    t = curve.nodes
    funcs = [np.ones_like(t)]
    funcs += [np.cos(j * t) for j in range(1, modes + 1)]
    funcs += [np.sin(j * t) for j in range(1, modes + 1)]
    return [VelocityField.from_values(curve, f) for f in funcs]


@dataclass(frozen=True, eq=False)
class RandomPerturbation:
    """Random normal perturbation with uniform coefficients on ``[-1, 1]``."""

    curve: BoundaryCurve
    basis: Sequence[VelocityField]
    eps: float

    @property
    def m(self) -> int:
        return len(self.basis)

    def draw(self, seed, index) -> np.ndarray:
        """Coefficients of sample ``index``; independent of evaluation order."""
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
        return rng.uniform(-1.0, 1.0, self.m)

    def realize(self, omega) -> BoundaryCurve:
        return perturb(self.curve, self.basis, self.eps * np.asarray(omega, dtype=float))


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Moment values at observation points.

    ``order`` is the Taylor order of an estimator (``None`` for sampling).
    """

    n: int
    values: np.ndarray
    points: np.ndarray
    method: str
    order: Optional[int] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    central: bool = False
    failures: int = 0


def _stack_values(stacks, points):
    if isinstance(stacks, DerivativeStack):
        stack = stacks
    else:
        raise TypeError("expected a DerivativeStack holding every basis field")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    u = stack.eval((), pts)
    m = len(stack.fields)
    try:
        d1 = [stack.eval((i,), pts) for i in range(m)]
    except MissingOrderError as exc:
        raise MissingOrderError(f"first-order shape derivatives missing: {exc}") from None
    return stack, pts, u, d1


def estimator(stack: DerivativeStack, n, order, eps, points) -> MomentEstimate:
    """Taylor-expansion estimate of ``E[u^n]`` with ``order`` in ``{0, 1, 2}``."""
    if order not in (0, 1, 2):
        raise ValueError(f"estimator order must be 0, 1 or 2, got {order}")
    if n < 1:
        raise ValueError("moment order must be >= 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    u = stack.eval((), pts)
    values = u**n
    if order >= 1 and eps != 0:
        _, _, _, d1 = _stack_values(stack, pts)
        if n >= 2:
            values = values + eps**2 / 3.0 * math.comb(n, 2) * u ** (n - 2) * sum(d * d for d in d1)
        if order == 2:
            d2 = [stack.eval((i, i), pts) for i in range(len(stack.fields))]
            values = values + eps**2 / 3.0 * n * u ** (n - 1) * 0.5 * sum(d2)
    return MomentEstimate(n, values, pts, "estimator", order=order)


def variance_estimator(stack: DerivativeStack, eps, points) -> MomentEstimate:
    """Leading-order central second moment ``eps^2/3 sum_i (delta_i u)^2``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if eps == 0:
        return MomentEstimate(2, np.zeros(len(pts), dtype=complex), pts, "estimator", order=1, central=True)
    _, _, _, d1 = _stack_values(stack, pts)
    return MomentEstimate(2, eps**2 / 3.0 * sum(d * d for d in d1), pts, "estimator",
                          order=1, central=True)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Field values of independent perturbed solves, one row per sample."""

    values: np.ndarray
    points: np.ndarray
    seed: int
    failures: int


def sample_fields(perturbation: RandomPerturbation, field: IncidentField, medium: Medium,
                  points, samples, seed, workers=1, max_failure_rate=0.01) -> SampleSet:
    """Solve the forward problem on ``samples`` random curves.

    Sample ``i`` uses coefficients from the ``(seed, i)`` substream, so the
    result does not depend on ``workers``. Failed solves are dropped and
    counted; more than ``max_failure_rate`` of failures aborts the run.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    def one(i):
        omega = perturbation.draw(seed, i)
        try:
            curve = perturbation.realize(omega)
            return forward_solve(curve, field, medium).eval(pts)
        except (SelfIntersectionError, np.linalg.LinAlgError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(samples)))
    else:
        rows = [one(i) for i in range(samples)]
    good = [r for r in rows if r is not None]
    failures = samples - len(good)
    if failures > max_failure_rate * samples:
        raise MonteCarloFailure(f"{failures} of {samples} samples failed")
    return SampleSet(np.array(good), pts, int(seed), failures)


def sample_moment(sample_set: SampleSet, n, central=False) -> MomentEstimate:
    """Sample mean of ``u^n``, or of ``(u - mean)^n`` with a two-pass mean."""
    vals = sample_set.values
    if central:
        vals = vals - vals.mean(axis=0)
    return MomentEstimate(n, np.mean(vals**n, axis=0), sample_set.points, "monte_carlo",
                          samples=len(vals), seed=sample_set.seed, central=central,
                          failures=sample_set.failures)


def monte_carlo_moment(perturbation, field, medium, n, points, samples, seed,
                       central=False, workers=1) -> MomentEstimate:
    """Monte Carlo reference for ``E[u^n]`` (or the central moment)."""
    sample_set = sample_fields(perturbation, field, medium, points, samples, seed, workers)
    return sample_moment(sample_set, n, central)


def gauss_legendre_moment(perturbation: RandomPerturbation, field, medium, n, points,
                          nodes=32, central=False) -> MomentEstimate:
    """Noise-free moment for a single random coefficient by Gauss-Legendre quadrature."""
    if perturbation.m != 1:
        raise ValueError("quadrature reference supports a single basis field")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, w = np.polynomial.legendre.leggauss(nodes)
    w = w / 2.0
    vals = np.array([forward_solve(perturbation.realize([xi]), field, medium).eval(pts) for xi in x])
    if central:
        vals = vals - w @ vals
    return MomentEstimate(n, w @ vals**n, pts, "quadrature", central=central)


def estimation_residual(reference: MomentEstimate, estimate: MomentEstimate) -> float:
    """``sum_x |M(x) - E(x)|`` over shared observation points."""
    if reference.points.shape != estimate.points.shape or not np.allclose(reference.points, estimate.points):
        raise ValueError("estimates are given at different observation points")
    return float(np.sum(np.abs(reference.values - estimate.values)))
