import numpy as np
import pytest

from shapetaylor import scatter as sc
from shapetaylor import shapecalc as shc
from shapetaylor import uq
from shapetaylor.geometry import make_circle

FIELD = sc.IncidentField.plane(np.pi, [1.0, 0.0])
MEDIUM = sc.Medium("impedance", lam=100.0)
POINTS = shc.observation_ring(3.5, 6)


@pytest.fixture(scope="module")
def setup():
    curve = make_circle(2.5, 128)
    basis = uq.fourier_basis(curve, 2)
    fwd = sc.solve(curve, FIELD, MEDIUM)
    stack = shc.build_stack(fwd, basis, 2)
    return curve, basis, stack


def test_fourier_basis(setup):
    curve, _, _ = setup
    basis = uq.fourier_basis(curve, 5)
    assert len(basis) == 11
    t = curve.nodes
    assert np.allclose(basis[0].values, 1.0)
    assert np.allclose(basis[3].values, np.cos(3 * t))
    assert np.allclose(basis[6].values, np.sin(t))
    assert np.allclose(basis[10].values, np.sin(5 * t))


def test_draws_are_reproducible_and_order_free(setup):
    curve, basis, _ = setup
    pert = uq.RandomPerturbation(curve, basis, 0.03)
    a = [pert.draw(11, i) for i in range(5)]
    b = [pert.draw(11, i) for i in reversed(range(5))][::-1]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(pert.draw(11, 0), pert.draw(12, 0))
    assert all(np.all(np.abs(x) <= 1) for x in a)


def test_odd_monomials_vanish(setup):
    curve, basis, _ = setup
    pert = uq.RandomPerturbation(curve, basis, 0.03)
    w = np.array([pert.draw(3, i) for i in range(4000)])
    for mono in (w[:, 0], w[:, 1] * w[:, 2] * w[:, 3], w[:, 4] ** 3, w[:, 0] * w[:, 1] ** 2):
        assert abs(mono.mean()) < 3 * mono.std() / np.sqrt(len(mono))
    assert np.allclose((w**2).mean(axis=0), 1 / 3, atol=0.03)


def test_estimators_at_zero_eps(setup):
    _, _, stack = setup
    u = stack.forward.eval(POINTS)
    for n in (1, 2, 4, 7):
        for order in (0, 1, 2):
            est = uq.estimator(stack, n, order, 0.0, POINTS)
            assert np.array_equal(est.values, u**n)
    assert np.all(uq.variance_estimator(stack, 0.0, POINTS).values == 0)


def test_first_moment_degeneracy_and_nesting(setup):
    _, _, stack = setup
    eps = 0.03
    e0 = uq.estimator(stack, 1, 0, eps, POINTS)
    e1 = uq.estimator(stack, 1, 1, eps, POINTS)
    assert np.array_equal(e0.values, e1.values)
    u = stack.forward.eval(POINTS)
    m = len(stack.fields)
    d2 = sum(stack.eval((i, i), POINTS) for i in range(m))
    d1sq = sum(stack.eval((i,), POINTS) ** 2 for i in range(m))
    for n in (1, 2, 4, 7):
        e1 = uq.estimator(stack, n, 1, eps, POINTS).values
        e2 = uq.estimator(stack, n, 2, eps, POINTS).values
        scale = 1e-13 * np.abs(u) ** n
        assert np.all(np.abs(e2 - e1 - eps**2 / 3 * n * u ** (n - 1) * 0.5 * d2) < scale)
        if n >= 2:
            e0 = uq.estimator(stack, n, 0, eps, POINTS).values
            want = eps**2 / 3 * n * (n - 1) / 2 * u ** (n - 2) * d1sq
            assert np.all(np.abs(e1 - e0 - want) < scale)
    e = uq.estimator(stack, 1, 2, eps, POINTS)
    assert e.order == 2 and e.method == "estimator" and e.n == 1


def test_estimator_against_polynomial_quadrature(setup):
    curve, basis, _ = setup
    fwd = sc.solve(curve, FIELD, MEDIUM)
    single = shc.build_stack(fwd, [basis[1]], 1)
    u = fwd.eval(POINTS)
    du = single.eval((0,), POINTS)
    x, w = np.polynomial.legendre.leggauss(32)
    for eps in (0.02, 0.04):
        quad = sum(wi / 2 * (u + eps * xi * du) ** 2 for xi, wi in zip(x, w))
        est = uq.estimator(single, 2, 1, eps, POINTS).values
        assert np.max(np.abs(quad - est)) < 1e-12
        var = uq.variance_estimator(single, eps, POINTS).values
        assert np.allclose(var, eps**2 / 3 * du**2, rtol=1e-14)


def test_estimator_input_checks(setup):
    curve, basis, stack = setup
    with pytest.raises(ValueError):
        uq.estimator(stack, 2, 3, 0.01, POINTS)
    with pytest.raises(ValueError):
        uq.estimator(stack, 0, 1, 0.01, POINTS)
    bare = shc.build_stack(stack.forward, basis, 0)
    with pytest.raises(shc.MissingOrderError):
        uq.estimator(bare, 2, 1, 0.01, POINTS)
    ref = uq.estimator(stack, 2, 1, 0.01, POINTS)
    assert uq.estimation_residual(ref, ref) == 0.0
    with pytest.raises(ValueError):
        uq.estimation_residual(ref, uq.estimator(stack, 2, 1, 0.01, POINTS[:3]))


def test_monte_carlo_zero_eps_is_exact(setup):
    curve, basis, stack = setup
    pert = uq.RandomPerturbation(curve, basis, 0.0)
    u = stack.forward.eval(POINTS)
    for n in (1, 2):
        mc = uq.monte_carlo_moment(pert, FIELD, MEDIUM, n, POINTS, 5, seed=1)
        assert np.array_equal(mc.values, np.mean(np.array([u] * 5) ** n, axis=0))
        assert mc.samples == 5 and mc.seed == 1 and mc.method == "monte_carlo"


def test_monte_carlo_determinism(setup):
    curve, basis, _ = setup
    pert = uq.RandomPerturbation(curve, basis, 0.03)
    a = uq.sample_fields(pert, FIELD, MEDIUM, POINTS, 6, seed=9)
    b = uq.sample_fields(pert, FIELD, MEDIUM, POINTS, 6, seed=9, workers=3)
    assert np.array_equal(a.values, b.values)
    c = uq.sample_fields(pert, FIELD, MEDIUM, POINTS, 6, seed=10)
    assert not np.array_equal(a.values, c.values)
    with pytest.raises(ValueError):
        uq.sample_fields(pert, FIELD, MEDIUM, POINTS, 0, seed=9)


def test_central_moment_uses_two_pass_mean():
    values = np.array([[1.0 + 1j], [3.0 - 1j], [2.0 + 3j]])
    s = uq.SampleSet(values, np.zeros((1, 2)), 0, 0)
    cm = uq.sample_moment(s, 2, central=True)
    mean = values.mean(axis=0)
    assert np.allclose(cm.values, np.mean((values - mean) ** 2, axis=0))
    assert cm.central


def test_failure_budget():
    curve = make_circle(1.0, 64)
    basis = uq.fourier_basis(curve, 1)
    pert = uq.RandomPerturbation(curve, basis, 2.0)
    with pytest.raises(uq.MonteCarloFailure):
        uq.sample_fields(pert, FIELD, MEDIUM, [[20.0, 0.0]], 20, seed=0)


def test_monte_carlo_mean_consistent_with_estimator():
    curve = make_circle(2.5, 96)
    basis = [uq.fourier_basis(curve, 2)[2]]
    fwd = sc.solve(curve, FIELD, MEDIUM)
    stack = shc.build_stack(fwd, basis, 2)
    eps = 0.02
    pert = uq.RandomPerturbation(curve, basis, eps)
    samples = uq.sample_fields(pert, FIELD, MEDIUM, POINTS, 200, seed=5)
    mc = uq.sample_moment(samples, 1)
    est = uq.estimator(stack, 1, 2, eps, POINTS)
    sigma = samples.values.std(axis=0) / np.sqrt(len(samples.values))
    assert np.all(np.abs(mc.values - est.values) < 3 * sigma + 10 * eps**4)


def test_gauss_legendre_reference(setup):
    curve, basis, _ = setup
    with pytest.raises(ValueError):
        uq.gauss_legendre_moment(uq.RandomPerturbation(curve, basis, 0.01), FIELD, MEDIUM, 2, POINTS)
    pert = uq.RandomPerturbation(curve, [basis[0]], 0.0)
    ref = uq.gauss_legendre_moment(pert, FIELD, MEDIUM, 3, POINTS, nodes=4)
    u = sc.solve(curve, FIELD, MEDIUM).eval(POINTS)
    assert np.allclose(ref.values, u**3, rtol=1e-13)
