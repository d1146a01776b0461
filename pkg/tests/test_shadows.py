import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import csr_matrix

from goodshadows.errors import DomainError, PreconditionError
from goodshadows.fields import expression_field, quadratic_field
from goodshadows.manifolds import Euclidean, Sphere, graph_manifold
from goodshadows.shadows import (MetricNet, doubling_check, doubling_constant, ekeland_point,
                                 ekeland_violations, flow_shadow_c1, good_shadow_c1, good_shadow_c2,
                                 oscillation, oscillation_shadow, verify_certificate)
from goodshadows.volumes import SpaceForm


def _brute_force_ekeland_set(F, D, eps, delta):
    """Indices satisfying all three Ekeland conditions for start 0, by direct scan."""
    lam = eps / delta
    n = len(F)
    good = []
    for y in range(n):
        others = np.arange(n) != y
        if D[0, y] <= delta and F[y] <= F[0] and np.all(F[y] < F[others] + lam * D[y, others]):
            good.append(y)
    return good


@given(st.integers(0, 10_000), st.integers(5, 60))
def test_ekeland_point_lies_in_brute_force_set(seed, size):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, size=(size, 2))
    F = rng.uniform(0, 1, size=size)
    F[0] = F.max()
    D = np.linalg.norm(P[:, None] - P[None], axis=-1)
    eps = float(F[0] - F.min()) + 1e-6
    delta = float(rng.uniform(0.1, 2.0))
    net = MetricNet.from_points(Euclidean(2), P, F)
    y = ekeland_point(net, 0, eps, delta)
    assert y in _brute_force_ekeland_set(F, D, eps, delta)
    assert ekeland_violations(net, 0, y, eps, delta) == {}


def test_ekeland_on_graph_metric():
    # path graph 0 - 1 - 2 - 3 with unit weights; steep values favour the far end
    A = csr_matrix(np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1))
    F = np.array([3.0, 2.0, 1.0, 0.0])
    net = MetricNet.from_graph(A, F)
    y = ekeland_point(net, 0, eps=3.0, delta=3.0)
    assert ekeland_violations(net, 0, y, 3.0, 3.0) == {}
    assert F[y] <= F[0]


def test_ekeland_rejects_bad_inputs():
    net = MetricNet.from_points(Euclidean(1), np.array([[0.0], [1.0]]), np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        ekeland_point(net, 0, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        ekeland_point(net, 0, 0.5, 1.0)


def test_good_shadow_c1_on_graph_manifold():
    G = graph_manifold("x^2 + y^2")
    f = expression_field("x^2 + y^2", G, 0.0)
    xs = np.array([[0.5, 0.0], [0.25, 0.1]])
    cert = good_shadow_c1(G, f, xs)
    assert cert.verdict == "pass"
    assert verify_certificate(cert, G, f).agree


def _sphere_height():
    from goodshadows.fields import ScalarField

    ez = np.array([0.0, 0.0, 1.0])

    def grad(p):
        p = np.asarray(p, dtype=float)
        return ez - p[..., 2:3] * p

    return ScalarField(Sphere(2), lambda p: np.asarray(p)[..., 2] + 1.0, grad, inf_estimate=0.0, name="z + 1")


@pytest.mark.parametrize("finder", [good_shadow_c1, flow_shadow_c1], ids=["ekeland", "flow"])
def test_c1_shadows_on_sphere(finder):
    S = Sphere(2)
    f = _sphere_height()
    th = np.array([0.3, 0.1, 0.03])  # polar angle from the south pole
    xs = np.c_[np.sin(th), np.zeros(3), -np.cos(th)]
    cert = finder(S, f, xs)
    assert cert.ok
    for row in cert.rows:
        # |grad f| = sin(angle from the south pole)
        y = row["y"]
        assert row["grad_norm"] == pytest.approx(math.sqrt(max(0.0, 1 - y[2] ** 2)), abs=1e-12)


def test_verifier_flags_tampered_row():
    M = Euclidean(2)
    f = expression_field("x^2 + y^2", M, 0.0)
    cert = good_shadow_c1(M, f, np.array([[0.5, 0.0]]))
    cert.rows[0]["grad_norm"] *= 0.5
    rep = verify_certificate(cert, M, f)
    assert not rep.agree and "grad_norm" in rep.failures[0]["problems"]


def test_c1_requires_declared_infimum():
    f = expression_field("x", Euclidean(1), -math.inf)
    with pytest.raises(PreconditionError):
        good_shadow_c1(Euclidean(1), f, np.array([[1.0]]))


def test_c2_shadow_quadratic_rows():
    f = quadratic_field(2)
    ps = np.array([[2.0**-k, 0.0] for k in range(1, 5)])
    cert = good_shadow_c2(Euclidean(2), f, ps, SpaceForm(0.0, 2), 1.0)
    assert cert.ok
    for row in cert.rows:
        # on R^2 the bound is 16 (1+K) delta log(r^2)
        r = row["radius_bound"]
        assert row["laplacian_bound"] == pytest.approx(32.0 * row["delta"] * math.log(r * r), rel=1e-12)
        assert row["laplacian"] == pytest.approx(2.0)


def test_doubling_constant_is_power_of_kappa_in_flat_space():
    assert doubling_constant(SpaceForm(0.0, 2), 1.0, 0.5) == pytest.approx(4.0, rel=1e-12)
    assert doubling_constant(SpaceForm(0.0, 3), 1.0, 0.5) == pytest.approx(8.0, rel=1e-12)
    # negative curvature makes large balls grow faster
    assert doubling_constant(SpaceForm(-1.0, 2), 1.0, 0.5) > 4.0


def test_oscillation_of_linear_field_is_twice_radius():
    f = expression_field("x", Euclidean(2), -math.inf)
    osc = oscillation(Euclidean(2), f, np.zeros(2), 1.0, 20_000, 0)
    assert 1.9 < osc <= 2.0


def test_oscillation_shadow_quadratic():
    f = quadratic_field(2)
    ps = np.array([[0.5**k, 0.0] for k in range(3, 6)])
    cert = oscillation_shadow(Euclidean(2), f, ps, 1.0, SpaceForm(0.0, 2))
    assert cert.verdict == "pass"


@pytest.mark.parametrize("M,p,b,ok", [
    (Euclidean(2), np.zeros(2), 4.0, True),
    (Sphere(2), np.array([0.0, 0.0, 1.0]), 4.0, True),
    (Euclidean(2), np.zeros(2), 3.5, False),
], ids=["plane", "sphere", "plane-too-small"])
def test_doubling_check(M, p, b, ok):
    rep = doubling_check(M, 1.0, b, [(p, 0.5), (p, 0.9)], 40_000, 3)
    assert (rep.verdict == "pass") == ok
