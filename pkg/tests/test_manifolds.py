import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from goodshadows.errors import ConfigError, DomainError
from goodshadows.manifolds import Euclidean, Hyperbolic, Sphere, graph_manifold, manifold_from_spec
from goodshadows.sampling import unit_vectors


def test_euclidean_distance_and_exp():
    M = Euclidean(2)
    assert M.distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(5.0)
    p, v = np.array([1.0, 2.0]), np.array([0.5, -1.0])
    np.testing.assert_allclose(M.exp_map(p, v), p + v)


def test_sphere_antipodes_and_half_turn():
    S = Sphere(2)
    n, s = np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])
    assert S.distance(n, s) == pytest.approx(math.pi)
    np.testing.assert_allclose(S.exp_map(n, np.array([math.pi, 0.0, 0.0])), s, atol=1e-12)


def test_hyperbolic_distance_closed_form():
    H = Hyperbolic(2, -1.0)
    o = H.origin()
    q = H.point(np.array([math.sinh(1.3), 0.0]))
    assert H.distance(o, q) == pytest.approx(1.3, rel=1e-12)


def test_graph_geodesic_in_symmetry_plane():
    # y = 0 is a plane of symmetry of z = x^2 + y^2, so the geodesic from (0,0) to (1,0)
    # is the parabola arc, of length int_0^1 sqrt(1 + 4x^2) dx.
    G = graph_manifold("x^2 + y^2")
    exact = math.sqrt(5) / 2 + math.asinh(2) / 4
    assert G.distance(np.array([0.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(exact, abs=1e-6)


def test_graph_exp_richardson_self_consistency():
    G = graph_manifold("x^2 + y^2")
    p, v = np.array([0.2, -0.1]), np.array([0.4, 0.3])
    a = G.exp_map(p, v, max_step=0.02)
    b = G.exp_map(p, v, max_step=0.01)
    assert np.max(np.abs(a - b)) <= 1e-8


@pytest.mark.parametrize("M", [Euclidean(2), Sphere(2), Hyperbolic(2, -1.0), graph_manifold("x^2 + y^2")],
                         ids=["R2", "S2", "H2", "graph"])
def test_exp_distance_consistency(M):
    p = {"hyperbolic": lambda: M.origin(), "sphere": lambda: np.array([0.0, 0.0, 1.0])}.get(
        M.name, lambda: np.array([0.1, -0.2]))()
    B = M.tangent_basis(p)
    for w in unit_vectors(3, 20, M.dim):
        v = 0.08 * (B @ w)
        q = M.exp_map(p, v)
        assert abs(float(M.distance(p, q)) - float(M.norm(p, v))) <= 1e-6


@pytest.mark.parametrize("kind", ["R2", "S2", "H2"])
def test_triangle_inequality_random_triples(kind, rng):
    if kind == "R2":
        M, P = Euclidean(2), rng.normal(size=(3000, 2))
    elif kind == "S2":
        M = Sphere(2)
        P = rng.normal(size=(3000, 3))
        P /= np.linalg.norm(P, axis=1, keepdims=True)
    else:
        M = Hyperbolic(2, -1.0)
        P = M.point(rng.normal(size=(3000, 2)))
    a, b, c = P[:1000], P[1000:2000], P[2000:]
    lhs = M.distance(a, c)
    rhs = M.distance(a, b) + M.distance(b, c)
    assert np.all(lhs <= rhs + 1e-9)
    np.testing.assert_allclose(M.distance(a, b), M.distance(b, a), atol=1e-12)


def test_metric_positive_definite_on_graph(rng):
    G = graph_manifold("x^2 + y^2")
    g = G.metric_tensor(rng.uniform(-2, 2, size=(200, 2)))
    assert np.all(np.linalg.eigvalsh(g) > 0)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_graph_metric_matches_closed_form(x, y):
    G = graph_manifold("x^2 + y^2")
    g = G.metric_tensor(np.array([x, y]))
    exact = np.eye(2) + 4 * np.outer([x, y], [x, y])
    np.testing.assert_allclose(g, exact, atol=1e-12)


def test_outside_domain_rejected():
    S = Sphere(2, domain=lambda p: p[..., 2] > 0)
    with pytest.raises(DomainError):
        S.check_point(np.array([0.0, 0.0, -1.0]))


def test_manifold_from_spec():
    assert isinstance(manifold_from_spec({"kind": "sphere", "radius": "2"}), Sphere)
    with pytest.raises(ConfigError):
        manifold_from_spec({"kind": "torus"})
