import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from goodshadows.immersions import (SphereImmersion, circle, cylinder, ellipsoid, fd_mean_curvature,
                                    graph_surface, hemisphere, line, plane, pullback_height)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cylinder_mean_curvature_points_to_axis(u, v):
    C = cylinder(1.0)
    p = np.array([u, v])
    H = C.mean_curvature(p)
    pos = C.position(p)
    np.testing.assert_allclose(H, -0.5 * np.array([pos[0], pos[1], 0.0]), atol=1e-12)


@given(st.floats(0.2, 2.9), st.floats(-3, 3))
def test_ellipsoid_matches_finite_differences(u, v):
    E = ellipsoid(2.0, 1.0, 1.0)
    p = np.array([u, v])
    np.testing.assert_allclose(fd_mean_curvature(E, p), E.mean_curvature(p), atol=1e-5)


def test_ellipsoid_pole_value():
    E = ellipsoid(2.0, 1.0, 1.0)
    H = E.mean_curvature(np.array([math.pi / 2, -math.pi / 2]))
    # principal curvatures c/a^2 = 1/4 and 1 at (0, 0, -1)
    np.testing.assert_allclose(H, [0.0, 0.0, 0.625], atol=1e-12)


def test_sphere_mean_curvature_is_minus_position(rng):
    S = SphereImmersion(2)
    P = rng.normal(size=(10, 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    np.testing.assert_allclose(S.mean_curvature(P), -P, atol=1e-12)


def test_circle_curvature_and_frames():
    c = circle(2.0)
    s = np.linspace(0, 10, 7)[:, None]
    H = c.mean_curvature(s)
    np.testing.assert_allclose(np.linalg.norm(H, axis=1), 0.5, atol=1e-12)
    T, N = c.tangent_frame(s), c.normal_frame(s)
    np.testing.assert_allclose(np.einsum("sia,sib->sab", T, N), 0.0, atol=1e-12)


def test_flat_examples_have_zero_curvature(rng):
    assert np.allclose(plane().mean_curvature(rng.normal(size=(5, 2))), 0.0)
    assert np.allclose(line().mean_curvature(rng.normal(size=(5, 1))), 0.0)


def test_graph_surface_vertex_curvature():
    G = graph_surface("x^2 + y^2")
    np.testing.assert_allclose(G.mean_curvature(np.zeros(2)), [0, 0, 2.0], atol=1e-12)
    np.testing.assert_allclose(fd_mean_curvature(G, np.array([0.3, -0.2])), G.mean_curvature(np.array([0.3, -0.2])),
                               atol=1e-5)


def test_hemisphere_is_incomplete():
    assert not hemisphere().complete


def test_pullback_height_laplacian_is_m_times_H_dot_e():
    S = SphereImmersion(2)
    e = np.array([0.0, 0.0, 1.0])
    f = pullback_height(S, np.array([0.0, 0.0, -1.0]), e)
    q = np.array([0.0, 0.0, -1.0])
    assert float(f.value(q)) == 0.0
    assert float(f.laplacian(q)) == pytest.approx(2.0)
    assert float(f.grad_norm(q)) == pytest.approx(0.0, abs=1e-12)
    p = np.array([math.sin(0.4), 0.0, -math.cos(0.4)])
    assert float(f.grad_norm(p)) == pytest.approx(math.sin(0.4), abs=1e-12)
