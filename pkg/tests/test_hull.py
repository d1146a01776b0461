import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import subspace_angles

from goodshadows.errors import (CapabilityError, DomainError, GeneralPositionError, NoSupportError,
                                PreconditionError)
from goodshadows.hull import (GrassmannElement, combined_height, codimension_certificate, gauss_map_modulus,
                              gauss_ricci_lower_bound, grassmann_distance, intersection_distance,
                              make_arrangement, mean_curvature_sign_check, normal_space, read_cloud_csv,
                              supporting_normals, thm16_sequence)
from goodshadows.immersions import SphereImmersion, circle, graph_surface, plane
from goodshadows.volumes import SpaceForm

CUBE = np.array(list(itertools.product([0.0, 1.0], repeat=3)))


def test_orthonormal_distance_is_euclidean_norm_of_heights(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
    arr = make_arrangement(rng.normal(size=5), Q[:3])
    Y = rng.normal(size=(100, 5))
    h = (Y - arr.p0) @ Q[:3].T
    np.testing.assert_allclose(intersection_distance(arr, Y), np.sqrt(np.sum(h**2, axis=1)), atol=1e-13)


def test_two_lines_at_sixty_degrees():
    # distance from y to the intersection point of two lines through 0 at angle pi/3 is |y|
    e1 = np.array([1.0, 0.0])
    e2 = np.array([math.cos(math.pi / 3), math.sin(math.pi / 3)])
    arr = make_arrangement([0.0, 0.0], [e1, e2])
    y = np.array([0.3, -1.2])
    assert float(intersection_distance(arr, y)) == pytest.approx(float(np.linalg.norm(y)), rel=1e-14)
    assert arr.gram[0, 1] == pytest.approx(0.5)


def test_arrangement_validation():
    with pytest.raises(DomainError):
        make_arrangement([0.0, 0.0], [[2.0, 0.0]])
    with pytest.raises(GeneralPositionError):
        make_arrangement([0.0, 0.0], [[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(GeneralPositionError):
        make_arrangement([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0], [math.sqrt(0.5), math.sqrt(0.5)]])


def test_combined_height_scale():
    arr = make_arrangement(np.zeros(3), np.eye(3)[:2])
    F, thresh = combined_height(arr, np.array([1.0, 1.0, 5.0]))
    assert F == pytest.approx(math.sqrt(2))
    assert thresh == pytest.approx(3 * math.sqrt(2) * 1.0)


@pytest.mark.parametrize("q,rank", [((0.0, 0.0, 0.0), 3), ((0.5, 0.0, 0.0), 2), ((0.5, 0.5, 0.0), 1)],
                         ids=["corner", "edge", "face"])
def test_cube_normal_cones(q, rank):
    cert = supporting_normals(CUBE, np.array(q))
    assert cert.rank == rank
    # every returned normal is an inward face normal of the cube
    for e in cert.normals:
        assert np.isclose(np.max(np.abs(e)), 1.0, atol=1e-6)
    # margins recomputed by a direct scan
    margins = np.min((CUBE - np.array(q)) @ cert.normals.T, axis=0)
    np.testing.assert_allclose(margins, cert.margins, atol=1e-12)
    assert np.all(margins >= -cert.tol)


def test_support_errors():
    with pytest.raises(NoSupportError):
        supporting_normals(CUBE, np.array([0.5, 0.5, 0.5]))
    with pytest.raises(DomainError):
        supporting_normals(CUBE, np.array([2.0, 0.5, 0.5]))


def test_support_on_random_polygon_vertices(rng):
    th = np.sort(rng.uniform(0, 2 * math.pi, 12))
    P = np.c_[np.cos(th), np.sin(th)]
    cert = supporting_normals(P, P[0])
    assert cert.rank == 2
    assert np.all(np.min((P - P[0]) @ cert.normals.T, axis=0) >= -1e-9)


def _random_subspace(rng, n, k):
    return GrassmannElement(rng.normal(size=(n, k)))


def test_grassmann_triangle_inequality(rng):
    worst = -np.inf
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        A, B, C = (_random_subspace(rng, n, k) for _ in range(3))
        gap = grassmann_distance(A, C) - grassmann_distance(A, B) - grassmann_distance(B, C)
        worst = max(worst, gap)
    assert worst <= 1e-9


@given(st.integers(0, 10_000))
def test_grassmann_distance_is_largest_principal_angle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    k = int(rng.integers(1, n))
    A, B = _random_subspace(rng, n, k), _random_subspace(rng, n, k)
    assert grassmann_distance(A, B) == pytest.approx(float(np.max(subspace_angles(A.basis, B.basis))), abs=1e-10)
    assert grassmann_distance(A, A) == pytest.approx(0.0, abs=1e-7)


def test_grassmann_dimension_mismatch():
    with pytest.raises(DomainError):
        grassmann_distance(GrassmannElement(np.eye(3)[:, :1]), GrassmannElement(np.eye(3)[:, :2]))


def test_circle_gauss_map_modulus():
    # normal lines of a circle of radius R rotate by angle t/R over arclength t
    R = 2.0
    c = circle(R)
    s = np.linspace(0, 1, 40)[:, None]
    pairs = [(np.zeros(1), x) for x in s]
    rep = gauss_map_modulus(c, pairs, 0.1)
    assert rep.tends_to_zero
    expected = np.minimum(rep.edges, 1.0) / R
    np.testing.assert_allclose(rep.modulus[rep.counts > 0], expected[rep.counts > 0], atol=0.1 / R)
    W0, W1 = normal_space(c, np.zeros(1)), normal_space(c, np.array([0.5]))
    assert grassmann_distance(W0, W1) == pytest.approx(0.25, abs=1e-12)


def test_circle_codimension_certificate():
    c = circle(1.0)
    arr = make_arrangement([0.0, -1.0], [[0.0, 1.0]])
    levels = [np.linspace(0, 2 * math.pi, 16 * 2**k, endpoint=False)[:, None] for k in range(4)]
    rep = codimension_certificate(c, levels, arr)
    assert rep.verdict == "PASS" and rep.rank <= rep.codim
    assert max(rep.levels[-1]["angles"]) <= 1e-6


def test_codimension_rejects_non_supporting_arrangement():
    c = circle(1.0)
    arr = make_arrangement([0.0, 0.0], [[0.0, 1.0]])
    with pytest.raises(PreconditionError):
        codimension_certificate(c, [np.linspace(0, 6, 20)[:, None]], arr)


def test_sign_check_precondition():
    S = SphereImmersion(2)
    arr = make_arrangement([0.0, 0.0, -1.0], [[0.0, 0.0, 1.0]])
    with pytest.raises(PreconditionError):
        mean_curvature_sign_check(S, np.array([0.0, 0.0, 1.0]), arr)


def test_sign_check_on_sphere_tangent_planes(rng):
    S = SphereImmersion(2)
    for _ in range(5):
        q = rng.normal(size=3)
        q /= np.linalg.norm(q)
        rep = mean_curvature_sign_check(S, q, make_arrangement(q, [-q]))
        assert rep.verdict == "pass" and rep.values[0] == pytest.approx(1.0, abs=1e-12)


def test_thm16_plane_is_equality_case():
    P = plane()
    arr = make_arrangement([0.0, 0.0, 0.0], [[0.0, 0.0, 1.0]])
    levels = [np.array([[2.0**-k, 0.0]]) for k in range(2, 5)]
    rep = thm16_sequence(P, levels, arr, SpaceForm(0.0, 2), boundary_samples=8, tube_points=32, tube_times=8)
    assert rep.verdict == "pass"
    assert all(abs(r["H_p_e"]) <= 1e-12 for r in rep.rows)


def test_thm16_needs_bounded_second_fundamental_form():
    G = graph_surface("x^2 + y^2")
    arr = make_arrangement([0.0, 0.0, 0.0], [[0.0, 0.0, 1.0]])
    with pytest.raises(CapabilityError):
        thm16_sequence(G, [np.zeros((1, 2))], arr, SpaceForm(0.0, 2))


def test_gauss_ricci_bound():
    assert gauss_ricci_lower_bound(4, 0.5) == pytest.approx(-0.75)


def test_read_cloud_csv(tmp_path):
    p = tmp_path / "cloud.csv"
    p.write_text("x0,x1,x2,t0_0,t0_1,t0_2\n1,0,0,0,1,0\n0,1,0,-1,0,0\n")
    d = read_cloud_csv(p)
    np.testing.assert_array_equal(d["points"], [[1, 0, 0], [0, 1, 0]])
    assert d["tangent"].shape == (2, 3, 1)
    np.testing.assert_array_equal(d["tangent"][1, :, 0], [-1, 0, 0])
