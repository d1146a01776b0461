import math

import numpy as np
import pytest

from goodshadows.errors import DomainError, PreconditionError
from goodshadows.manifolds import Euclidean, Hyperbolic, Sphere, graph_manifold
from goodshadows.volumes import (BallSpec, SpaceForm, ball_volume_mc, gromov_ratio_check,
                                 space_form_ball_volume)


def test_space_form_volumes_closed_forms():
    assert space_form_ball_volume(SpaceForm(0.0, 2), 1.0) == pytest.approx(math.pi, rel=1e-14)
    assert space_form_ball_volume(SpaceForm(0.0, 3), 2.0) == pytest.approx(32 * math.pi / 3, rel=1e-14)
    # 2 pi (cosh 1 - 1) = 3.41228...
    v = space_form_ball_volume(SpaceForm(-1.0, 2), 1.0)
    assert v == pytest.approx(2 * math.pi * (math.cosh(1.0) - 1.0), rel=1e-12)
    assert v == pytest.approx(3.41228, abs=1e-5)


def test_space_form_volume_three_dimensional_hyperbolic():
    # v = pi (sinh 2r - 2r) for c = -1, m = 3
    r = 0.7
    assert space_form_ball_volume(SpaceForm(-1.0, 3), r) == pytest.approx(math.pi * (math.sinh(2 * r) - 2 * r),
                                                                          rel=1e-12)


def test_space_form_monotone_in_radius_and_curvature():
    radii = np.linspace(0.1, 3.0, 30)
    for c in (0.0, -0.5, -2.0):
        vals = [space_form_ball_volume(SpaceForm(c, 3), r) for r in radii]
        assert all(b > a for a, b in zip(vals, vals[1:]))
    for r in (0.5, 1.5):
        vals = [space_form_ball_volume(SpaceForm(c, 2), r) for c in (0.0, -0.5, -1.0, -4.0)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_space_form_rejects_bad_input():
    with pytest.raises(DomainError):
        space_form_ball_volume(SpaceForm(0.0, 2), 0.0)
    with pytest.raises(DomainError):
        SpaceForm(0.5, 2)


@pytest.mark.parametrize("M,center,exact", [
    (Euclidean(2), np.zeros(2), math.pi),
    (Sphere(2), np.array([0.0, 0.0, 1.0]), 2 * math.pi * (1 - math.cos(1.0))),
    (Hyperbolic(2, -1.0), None, 2 * math.pi * (math.cosh(1.0) - 1.0)),
], ids=["R2", "S2", "H2"])
def test_ball_volume_mc_known_areas(M, center, exact):
    if center is None:
        center = M.origin()
    est, se = ball_volume_mc(M, BallSpec(center, 1.0), 100_000, seed=5)
    assert abs(est - exact) <= 3 * se


def test_ball_volume_mc_is_deterministic():
    M = Sphere(2)
    b = BallSpec(np.array([0.0, 0.0, 1.0]), 0.8)
    assert tuple(ball_volume_mc(M, b, 5000, 9)) == tuple(ball_volume_mc(M, b, 5000, 9))


def test_gromov_model_spaces_have_unit_ratios():
    rep = gromov_ratio_check(Euclidean(2), np.zeros(2), [0.5, 1.0, 2.0], SpaceForm(0.0, 2), 50_000, 1)
    assert rep.verdict == "pass"
    np.testing.assert_allclose(rep.ratios, 1.0, atol=4 * max(rep.stderrs))
    H = Hyperbolic(2, -1.0)
    rep = gromov_ratio_check(H, H.origin(), [0.3, 0.6, 0.9], SpaceForm(-1.0, 2), 50_000, 1)
    assert rep.verdict == "pass"
    np.testing.assert_allclose(rep.ratios, 1.0, atol=4 * max(rep.stderrs))


def test_gromov_requires_known_ricci_bound():
    G = graph_manifold("x^2 + y^2")
    with pytest.raises(PreconditionError):
        gromov_ratio_check(G, np.zeros(2), [0.2, 0.4], SpaceForm(0.0, 2), 1000, 0)


def test_gromov_rejects_comparison_above_ricci_bound():
    H = Hyperbolic(2, -1.0)
    with pytest.raises(PreconditionError):
        gromov_ratio_check(H, H.origin(), [0.2, 0.4], SpaceForm(0.0, 2), 1000, 0)
