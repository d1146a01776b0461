import math

import numpy as np
import pytest

from goodshadows.errors import DomainError
from goodshadows.fields import expression_field, quadratic_field
from goodshadows.flows import (NORMALIZED, RAW, StopConditions, avg_laplacian_bound, exit_time, flow_batch,
                               integrate_flow)
from goodshadows.manifolds import Euclidean
from goodshadows.volumes import SpaceForm


def test_raw_flow_of_quadratic_is_exponential_decay():
    f = quadratic_field(2)
    p = np.array([1.0, -2.0])
    tr = integrate_flow(Euclidean(2), f, p, RAW, StopConditions(t_max=3.0))
    np.testing.assert_allclose(tr.end, p * math.exp(-3.0), rtol=1e-8)
    # decrease integral equals f(p) - f(gamma(t))
    assert tr.decrease[-1] == pytest.approx(float(f.value(p) - f.value(tr.end)), rel=1e-8)


def test_normalized_flow_stops_at_ball_exit():
    f = expression_field("x", Euclidean(2), -math.inf)
    tr = integrate_flow(Euclidean(2), f, np.zeros(2), NORMALIZED,
                        StopConditions(t_max=10.0, ball=(np.zeros(2), 0.5)))
    assert tr.duration == pytest.approx(0.5, abs=1e-9)
    assert tr.termination != "t_max"


def test_flow_batch_matches_single_trajectories(rng):
    f = expression_field("x^2/2 + y^4/4", Euclidean(2), 0.0)
    P = rng.uniform(-1, 1, size=(5, 2))
    end, _ = flow_batch(Euclidean(2), f, P, 0.7)
    for p, e in zip(P, end):
        tr = integrate_flow(Euclidean(2), f, p, RAW, StopConditions(t_max=0.7))
        np.testing.assert_allclose(e, tr.end, atol=1e-8)


def test_flow_batch_laplacian_integral():
    f = quadratic_field(3)
    _, lint = flow_batch(Euclidean(3), f, np.ones((4, 3)), 1.5, with_laplacian=True)
    np.testing.assert_allclose(lint, 4.5, rtol=1e-10)


def test_exit_time_radial_oracle():
    # raw flow of -|p|^2/2 is p' = p, so the transit r_in -> r_out takes log(r_out/r_in)
    f = expression_field("-(x^2 + y^2)/2", Euclidean(2), -math.inf)
    rep = exit_time(Euclidean(2), f, np.zeros(2), 0.1, 0.4, boundary_samples=16)
    assert rep.case == "b" and rep.escaped == 16
    assert rep.tau == pytest.approx(math.log(4.0), rel=1e-8)


def test_exit_time_case_a_for_attracting_center():
    rep = exit_time(Euclidean(2), quadratic_field(2), np.zeros(2), 0.1, 0.4, boundary_samples=16, t_max=50.0)
    assert rep.case == "a" and math.isinf(rep.tau)


def test_exit_time_translation_oracle():
    # f = x flows with unit speed along -e_x; the fastest transit is r_out - r_in
    f = expression_field("x", Euclidean(2), -math.inf)
    rep = exit_time(Euclidean(2), f, np.zeros(2), 0.2, 0.5, boundary_samples=32)
    assert rep.tau == pytest.approx(0.3, abs=1e-6)
    assert rep.refined


def test_exit_time_rejects_bad_radii():
    with pytest.raises(DomainError):
        exit_time(Euclidean(2), quadratic_field(2), np.zeros(2), 0.5, 0.2)


def test_avg_laplacian_exact_for_quadratic():
    f = quadratic_field(2)
    rep = avg_laplacian_bound(Euclidean(2), f, np.zeros(2), 0.1, 0.3, 0.8, SpaceForm(0.0, 2), 200, 0)
    assert rep.lhs == pytest.approx(-1.6, rel=1e-9)
    assert rep.rhs == pytest.approx(math.log(9.0), rel=1e-12)
    assert rep.verdict == "pass"
