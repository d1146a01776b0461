"""Ball volumes: space-form closed forms and Monte Carlo on manifolds."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from . import sampling
from .errors import DomainError, PreconditionError


@dataclass(frozen=True)
class SpaceForm:
    """Comparison model of constant curvature ``curvature <= 0``."""

    curvature: float
    dim: int

    def __post_init__(self):
        if self.curvature > 0:
            raise DomainError("comparison space forms must have curvature <= 0")
        if int(self.dim) < 1:
            raise DomainError("space form dimension must be positive")


@dataclass(frozen=True)
class BallSpec:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


def unit_sphere_area(m):
    """Area of the unit ``(m-1)``-sphere in ``R^m``."""
    return 2.0 * math.pi ** (m / 2.0) / gamma(m / 2.0)


def space_form_ball_volume(sf, r):
    """Volume of a geodesic ball of radius ``r`` in the space form ``sf``."""
    if not r > 0:
        raise DomainError("radius must be positive")
    m = int(sf.dim)
    area = unit_sphere_area(m)
    if sf.curvature == 0 or m == 1:
        return area * r**m / m
    k = math.sqrt(-sf.curvature)
    # relative scale: compare against the Euclidean value to set absolute tolerance
    integrand = lambda t: (math.sinh(k * t) / k) ** (m - 1)
    val, _ = quad(integrand, 0.0, r, epsabs=0.0, epsrel=1e-13, limit=200)
    return area * val


@dataclass
class VolumeEstimate:
    estimate: float
    stderr: float
    samples: int

    def __iter__(self):
        return iter((self.estimate, self.stderr))


def ball_volume_mc(M, ball, samples, seed, workers=1):
    """Monte Carlo measure of ``ball`` on ``M``; returns ``(estimate, stderr)``."""
    samples = int(samples)
    if samples < 100:
        raise DomainError("ball_volume_mc needs at least 100 samples")
    u = sampling.uniform(seed, samples, M.dim, stream=11, workers=workers)
    _, w, box = M.ball_proposal(ball.center, ball.radius, u)
    est = box * float(np.mean(w))
    se = box * float(np.std(w, ddof=1)) / math.sqrt(samples)
    return VolumeEstimate(est, se, samples)


def sample_ball(M, center, r, n, seed, stream=13, max_rounds=10000):
    """``n`` points distributed by the Riemannian measure restricted to B(center, r).

    Rejection sampling against the chart-box proposal of ``M``.  Rounds of
    proposals are seeded by ``(seed, stream, round)``.
    """
    n = int(n)
    wmax = M.ball_density_max(center, r)
    got = []
    count = 0
    batch = max(256, 2 * n)
    for k in range(max_rounds):
        rng = sampling.chunk_rng(seed, k, stream)
        u = rng.random((batch, M.dim))
        acc = rng.random(batch)
        pts, w, _ = M.ball_proposal(center, r, u)
        keep = (w > 0) & (acc * wmax < w)
        got.append(pts[keep])
        count += int(np.sum(keep))
        if count >= n:
            break
    else:
        raise DomainError("ball sampling did not accept enough points")
    return np.concatenate(got, axis=0)[:n]


@dataclass
class GromovReport:
    radii: list
    ratios: list
    stderrs: list
    verdict: str
    comparison: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "radii": [float(r) for r in self.radii],
            "ratios": [float(x) for x in self.ratios],
            "stderrs": [float(x) for x in self.stderrs],
            "verdict": self.verdict,
            "comparison": self.comparison,
        }


def check_comparison(M, sf, strict=True):
    """Raise unless ``Ric >= (m-1) c`` is declared for ``M`` (strict mode)."""
    if M.dim < 2:
        return True
    if M.ricci_lower_bound is None:
        if strict:
            raise PreconditionError(f"{M.name}: Ricci lower bound unknown (strict mode)")
        return False
    ok = sf.curvature * (M.dim - 1) <= M.ricci_lower_bound + 1e-15
    if not ok and strict:
        raise PreconditionError(
            f"comparison curvature {sf.curvature} exceeds Ric/(m-1) = {M.ricci_lower_bound / (M.dim - 1)}"
        )
    return ok


def gromov_ratio_check(M, p, radii, sf, samples, seed, strict=True):
    """Check that ``v^c(r) / vol B(p, r)`` is nondecreasing over ``radii``.

    All radii reuse the same uniform stream (common random numbers).
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly increasing")
    check_comparison(M, sf, strict=strict)
    ratios, errs = [], []
    for r in radii:
        est, se = ball_volume_mc(M, BallSpec(p, r), samples, seed)
        vc = space_form_ball_volume(sf, r)
        ratios.append(vc / est)
        errs.append(vc * se / est**2)
    ok = all(
        ratios[i + 1] >= ratios[i] - 3.0 * math.hypot(errs[i], errs[i + 1]) for i in range(len(radii) - 1)
    )
    return GromovReport(radii, ratios, errs, "pass" if ok else "fail",
                        {"curvature": sf.curvature, "dim": sf.dim})
