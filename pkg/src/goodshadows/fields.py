"""Scalar fields on manifolds and their derivative checks."""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, ConfigError, DomainError, NumericalPrecisionError
from .expr import CompiledExpression
from .manifolds import ChartManifold, Euclidean
from .volumes import sample_ball


@dataclass(frozen=True)
class ScalarField:
    """A C^1 or C^2 function on ``manifold``.

    ``gradient`` returns a tangent vector in the manifold's representation.
    ``hessian`` (optional) returns the matrix of the Hessian in the
    orthonormal basis ``manifold.tangent_basis(p)``.  All callables accept a
    single point or a stack of points.
    """

    manifold: object
    value: Callable
    gradient: Callable
    hessian: Optional[Callable] = None
    laplacian_fn: Optional[Callable] = None
    inf_estimate: float = -math.inf
    name: str = "field"
    meta: dict = field(default_factory=dict)

    def __call__(self, p):
        return self.value(p)

    def grad_norm(self, p):
        return self.manifold.norm(p, self.gradient(p))

    @property
    def has_hessian(self):
        return self.hessian is not None

    @property
    def has_laplacian(self):
        return self.laplacian_fn is not None or self.hessian is not None

    def laplacian(self, p):
        if self.laplacian_fn is not None:
            return self.laplacian_fn(p)
        if self.hessian is None:
            raise CapabilityError(f"{self.name}: no Hessian or Laplacian")
        return np.trace(self.hessian(p), axis1=-2, axis2=-1)

    def describe(self):
        d = {"name": self.name, "inf": self.inf_estimate}
        d.update(self.meta)
        return d


@dataclass(frozen=True)
class HeightField(ScalarField):
    """``y -> <y - p0, e>``, on ambient space or pulled back through an immersion."""

    base: np.ndarray = None
    direction: np.ndarray = None
    pulled_back: bool = False


# -- constructors -------------------------------------------------------------

def expression_field(text, manifold, inf_estimate, variables=None, name=None):
    """Field from an expression in chart coordinates of a Euclidean or chart manifold."""
    if variables is None:
        variables = ("x", "y", "z", "w")[: manifold.dim] if manifold.dim > 1 else ("x",)
    ce = CompiledExpression(text, variables)
    meta = {"expr": ce.text}
    name = name or ce.text
    if isinstance(manifold, Euclidean):
        return ScalarField(manifold, ce.value, ce.gradient, ce.hessian, None, float(inf_estimate), name, meta)
    if isinstance(manifold, ChartManifold):
        M = manifold

        def grad(p):
            G = M.metric_tensor(p)
            return np.linalg.solve(G, ce.gradient(p)[..., None])[..., 0]

        def coord_hess(p):
            gam = M.christoffel(p)
            return ce.hessian(p) - np.einsum("...kij,...k->...ij", gam, ce.gradient(p))

        def hess(p):
            B = M.tangent_basis(p)
            return np.swapaxes(B, -1, -2) @ coord_hess(p) @ B

        def lap(p):
            G = M.metric_tensor(p)
            return np.trace(np.linalg.solve(G, coord_hess(p)), axis1=-2, axis2=-1)

        return ScalarField(M, ce.value, grad, hess, lap, float(inf_estimate), name, meta)
    raise CapabilityError(f"expression fields need a chart manifold, not {manifold.name}")


def quadratic_field(dim, scale=1.0):
    """``scale * |p|^2 / 2`` on ``R^dim``; infimum 0."""
    M = Euclidean(dim)
    eye = np.eye(dim)
    return ScalarField(
        M,
        lambda p: 0.5 * scale * np.sum(np.asarray(p, dtype=float) ** 2, axis=-1),
        lambda p: scale * np.asarray(p, dtype=float),
        lambda p: np.broadcast_to(scale * eye, np.shape(p)[:-1] + (dim, dim)).copy(),
        lambda p: np.full(np.shape(p)[:-1], scale * dim, dtype=float),
        0.0,
        "quadratic",
        {"builtin": "quadratic", "dim": dim, "scale": scale},
    )


def linear_field(a, inf_estimate=-math.inf):
    """``<a, p>`` on ``R^len(a)``."""
    a = np.asarray(a, dtype=float)
    dim = a.shape[0]
    M = Euclidean(dim)
    return ScalarField(
        M,
        lambda p: np.asarray(p, dtype=float) @ a,
        lambda p: np.broadcast_to(a, np.shape(p)).copy(),
        lambda p: np.zeros(np.shape(p)[:-1] + (dim, dim)),
        lambda p: np.zeros(np.shape(p)[:-1]),
        float(inf_estimate),
        "linear",
        {"builtin": "linear", "a": a.tolist()},
    )


def constant_field(manifold, c=0.0):
    return ScalarField(
        manifold,
        lambda p: np.full(np.shape(p)[:-1], float(c)),
        lambda p: np.zeros(np.shape(p)),
        lambda p: np.zeros(np.shape(p)[:-1] + (manifold.dim, manifold.dim)),
        lambda p: np.zeros(np.shape(p)[:-1]),
        float(c),
        "constant",
        {"builtin": "constant", "c": float(c)},
    )


def height_field(p0, e, inf_estimate=-math.inf):
    """Ambient height ``<y - p0, e>`` on ``R^n``; gradient is constantly ``e``."""
    p0 = np.asarray(p0, dtype=float)
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise DomainError("height direction must be a unit vector")
    n = e.shape[0]
    return HeightField(
        Euclidean(n),
        lambda y: (np.asarray(y, dtype=float) - p0) @ e,
        lambda y: np.broadcast_to(e, np.shape(y)).copy(),
        lambda y: np.zeros(np.shape(y)[:-1] + (n, n)),
        lambda y: np.zeros(np.shape(y)[:-1]),
        float(inf_estimate),
        "height",
        {"builtin": "height", "p0": p0.tolist(), "e": e.tolist()},
        base=p0,
        direction=e,
        pulled_back=False,
    )


def field_from_spec(spec, manifold=None):
    """Build a field from a config mapping (``kind`` = expr | quadratic | linear | height)."""
    kind = str(spec.get("kind", "expr")).strip().lower()
    if kind == "expr":
        if "expr" not in spec:
            raise ConfigError("expression field needs 'expr'", key="expr")
        if "inf" not in spec:
            raise ConfigError("fields must declare their infimum", key="inf")
        if manifold is None:
            manifold = Euclidean(int(spec.get("dim", 2)))
        return expression_field(spec["expr"], manifold, float(spec["inf"]))
    if kind == "quadratic":
        return quadratic_field(int(spec.get("dim", 2)), float(spec.get("scale", 1.0)))
    if kind == "linear":
        return linear_field(_vector(spec, "a"), float(spec.get("inf", -math.inf)))
    if kind == "height":
        return height_field(_vector(spec, "p0"), _vector(spec, "e"), float(spec.get("inf", -math.inf)))
    raise ConfigError(f"unknown field kind {kind!r}", key="kind")


def _vector(spec, key):
    if key not in spec:
        raise ConfigError("missing vector", key=key)
    raw = spec[key]
    if isinstance(raw, str):
        try:
            return np.array([float(t) for t in raw.replace(",", " ").split()])
        except ValueError as exc:
            raise ConfigError(f"bad vector {raw!r}", key=key) from exc
    return np.asarray(raw, dtype=float)


# -- derivative checks ----------------------------------------------------------

def _central_difference(f, p, h):
    M = f.manifold
    B = M.tangent_basis(p)
    plus = M.exp_map(p, (h * B).T)
    minus = M.exp_map(p, (-h * B).T)
    fp, fm = f.value(plus), f.value(minus)
    return (fp - fm) / (2.0 * h), max(np.max(np.abs(fp)), np.max(np.abs(fm))), B


def gradient_fd(f, p, step=1e-5):
    """Central-difference gradient along geodesics in the orthonormal frame at ``p``.

    A half-step rerun detects cancellation: if the two estimates disagree
    and the predicted round-off at the half step explains the disagreement,
    :class:`NumericalPrecisionError` is raised.
    """
    p = np.asarray(p, dtype=float)
    if not step > 0:
        raise DomainError("step must be positive")
    c, scale, B = _central_difference(f, p, step)
    c2, _, _ = _central_difference(f, p, step / 2.0)
    gap = float(np.max(np.abs(c - c2)))
    roundoff = 2.0 * np.finfo(float).eps * (scale + 1.0) / step
    if gap > 1e-6 * (1.0 + float(np.max(np.abs(c)))) and roundoff >= 0.1 * gap:
        raise NumericalPrecisionError(f"finite-difference step {step} dominated by cancellation")
    return B @ c


@dataclass
class HessianBound:
    K: float
    argmax: np.ndarray
    samples: int
    sampled_lower_bound: bool = True

    def to_dict(self):
        return {"K": self.K, "argmax": np.asarray(self.argmax).tolist(), "samples": self.samples,
                "sampled_lower_bound": self.sampled_lower_bound}


def hessian_norm_bound(f, region, samples, seed):
    """Largest sampled Hessian operator norm over a ball (a lower bound on the sup)."""
    if not f.has_hessian:
        raise CapabilityError(f"{f.name}: no Hessian available")
    pts = sample_ball(f.manifold, region.center, region.radius, samples, seed)
    H = f.hessian(pts)
    norms = np.max(np.abs(np.linalg.eigvalsh(H)), axis=-1)
    i = int(np.argmax(norms))
    return HessianBound(float(norms[i]), pts[i], int(samples))


@dataclass
class LipschitzReport:
    verdict: str
    worst_ratio: float
    witness: Optional[tuple]
    violations: int
    K: float

    def to_dict(self):
        w = None
        if self.witness is not None:
            w = [np.asarray(x).tolist() for x in self.witness]
        return {"verdict": self.verdict, "worst_ratio": self.worst_ratio, "witness": w,
                "violations": self.violations, "K": self.K}


def gradient_lipschitz_check(f, M, K, pairs, slack=1e-8):
    """Check ``| |grad f(p)| - |grad f(q)| | <= K d(p, q)`` over ``pairs``."""
    P = np.asarray([a for a, _ in pairs], dtype=float)
    Q = np.asarray([b for _, b in pairs], dtype=float)
    gp = f.grad_norm(P)
    gq = f.grad_norm(Q)
    d = np.asarray(M.distance(P, Q), dtype=float)
    lhs = np.abs(gp - gq)
    bad = lhs > K * d + slack
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d > 0, lhs / np.where(K * d > 0, K * d, np.nan), 0.0)
    ratio = np.where(np.isnan(ratio), np.where(lhs > slack, np.inf, 0.0), ratio)
    worst = int(np.argmax(ratio)) if len(ratio) else 0
    witness = None
    if np.any(bad):
        j = int(np.flatnonzero(bad)[np.argmax(ratio[bad])])
        witness = (P[j], Q[j])
    elif len(ratio):
        witness = (P[worst], Q[worst])
    return LipschitzReport("pass" if not np.any(bad) else "fail",
                           float(ratio[worst]) if len(ratio) else 0.0, witness, int(np.sum(bad)), float(K))
