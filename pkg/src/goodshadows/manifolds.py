"""Riemannian manifolds used by the shadow finders.

Points and tangent vectors are plain float arrays in each manifold's
*representation*: chart coordinates for :class:`Euclidean` and
:class:`ChartManifold`, ambient coordinates for :class:`Sphere` (in
``R^{m+1}``) and :class:`Hyperbolic` (hyperboloid model in Minkowski
``R^{m,1}``).  Most methods broadcast over leading axes.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError

GEODESIC_RTOL = 1e-10
GEODESIC_ATOL = 1e-12


def _householder_complement(u):
    """Orthonormal basis (columns) of the complement of unit ``u``.

    Broadcasts over leading axes of ``u``.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    e0 = np.zeros(n)
    e0[0] = 1.0
    sign = np.where(u[..., :1] < 0.5, -1.0, 1.0)
    w = u + sign * e0
    nw2 = np.sum(w * w, axis=-1)[..., None, None]
    H = np.eye(n) - 2.0 * w[..., :, None] * w[..., None, :] / nw2
    # H maps e0 to +-u; the remaining columns span u^perp
    return H[..., :, 1:]


class Manifold:
    """Common interface.

    Subclasses set ``dim`` (intrinsic), ``rep_dim`` (length of point arrays),
    ``ricci_lower_bound`` (``None`` when unknown), ``complete`` and
    ``injectivity_radius``.
    """

    name = "manifold"
    dim = 0
    rep_dim = 0
    ricci_lower_bound = None
    complete = True
    injectivity_radius = math.inf
    has_chart = False

    def __init__(self, domain=None):
        self.domain = domain

    # -- points ------------------------------------------------------------
    def on_manifold(self, p):
        return np.ones(np.shape(p)[:-1], dtype=bool)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        ok = self.on_manifold(p)
        if self.domain is not None:
            ok = ok & np.asarray(self.domain(p), dtype=bool)
        return ok

    def check_point(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.rep_dim:
            raise DomainError(f"{self.name}: expected {self.rep_dim} coordinates, got {p.shape[-1]}")
        if not np.all(self.contains(p)):
            raise DomainError(f"{self.name}: point outside the chart domain")
        return p

    def retract(self, p):
        return np.asarray(p, dtype=float)

    def project(self, p, v):
        return np.asarray(v, dtype=float)

    # -- metric ------------------------------------------------------------
    def inner(self, p, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def norm(self, p, v):
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    def tangent_basis(self, p):
        """``(rep_dim, dim)`` matrix whose columns are orthonormal at ``p``."""
        raise NotImplementedError

    def metric_tensor(self, p):
        B = self.tangent_basis(p)
        return np.array([[self.inner(p, B[:, i], B[:, j]) for j in range(self.dim)] for i in range(self.dim)])

    def distance(self, p, q):
        raise NotImplementedError

    def exp_map(self, p, v):
        raise NotImplementedError

    # -- balls -------------------------------------------------------------
    def ball_proposal(self, center, r, u01):
        """Map uniform ``u01`` (N, dim) to chart-box proposals for B(center, r).

        Returns ``(points, weights, box_volume)`` where ``weights`` is the
        metric volume density times the ball indicator, so that
        ``box_volume * mean(weights)`` estimates the ball's measure.
        """
        raise NotImplementedError

    def ball_density_max(self, center, r):
        raise NotImplementedError

    def describe(self):
        return {"kind": self.name, "dim": self.dim}


class _NormalCoordinateBalls:
    """Ball sampling in geodesic normal coordinates (model manifolds)."""

    def _radial_density(self, rho):
        raise NotImplementedError

    def _max_ball_radius(self):
        return math.inf

    def ball_proposal(self, center, r, u01):
        if not r > 0:
            raise DomainError("ball radius must be positive")
        if r >= self._max_ball_radius():
            raise DomainError(f"{self.name}: radius {r} exceeds normal-coordinate chart")
        center = self.check_point(center)
        v = (2.0 * np.asarray(u01) - 1.0) * r
        rho = np.linalg.norm(v, axis=-1)
        inside = rho <= r
        weights = np.where(inside, self._radial_density(rho), 0.0)
        B = self.tangent_basis(center)
        points = self.exp_map(center, v @ B.T)
        return points, weights, (2.0 * r) ** self.dim

    def ball_density_max(self, center, r):
        rho = np.linspace(0.0, r, 257)
        return float(np.max(self._radial_density(rho)))


class Euclidean(_NormalCoordinateBalls, Manifold):
    """Flat ``R^m``."""

    name = "euclidean"
    ricci_lower_bound = 0.0
    has_chart = True

    def __init__(self, dim, domain=None):
        super().__init__(domain)
        self.dim = self.rep_dim = int(dim)

    def tangent_basis(self, p):
        return np.eye(self.dim)

    def metric_tensor(self, p):
        return np.eye(self.dim)

    def distance(self, p, q):
        return np.linalg.norm(np.asarray(q, dtype=float) - np.asarray(p, dtype=float), axis=-1)

    def exp_map(self, p, v):
        return np.asarray(p, dtype=float) + np.asarray(v, dtype=float)

    def volume_density(self, x):
        return np.ones(np.shape(x)[:-1])

    def _radial_density(self, rho):
        return np.ones_like(rho)


class Sphere(_NormalCoordinateBalls, Manifold):
    """Round sphere of radius ``radius`` centred at the origin of ``R^{m+1}``."""

    name = "sphere"

    def __init__(self, dim, radius=1.0, domain=None):
        super().__init__(domain)
        self.dim = int(dim)
        self.rep_dim = self.dim + 1
        self.radius = float(radius)
        if self.radius <= 0:
            raise DomainError("sphere radius must be positive")
        self.ricci_lower_bound = (self.dim - 1) / self.radius**2
        self.injectivity_radius = math.pi * self.radius

    def on_manifold(self, p):
        return np.abs(np.linalg.norm(p, axis=-1) - self.radius) <= 1e-8 * max(1.0, self.radius)

    def retract(self, p):
        p = np.asarray(p, dtype=float)
        return self.radius * p / np.linalg.norm(p, axis=-1, keepdims=True)

    def project(self, p, v):
        p = np.asarray(p, dtype=float)
        u = p / np.linalg.norm(p, axis=-1, keepdims=True)
        return v - np.sum(v * u, axis=-1, keepdims=True) * u

    def tangent_basis(self, p):
        p = np.asarray(p, dtype=float)
        return _householder_complement(p / np.linalg.norm(p, axis=-1, keepdims=True))

    def distance(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        a = np.linalg.norm(p - q, axis=-1)
        b = np.linalg.norm(p + q, axis=-1)
        return 2.0 * self.radius * np.arctan2(a, b)

    def exp_map(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        theta = nv / self.radius
        safe = np.where(nv > 0, nv, 1.0)
        out = p * np.cos(theta) + np.where(nv > 0, v / safe, 0.0) * self.radius * np.sin(theta)
        return out

    def _radial_density(self, rho):
        R = self.radius
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(rho > 0, R * np.sin(rho / R) / np.where(rho > 0, rho, 1.0), 1.0)
        return ratio ** (self.dim - 1)

    def _max_ball_radius(self):
        return math.pi * self.radius + 1e-12

    def describe(self):
        return {"kind": self.name, "dim": self.dim, "radius": self.radius}


class Hyperbolic(_NormalCoordinateBalls, Manifold):
    """Space form of curvature ``c < 0``, hyperboloid model.

    Points satisfy ``-x0^2 + |xs|^2 = 1/c`` with ``x0 > 0``.
    """

    name = "hyperbolic"

    def __init__(self, dim, curvature=-1.0, domain=None):
        super().__init__(domain)
        if not curvature < 0:
            raise DomainError("hyperbolic curvature must be negative")
        self.dim = int(dim)
        self.rep_dim = self.dim + 1
        self.curvature = float(curvature)
        self.k = math.sqrt(-self.curvature)
        self.ricci_lower_bound = (self.dim - 1) * self.curvature

    @staticmethod
    def minkowski(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return -u[..., 0] * v[..., 0] + np.sum(u[..., 1:] * v[..., 1:], axis=-1)

    def point(self, spatial):
        """Point with the given spatial coordinates."""
        xs = np.asarray(spatial, dtype=float)
        x0 = np.sqrt(1.0 / self.k**2 + np.sum(xs * xs, axis=-1, keepdims=True))
        return np.concatenate([x0, xs], axis=-1)

    def origin(self):
        return self.point(np.zeros(self.dim))

    def on_manifold(self, p):
        p = np.asarray(p, dtype=float)
        return (p[..., 0] > 0) & (np.abs(self.minkowski(p, p) * self.k**2 + 1.0) <= 1e-8 * np.maximum(1.0, p[..., 0] ** 2))

    def retract(self, p):
        p = np.asarray(p, dtype=float)
        return self.point(p[..., 1:])

    def inner(self, p, u, v):
        return self.minkowski(u, v)

    def project(self, p, v):
        p = np.asarray(p, dtype=float)
        return v + self.k**2 * self.minkowski(v, p)[..., None] * p

    def tangent_basis(self, p):
        p = np.asarray(p, dtype=float)
        k = self.k
        p0, ps = p[0], p[1:]
        B = np.zeros((self.rep_dim, self.dim))
        for j in range(self.dim):
            col = np.zeros(self.rep_dim)
            col[0] = k * ps[j]
            col[1:] = k * k * ps[j] * ps / (1.0 + k * p0)
            col[1 + j] += 1.0
            B[:, j] = col
        return B

    def distance(self, p, q):
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        chord = np.sqrt(np.maximum(self.minkowski(d, d), 0.0))
        return (2.0 / self.k) * np.arcsinh(self.k * chord / 2.0)

    def exp_map(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        rho = np.sqrt(np.maximum(self.minkowski(v, v), 0.0))[..., None]
        kr = self.k * rho
        safe = np.where(kr > 0, kr, 1.0)
        scale = np.where(kr > 0, np.sinh(kr) / safe, 1.0)
        return np.cosh(kr) * p + scale * v

    def _radial_density(self, rho):
        kr = self.k * np.asarray(rho, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(kr > 0, np.sinh(kr) / np.where(kr > 0, kr, 1.0), 1.0)
        return ratio ** (self.dim - 1)

    def describe(self):
        return {"kind": self.name, "dim": self.dim, "curvature": self.curvature}


class ChartManifold(Manifold):
    """A single chart ``U subset R^m`` with the metric induced by ``h: U -> R^n``.

    ``param``, ``jacobian`` and ``second`` give ``h``, ``dh`` (shape
    ``(..., n, m)``) and ``d^2 h`` (shape ``(..., n, m, m)``).  Geodesics are
    integrated with the Christoffel symbols of the induced metric; distance is
    found by shooting.
    """

    name = "chart"
    has_chart = True

    def __init__(self, param, jacobian, second, dim, domain=None, metric_lower_bound=None,
                 ricci_lower_bound=None, complete=True, name=None):
        super().__init__(domain)
        self.param = param
        self.jacobian = jacobian
        self.second = second
        self.dim = self.rep_dim = int(dim)
        self.metric_lower_bound = metric_lower_bound
        self.ricci_lower_bound = ricci_lower_bound
        self.complete = complete
        if name:
            self.name = name

    def metric_tensor(self, p):
        J = self.jacobian(np.asarray(p, dtype=float))
        return np.swapaxes(J, -1, -2) @ J

    def inner(self, p, u, v):
        G = self.metric_tensor(p)
        return np.einsum("...i,...ij,...j->...", np.asarray(u, dtype=float), G, np.asarray(v, dtype=float))

    def tangent_basis(self, p):
        L = np.linalg.cholesky(self.metric_tensor(p))
        return np.swapaxes(np.linalg.inv(L), -1, -2)

    def volume_density(self, x):
        return np.sqrt(np.linalg.det(self.metric_tensor(x)))

    def christoffel(self, p):
        """``Gamma[k, i, j]`` at ``p`` (broadcasts over leading axes)."""
        p = np.asarray(p, dtype=float)
        J = self.jacobian(p)
        S = self.second(p)
        G = np.swapaxes(J, -1, -2) @ J
        Ginv = np.linalg.inv(G)
        lower = np.einsum("...aij,...al->...lij", S, J)
        return np.einsum("...kl,...lij->...kij", Ginv, lower)

    # -- geodesics ---------------------------------------------------------
    def _geodesic_rhs(self, n):
        m = self.dim

        def rhs(t, y):
            Y = y.reshape(n, 2 * m)
            x, v = Y[:, :m], Y[:, m:]
            gam = self.christoffel(x)
            acc = -np.einsum("nkij,ni,nj->nk", gam, v, v)
            return np.concatenate([v, acc], axis=1).ravel()

        return rhs

    def _geodesics(self, p, V, max_step=np.inf):
        V = np.atleast_2d(np.asarray(V, dtype=float))
        n = V.shape[0]
        P = np.broadcast_to(np.asarray(p, dtype=float), V.shape)
        y0 = np.concatenate([P, V], axis=1).ravel()
        sol = solve_ivp(self._geodesic_rhs(n), (0.0, 1.0), y0, method="DOP853",
                        rtol=GEODESIC_RTOL, atol=GEODESIC_ATOL, max_step=max_step)
        if not sol.success:
            raise DomainError(f"{self.name}: geodesic integration failed ({sol.message})")
        return sol.y[:, -1].reshape(n, 2 * self.dim)[:, : self.dim]

    def exp_map(self, p, v, max_step=np.inf):
        v = np.asarray(v, dtype=float)
        single = v.ndim == 1
        out = self._geodesics(p, v, max_step=max_step)
        if self.domain is not None and not np.all(self.contains(out)):
            raise DomainError(f"{self.name}: geodesic leaves the chart domain")
        return out[0] if single else out

    def shoot(self, p, q, tol=1e-12, max_iter=50):
        """Initial velocities ``v`` with ``exp_p(v) = q`` (damped Newton)."""
        p = np.asarray(p, dtype=float)
        Q = np.atleast_2d(np.asarray(q, dtype=float))
        V = Q - p
        m = self.dim
        resid = self._geodesics(p, V) - Q
        for _ in range(max_iter):
            err = np.linalg.norm(resid, axis=1)
            if np.all(err <= tol * (1.0 + np.linalg.norm(Q, axis=1))):
                break
            h = 1e-7 * (1.0 + np.linalg.norm(V, axis=1))
            Jac = np.empty((V.shape[0], m, m))
            base = resid + Q
            for j in range(m):
                Vj = V.copy()
                Vj[:, j] += h
                Jac[:, :, j] = (self._geodesics(p, Vj) - base) / h[:, None]
            step = np.linalg.solve(Jac, -resid[..., None])[..., 0]
            lam = np.ones(V.shape[0])
            for _ in range(30):
                trial = V + lam[:, None] * step
                new_resid = self._geodesics(p, trial) - Q
                worse = np.linalg.norm(new_resid, axis=1) > err * (1.0 - 1e-4 * lam) + tol
                if not np.any(worse):
                    break
                lam = np.where(worse, lam / 2.0, lam)
            V, resid = trial, new_resid
        return V

    def distance(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        single = q.ndim == 1
        Q = np.atleast_2d(q)
        out = np.zeros(Q.shape[0])
        moving = np.linalg.norm(Q - p, axis=1) > 0
        if np.any(moving):
            V = self.shoot(p, Q[moving])
            out[moving] = self.norm(p, V)
        return float(out[0]) if single else out

    # -- balls -------------------------------------------------------------
    def ball_proposal(self, center, r, u01):
        if not r > 0:
            raise DomainError("ball radius must be positive")
        if self.metric_lower_bound is None:
            raise DomainError(f"{self.name}: no metric lower bound to size the chart box")
        center = self.check_point(center)
        half = r / math.sqrt(self.metric_lower_bound)
        x = center + (2.0 * np.asarray(u01) - 1.0) * half
        inside = self.contains(x) & (np.linalg.norm(x - center, axis=-1) <= half)
        dist = np.full(x.shape[0], np.inf)
        if np.any(inside):
            dist[inside] = self.distance(center, x[inside])
        inside &= dist <= r
        weights = np.where(inside, self.volume_density(x), 0.0)
        return x, weights, (2.0 * half) ** self.dim

    def ball_density_max(self, center, r):
        half = r / math.sqrt(self.metric_lower_bound)
        g = np.linspace(-half, half, 33)
        mesh = np.stack(np.meshgrid(*([g] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        return 1.01 * float(np.max(self.volume_density(np.asarray(center) + mesh)))


def graph_manifold(g, variables=("x", "y")):
    """Graph ``{(x, g(x))}`` in ``R^{m+1}`` with its induced metric."""
    from .expr import CompiledExpression

    ge = g if isinstance(g, CompiledExpression) else CompiledExpression(g, variables)
    m = len(ge.variables)

    def param(x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x, ge.value(x)[..., None]], axis=-1)

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        eye = np.broadcast_to(np.eye(m), x.shape[:-1] + (m, m))
        return np.concatenate([eye, ge.gradient(x)[..., None, :]], axis=-2)

    def second(x):
        x = np.asarray(x, dtype=float)
        S = np.zeros(x.shape[:-1] + (m + 1, m, m))
        S[..., m, :, :] = ge.hessian(x)
        return S

    M = ChartManifold(param, jacobian, second, m, metric_lower_bound=1.0, name="graph")
    M.expression = ge.text
    M.describe = lambda: {"kind": "graph", "dim": m, "g": ge.text}
    return M


def manifold_from_spec(spec):
    """Build a manifold from a config mapping (``kind`` plus parameters)."""
    from .errors import ConfigError

    kind = str(spec.get("kind", "euclidean")).strip().lower()
    try:
        if kind in ("euclidean", "r", "rn"):
            return Euclidean(int(spec.get("dim", 2)))
        if kind == "sphere":
            return Sphere(int(spec.get("dim", 2)), float(spec.get("radius", 1.0)))
        if kind == "hyperbolic":
            return Hyperbolic(int(spec.get("dim", 2)), float(spec.get("curvature", -1.0)))
        if kind == "graph":
            if "g" not in spec:
                raise ConfigError("graph manifold needs an expression", key="g")
            return graph_manifold(spec["g"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad manifold parameter: {exc}", key="manifold") from exc
    raise ConfigError(f"unknown manifold kind {kind!r}", key="kind")
