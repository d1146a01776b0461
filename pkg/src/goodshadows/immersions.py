"""Immersed submanifolds ``h: M^m -> R^n`` with second-order data.

Every immersion carries an intrinsic :class:`~goodshadows.manifolds.Manifold`
(``imm.manifold``) on which distances, geodesics and ball sampling happen.
Frames are expressed so that ``tangent_frame(p)[:, a]`` is the image of
``manifold.tangent_basis(p)[:, a]``; the second fundamental form ``sff`` is
given in that orthonormal frame with values in ``R^n``.
"""

import math

import numpy as np

from .errors import DomainError
from .fields import HeightField
from .manifolds import ChartManifold, Euclidean, Sphere


def _normal_complement(E):
    """Orthonormal basis of the orthogonal complement of the columns of ``E``."""
    U, _, _ = np.linalg.svd(E, full_matrices=True)
    return U[..., :, E.shape[-1]:]


class Immersion:
    name = "immersion"
    complete = True
    bounded_sff = True
    sff_bound = None

    def __init__(self, manifold, n):
        self.manifold = manifold
        self.m = manifold.dim
        self.n = int(n)
        if not self.n > self.m:
            raise DomainError("ambient dimension must exceed intrinsic dimension")

    def position(self, p):
        raise NotImplementedError

    def tangent_frame(self, p):
        raise NotImplementedError

    def normal_frame(self, p):
        return _normal_complement(self.tangent_frame(p))

    def sff(self, p):
        raise NotImplementedError

    def mean_curvature(self, p):
        S = self.sff(p)
        return np.trace(S, axis1=-3, axis2=-2) / self.m

    def normal_projection(self, p, v):
        E = self.tangent_frame(p)
        v = np.asarray(v, dtype=float)
        return v - np.einsum("...ia,...a->...i", E, np.einsum("...ia,...i->...a", E, v))

    def describe(self):
        return {"kind": self.name, "m": self.m, "n": self.n, "complete": self.complete,
                "bounded_sff": self.bounded_sff}


class ChartImmersion(Immersion):
    """Immersion of a chart ``U subset R^m`` given by analytic derivatives.

    ``manifold`` defaults to the induced-metric :class:`ChartManifold`; pass a
    :class:`Euclidean` manifold when the parametrization is isometric.
    """

    name = "chart-immersion"

    def __init__(self, param, jacobian, second, m, n, manifold=None, domain=None, name=None,
                 complete=True, bounded_sff=True, sff_bound=None, metric_lower_bound=None):
        if manifold is None:
            manifold = ChartManifold(param, jacobian, second, m, domain=domain,
                                     metric_lower_bound=metric_lower_bound, complete=complete)
        super().__init__(manifold, n)
        self.param, self.jacobian, self.second = param, jacobian, second
        if name:
            self.name = name
        self.complete = complete
        self.bounded_sff = bounded_sff
        self.sff_bound = sff_bound

    def position(self, p):
        return self.param(np.asarray(p, dtype=float))

    def tangent_frame(self, p):
        p = np.asarray(p, dtype=float)
        return self.jacobian(p) @ self.manifold.tangent_basis(p)

    def sff(self, p):
        p = np.asarray(p, dtype=float)
        E = self.tangent_frame(p)
        S = self.second(p)
        B = self.manifold.tangent_basis(p)
        Sab = np.einsum("...kij,...ia,...jb->...abk", S, B, B)
        tang = np.einsum("...kc,...abk->...abc", E, Sab)
        return Sab - np.einsum("...kc,...abc->...abk", E, tang)

    def hessian_via_christoffel(self, p, e):
        """Hessian of ``<h, e>`` from chart derivatives and Christoffel symbols.

        Independent of :meth:`sff`; used as a cross-check oracle.  Returned in
        the manifold's orthonormal basis.
        """
        p = np.asarray(p, dtype=float)
        J = self.jacobian(p)
        S = self.second(p)
        G = np.swapaxes(J, -1, -2) @ J
        lower = np.einsum("...aij,...al->...lij", S, J)
        gam = np.einsum("...kl,...lij->...kij", np.linalg.inv(G), lower)
        de = np.einsum("...ak,a->...k", J, e)
        Hc = np.einsum("...aij,a->...ij", S, e) - np.einsum("...kij,...k->...ij", gam, de)
        B = self.manifold.tangent_basis(p)
        return np.swapaxes(B, -1, -2) @ Hc @ B


class SphereImmersion(Immersion):
    """Round sphere ``center + S^m(radius)``; ``domain`` restricts to a region."""

    name = "sphere"

    def __init__(self, m=2, radius=1.0, center=None, domain=None, complete=True, name=None):
        M = Sphere(m, radius, domain=domain)
        super().__init__(M, m + 1)
        self.radius = float(radius)
        self.center = np.zeros(m + 1) if center is None else np.asarray(center, dtype=float)
        self.complete = complete
        self.sff_bound = math.sqrt(m) / self.radius
        if name:
            self.name = name

    def position(self, p):
        return self.center + np.asarray(p, dtype=float)

    def tangent_frame(self, p):
        return self.manifold.tangent_basis(p)

    def sff(self, p):
        p = np.asarray(p, dtype=float)
        eye = np.eye(self.m)
        return -eye[..., None] * (p / self.radius**2)[..., None, None, :]

    def mean_curvature(self, p):
        return -np.asarray(p, dtype=float) / self.radius**2

    def describe(self):
        d = super().describe()
        d.update(radius=self.radius, center=self.center.tolist())
        return d


class CurveImmersion(Immersion):
    """Unit-speed curve ``s -> c(s)`` on an interval of ``R``.

    ``position``, ``velocity`` and ``acceleration`` take arrays of shape
    ``(..., 1)`` and return ``(..., n)``.
    """

    name = "curve"

    def __init__(self, position, velocity, acceleration, n, s_range=(-math.inf, math.inf),
                 complete=True, name=None, curvature_bound=None):
        lo, hi = s_range
        domain = None
        if math.isfinite(lo) or math.isfinite(hi):
            domain = lambda s: (s[..., 0] >= lo) & (s[..., 0] <= hi)
        super().__init__(Euclidean(1, domain=domain), n)
        self._pos, self._vel, self._acc = position, velocity, acceleration
        self.s_range = (float(lo), float(hi))
        self.complete = complete
        self.sff_bound = curvature_bound
        if name:
            self.name = name

    def position(self, p):
        return self._pos(np.asarray(p, dtype=float))

    def tangent_frame(self, p):
        return self._vel(np.asarray(p, dtype=float))[..., :, None]

    def sff(self, p):
        p = np.asarray(p, dtype=float)
        a = self._acc(p)
        t = self._vel(p)
        k = a - np.sum(a * t, axis=-1, keepdims=True) * t
        return k[..., None, None, :]


# -- shipped examples -------------------------------------------------------------

def circle(radius=1.0, center=(0.0, 0.0)):
    """Circle of radius ``R`` in ``R^2`` as an immersion of the whole line."""
    R = float(radius)
    c = np.asarray(center, dtype=float)

    def pos(s):
        t = s[..., 0] / R
        return c + R * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def vel(s):
        t = s[..., 0] / R
        return np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def acc(s):
        t = s[..., 0] / R
        return -np.stack([np.cos(t), np.sin(t)], axis=-1) / R

    imm = CurveImmersion(pos, vel, acc, 2, name="circle", curvature_bound=1.0 / R)
    imm.radius = R
    return imm


def line(point=(0.0, 0.0, 0.0), direction=(1.0, 0.0, 0.0)):
    p = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    n = p.shape[0]
    return CurveImmersion(
        lambda s: p + s[..., :1] * d,
        lambda s: np.broadcast_to(d, s.shape[:-1] + (n,)).copy(),
        lambda s: np.zeros(s.shape[:-1] + (n,)),
        n,
        name="line",
        curvature_bound=0.0,
    )


def plane():
    """``R^2 x {0}`` in ``R^3``."""

    def param(x):
        return np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)

    def jac(x):
        J = np.zeros(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = J[..., 1, 1] = 1.0
        return J

    return ChartImmersion(param, jac, lambda x: np.zeros(x.shape[:-1] + (3, 2, 2)), 2, 3,
                          manifold=Euclidean(2), name="plane", sff_bound=0.0)


def cylinder(radius=1.0):
    """``S^1(R) x R`` in ``R^3``, immersed from its flat universal cover ``R^2``."""
    R = float(radius)

    def param(x):
        u, z = x[..., 0] / R, x[..., 1]
        return np.stack([R * np.cos(u), R * np.sin(u), z], axis=-1)

    def jac(x):
        u = x[..., 0] / R
        J = np.zeros(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = -np.sin(u)
        J[..., 1, 0] = np.cos(u)
        J[..., 2, 1] = 1.0
        return J

    def second(x):
        u = x[..., 0] / R
        S = np.zeros(x.shape[:-1] + (3, 2, 2))
        S[..., 0, 0, 0] = -np.cos(u) / R
        S[..., 1, 0, 0] = -np.sin(u) / R
        return S

    imm = ChartImmersion(param, jac, second, 2, 3, manifold=Euclidean(2), name="cylinder", sff_bound=1.0 / R)
    imm.radius = R
    return imm


def ellipsoid(a=2.0, b=1.0, c=1.0):
    """Ellipsoid ``x^2/a^2 + y^2/b^2 + z^2/c^2 = 1``.

    Chart ``(t, s) -> (a cos t, b sin t cos s, c sin t sin s)`` on
    ``0 < t < pi``; its poles lie on the x-axis, so the bottom point
    ``(0, 0, -c)`` is the regular chart point ``(pi/2, -pi/2)``.
    """

    def param(x):
        t, s = x[..., 0], x[..., 1]
        return np.stack([a * np.cos(t), b * np.sin(t) * np.cos(s), c * np.sin(t) * np.sin(s)], axis=-1)

    def jac(x):
        t, s = x[..., 0], x[..., 1]
        J = np.zeros(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = -a * np.sin(t)
        J[..., 1, 0] = b * np.cos(t) * np.cos(s)
        J[..., 1, 1] = -b * np.sin(t) * np.sin(s)
        J[..., 2, 0] = c * np.cos(t) * np.sin(s)
        J[..., 2, 1] = c * np.sin(t) * np.cos(s)
        return J

    def second(x):
        t, s = x[..., 0], x[..., 1]
        S = np.zeros(x.shape[:-1] + (3, 2, 2))
        S[..., 0, 0, 0] = -a * np.cos(t)
        S[..., 1, 0, 0] = -b * np.sin(t) * np.cos(s)
        S[..., 1, 0, 1] = S[..., 1, 1, 0] = -b * np.cos(t) * np.sin(s)
        S[..., 1, 1, 1] = -b * np.sin(t) * np.cos(s)
        S[..., 2, 0, 0] = -c * np.sin(t) * np.sin(s)
        S[..., 2, 0, 1] = S[..., 2, 1, 0] = c * np.cos(t) * np.cos(s)
        S[..., 2, 1, 1] = -c * np.sin(t) * np.sin(s)
        return S

    domain = lambda x: (x[..., 0] > 0) & (x[..., 0] < math.pi)
    imm = ChartImmersion(param, jac, second, 2, 3, domain=domain, name="ellipsoid")
    imm.axes = (a, b, c)
    return imm


def hemisphere(radius=1.0):
    """Open upper hemisphere ``{z > 0}`` of ``S^2``: incomplete."""
    return SphereImmersion(2, radius, domain=lambda p: p[..., 2] > 0, complete=False, name="hemisphere")


def graph_surface(g):
    """Graph of ``g(x, y)`` in ``R^3``."""
    from .manifolds import graph_manifold

    M = graph_manifold(g)
    return ChartImmersion(M.param, M.jacobian, M.second, 2, 3, manifold=M, name="graph", bounded_sff=False)


# -- pulled-back heights ----------------------------------------------------------

def pullback_height(imm, p0, e, inf_estimate=0.0):
    """``f_e o h`` with ``f_e(y) = <y - p0, e>``.

    Gradient is the tangential projection of ``e``; Hessian is
    ``<sigma(., .), e>``; Laplacian is ``m <H, e>`` with ``H`` the normalized
    mean curvature vector.
    """
    p0 = np.asarray(p0, dtype=float)
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise DomainError("height direction must be a unit vector")
    M = imm.manifold

    def value(x):
        return (imm.position(x) - p0) @ e

    def gradient(x):
        x = np.asarray(x, dtype=float)
        E = imm.tangent_frame(x)
        B = M.tangent_basis(x)
        coeff = np.einsum("...ia,i->...a", E, e)
        return np.einsum("...ra,...a->...r", np.broadcast_to(B, E.shape[:-2] + B.shape[-2:]), coeff)

    def hessian(x):
        return np.einsum("...abk,k->...ab", imm.sff(x), e)

    def laplacian(x):
        return imm.m * (imm.mean_curvature(x) @ e)

    return HeightField(M, value, gradient, hessian, laplacian, float(inf_estimate), "height∘h",
                       {"builtin": "pullback-height", "immersion": imm.name, "p0": p0.tolist(),
                        "e": e.tolist()},
                       base=p0, direction=e, pulled_back=True)


def fd_mean_curvature(imm, p, step=1e-4):
    """Mean curvature vector from central differences of ``imm.position`` in chart coordinates."""
    p = np.asarray(p, dtype=float)
    m = p.shape[-1]
    I = np.eye(m) * step
    J = np.stack([(imm.position(p + I[a]) - imm.position(p - I[a])) / (2 * step) for a in range(m)], axis=-1)
    D2 = np.empty(J.shape[:-1] + (m, m))
    h0 = imm.position(p)
    for a in range(m):
        for b in range(m):
            if a == b:
                D2[..., a, a] = (imm.position(p + I[a]) - 2 * h0 + imm.position(p - I[a])) / step**2
            else:
                D2[..., a, b] = (imm.position(p + I[a] + I[b]) - imm.position(p + I[a] - I[b])
                                 - imm.position(p - I[a] + I[b]) + imm.position(p - I[a] - I[b])) / (4 * step**2)
    g = np.swapaxes(J, -1, -2) @ J
    P = np.eye(J.shape[-2]) - J @ np.linalg.solve(g, np.swapaxes(J, -1, -2))
    trace = np.einsum("ab,kab->k", np.linalg.inv(g), D2)
    return P @ trace / m
