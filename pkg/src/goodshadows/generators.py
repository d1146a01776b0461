"""Sample sets and explicit examples: the wedge curve, hemisphere clouds and tubes."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import sampling
from .errors import DomainError, GenerationError
from .immersions import CurveImmersion, _normal_complement

EZ = np.array([0.0, 0.0, 1.0])


# -- piecewise unit-speed curves ------------------------------------------------------

@dataclass
class _Line:
    start: np.ndarray
    direction: np.ndarray
    length: float

    def eval(self, u):
        pos = self.start + u[:, None] * self.direction
        vel = np.broadcast_to(self.direction, pos.shape)
        return pos, vel, np.zeros_like(pos)


@dataclass
class _Arc:
    """Arc ``c + rho (cos(u/rho) a + sin(u/rho) b)`` with ``a, b`` orthonormal."""

    center: np.ndarray
    a: np.ndarray
    b: np.ndarray
    radius: float
    length: float

    def eval(self, u):
        t = u / self.radius
        c, s = np.cos(t)[:, None], np.sin(t)[:, None]
        pos = self.center + self.radius * (c * self.a + s * self.b)
        vel = -s * self.a + c * self.b
        acc = -(c * self.a + s * self.b) / self.radius
        return pos, vel, acc


def _half_turn(start, heading, offset):
    """Half circle from ``start`` (unit tangent ``heading``) to ``start + offset``; offset is normal to heading."""
    rho = 0.5 * float(np.linalg.norm(offset))
    center = start + 0.5 * offset
    a = (start - center) / rho
    return _Arc(center, a, heading, rho, math.pi * rho)


class PiecewiseCurve:
    def __init__(self, pieces):
        self.pieces = pieces
        self.breaks = np.concatenate([[0.0], np.cumsum([p.length for p in pieces])])

    @property
    def length(self):
        return float(self.breaks[-1])

    def evaluate(self, s):
        s = np.asarray(s, dtype=float)
        flat = s.reshape(-1)
        k = np.clip(np.searchsorted(self.breaks, flat, side="right") - 1, 0, len(self.pieces) - 1)
        n = self.pieces[0].eval(np.zeros(1))[0].shape[1]
        out = [np.empty((len(flat), n)) for _ in range(3)]
        for j in np.unique(k):
            mask = k == j
            vals = self.pieces[j].eval(flat[mask] - self.breaks[j])
            for o, v in zip(out, vals):
                o[mask] = v
        return [o.reshape(s.shape + (n,)) for o in out]


def menger_curvature(points):
    """Curvature of the circle through consecutive triples of a polyline."""
    P = np.asarray(points, dtype=float)
    a, b, c = P[:-2], P[1:-1], P[2:]
    ab, bc, ca = b - a, c - b, a - c
    cross = np.linalg.norm(np.cross(ab, -ca) if P.shape[1] == 3 else
                           (ab[:, 0] * (-ca[:, 1]) - ab[:, 1] * (-ca[:, 0]))[:, None], axis=-1)
    den = np.linalg.norm(ab, axis=1) * np.linalg.norm(bc, axis=1) * np.linalg.norm(ca, axis=1)
    return 2.0 * cross / np.where(den > 0, den, np.inf)


# -- the wedge curve ----------------------------------------------------------------

class WedgeCurve(CurveImmersion):
    """Complete curve of curvature below 1 in ``{x > 0, y > 0}`` whose hull touches the z-axis.

    Segment ``l_k`` is vertical over ``(a_k, a_k)`` with ``a_k = a0 2^-k``
    and half-length ``L_k = L0 + k``.  From the top of ``l_k`` a half circle
    of radius ``R`` heads out along ``(cos t_k, sin t_k, 0)``, a vertical
    descent follows, and a second half circle returns to the bottom of
    ``l_{k+1}``.  A finite number of segments is a truncation of the
    complete curve.
    """

    name = "wedge-curve"

    def __init__(self, segments=12, a0=0.5, R=1.25, L0=1.0, angles=(math.pi / 6, math.pi / 3)):
        if R < 1.0 or segments < 1:
            raise DomainError("need R >= 1 and at least one segment")
        pieces, seg = [], []
        a = [a0 * 0.5**k for k in range(segments)]
        L = [L0 + k for k in range(segments)]
        for k in range(segments):
            col = np.array([a[k], a[k], 0.0])
            bottom = col - L[k] * EZ
            seg.append(len(pieces))
            pieces.append(_Line(bottom, EZ, 2.0 * L[k]))
            if k == segments - 1:
                break
            t = angles[k % len(angles)]
            d = np.array([math.cos(t), math.sin(t), 0.0])
            top = col + L[k] * EZ
            out = _half_turn(top, EZ, 2.0 * R * d)
            pieces.append(out)
            drop_start = top + 2.0 * R * d
            target = np.array([a[k + 1], a[k + 1], -L[k + 1]])
            drop = drop_start[2] - target[2]
            pieces.append(_Line(drop_start, -EZ, drop))
            low = drop_start - drop * EZ
            back = _half_turn(low, -EZ, target - low)
            if back.radius <= 1.0:
                raise GenerationError("return arc radius must exceed 1", witness=low)
            pieces.append(back)
        self.curve = PiecewiseCurve(pieces)
        self.segment_pieces = seg
        self.a = np.array(a)
        self.half_lengths = np.array(L)
        self.radii = np.array([p.radius for p in pieces if isinstance(p, _Arc)])

        def pos(s):
            return self.curve.evaluate(s[..., 0])[0]

        def vel(s):
            return self.curve.evaluate(s[..., 0])[1]

        def acc(s):
            return self.curve.evaluate(s[..., 0])[2]

        kmax = float(1.0 / self.radii.min()) if len(self.radii) else 0.0
        super().__init__(pos, vel, acc, 3, s_range=(0.0, self.curve.length), complete=True,
                         name="wedge-curve", curvature_bound=kmax)

    def segment_range(self, k):
        j = self.segment_pieces[k]
        return float(self.curve.breaks[j]), float(self.curve.breaks[j + 1])

    def samples(self, spacing=0.01, upto=None):
        """Arclength samples (shape ``(N, 1)``) through the end of segment ``upto``."""
        end = self.segment_range(len(self.a) - 1 if upto is None else upto)[1]
        n = int(math.ceil(end / spacing)) + 1
        return np.linspace(0.0, end, n)[:, None]

    def levels(self, spacing=0.01):
        """Truncations of the curve: level ``k`` ends with segment ``l_k``."""
        return [self.samples(spacing, k) for k in range(len(self.a))]

    def fitted_curvature(self, spacing=0.01):
        return menger_curvature(self.position(self.samples(spacing)))


def wedge_arrangement_data():
    """Base point and inward normals of the two faces ``x = 0`` and ``y = 0``."""
    return np.zeros(3), np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


# -- hemisphere samples -------------------------------------------------------------

def hemisphere_cloud(ring=8192, latitudes=24, longitudes=512, lat_min=1e-4, radius=1.0):
    """Equator ring plus geometric latitude rings ``lat_min .. pi/2`` (all include longitude 0)."""
    ph = 2.0 * math.pi * np.arange(ring) / ring
    parts = [np.c_[np.cos(ph), np.sin(ph), np.zeros(ring)]]
    lo = 2.0 * math.pi * np.arange(longitudes) / longitudes
    for th in np.geomspace(lat_min, math.pi / 2, latitudes):
        cz = math.cos(th)
        parts.append(np.c_[cz * np.cos(lo), cz * np.sin(lo), np.full(longitudes, math.sin(th))])
    return radius * np.vstack(parts)


def hemisphere_levels(levels=8, longitudes=256, latitudes=16, z0=0.25):
    """Level ``k`` keeps the open hemisphere above ``z = z0 2^-k``."""
    lo = 2.0 * math.pi * np.arange(longitudes) / longitudes
    out = []
    for k in range(1, levels + 1):
        th = np.geomspace(math.asin(z0 * 0.5**k), math.pi / 2 - 1e-3, latitudes)
        cz, sz = np.cos(th)[:, None], np.sin(th)[:, None]
        pts = np.stack([cz * np.cos(lo), cz * np.sin(lo), np.broadcast_to(sz, (len(th), longitudes))], -1)
        out.append(pts.reshape(-1, 3))
    return out


# -- tubes --------------------------------------------------------------------------

@dataclass
class TubeSample:
    points: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    s: np.ndarray
    k: int
    meta: dict = field(default_factory=dict)

    def hausdorff_to_core(self):
        return float(np.max(self.radii)) if len(self.radii) else 0.0


def _sphere_directions(k, count, seed):
    if k == 1:
        th = 2.0 * math.pi * np.arange(count) / count
        return np.c_[np.cos(th), np.sin(th)]
    return sampling.unit_vectors(seed, count, k + 1, stream=81)


def generate_tube(curve, radius, k=1, s_values=None, directions=128, contains=None, seed=0):
    """Points on the ``k``-sphere bundle of radius ``radius(s)`` around a curve.

    The sphere at ``s`` spans the first ``k + 1`` vectors of an orthonormal
    basis of the normal space of the curve.  ``contains`` (optional) maps
    points to booleans; any point outside raises :class:`GenerationError`.
    """
    n = curve.n
    if not 1 <= k <= n - 2:
        raise GenerationError(f"a {k}-sphere does not fit in the {n - 1}-dimensional normal space")
    if s_values is None:
        lo, hi = curve.s_range
        s_values = np.linspace(lo, hi, 512)
    S = np.asarray(s_values, dtype=float).reshape(-1, 1)
    C = curve.position(S)
    T = curve.tangent_frame(S)
    N = _normal_complement(T)[..., : k + 1]
    r = np.asarray(radius(S[:, 0]) if callable(radius) else np.full(len(S), float(radius)), dtype=float)
    if np.any(r <= 0):
        raise GenerationError("tube radius must be positive", witness=S[np.argmin(r)])
    W = _sphere_directions(k, directions, seed)
    pts = C[:, None, :] + r[:, None, None] * np.einsum("sna,da->sdn", N, W)
    pts = pts.reshape(-1, n)
    if contains is not None:
        inside = np.asarray(contains(pts), dtype=bool)
        if not np.all(inside):
            raise GenerationError("tube leaves the admissible region", witness=pts[np.argmin(inside)])
    return TubeSample(pts, C, r, S[:, 0], k, {"directions": int(len(W))})


def segment_curve(a, b):
    """Unit-speed segment from ``a`` to ``b`` as a curve immersion."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    L = float(np.linalg.norm(b - a))
    d = (b - a) / L
    return CurveImmersion(lambda s: a + s * d, lambda s: np.broadcast_to(d, s.shape[:-1] + d.shape).copy(),
                          lambda s: np.zeros(s.shape[:-1] + d.shape), a.shape[0], s_range=(0.0, L),
                          complete=False, name="segment", curvature_bound=0.0)


def solid_cylinder_support(a, b, r, u):
    """Support function of the convex hull of the radius-``r`` tube around segment ``[a, b]``."""
    a, b, u = (np.asarray(v, dtype=float) for v in (a, b, u))
    d = (b - a) / np.linalg.norm(b - a)
    perp = u - np.outer(u @ d, d) if u.ndim == 2 else u - (u @ d) * d
    return np.maximum(u @ a, u @ b) + r * np.linalg.norm(perp, axis=-1)


def wedge_tube(curve, fraction=0.45, spacing=0.01, k=1, directions=64):
    """Tube around a wedge curve with radius a fixed fraction of the distance to the faces.

    On the segment ``l_k`` the radius is ``fraction * a_k`` and so halves from one segment to the next.
    """
    S = curve.samples(spacing)[:, 0]

    def radius(s):
        c = curve.position(s[:, None])
        return fraction * np.minimum(c[:, 0], c[:, 1])

    return generate_tube(curve, radius, k=k, s_values=S, directions=directions,
                         contains=lambda p: (p[:, 0] > 0) & (p[:, 1] > 0))
