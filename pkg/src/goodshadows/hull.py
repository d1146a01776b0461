"""Supporting hyperplanes of sampled submanifolds and the certificates built on them."""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import linprog

from . import sampling
from .errors import (CapabilityError, DomainError, GeneralPositionError, NoSupportError,
                     NumericalPrecisionError, PreconditionError)
from .immersions import pullback_height
from .shadows import _jsonable, good_shadow_c1, good_shadow_c2

CLUSTER_ANGLE = 1e-3
TRUNCATION_CAVEAT = ("finite sample sets: sequences that escape to infinity are represented "
                     "by truncations, and limits are read off the last levels")


# -- arrangements --------------------------------------------------------------------

@dataclass(frozen=True)
class HyperplaneArrangement:
    """Hyperplanes ``H_i = {y : <y - p0, e_i> = 0}`` with unit normals ``e_i``."""

    p0: np.ndarray
    normals: np.ndarray
    gram: np.ndarray
    gram_inverse: np.ndarray
    gram_factor: np.ndarray = None  # upper triangular R with gram = R^T R

    @property
    def s(self):
        return self.normals.shape[0]

    @property
    def n(self):
        return self.normals.shape[1]

    def heights(self, y):
        return (np.asarray(y, dtype=float) - self.p0) @ self.normals.T

    def to_dict(self):
        return {"p0": self.p0.tolist(), "normals": self.normals.tolist()}


def make_arrangement(p0, normals, unit_tol=1e-9, rank_tol=1e-10):
    p0 = np.asarray(p0, dtype=float)
    E = np.atleast_2d(np.asarray(normals, dtype=float))
    s, n = E.shape
    if n != p0.shape[0]:
        raise DomainError("normals and base point live in different dimensions")
    lengths = np.linalg.norm(E, axis=1)
    if np.any(np.abs(lengths - 1.0) > unit_tol):
        raise DomainError("hyperplane normals must be unit vectors")
    if s > n:
        raise GeneralPositionError(f"{s} normals in R^{n} cannot be independent", witness=list(range(s)))
    for k in range(1, s + 1):
        sv = np.linalg.svd(E[:k], compute_uv=False)
        if sv[-1] < rank_tol:
            raise GeneralPositionError("normals are linearly dependent", witness=list(range(k)))
    G = E @ E.T
    R = np.linalg.qr(E.T, mode="r")
    return HyperplaneArrangement(p0, E, G, np.linalg.inv(G), R)


def intersection_distance(arr, y):
    """Distance ``sqrt(v^T G^-1 v)`` from ``y`` to ``H_1 cap ... cap H_s``, ``v`` the heights.

    The quadratic form is evaluated as ``|R^-T v|`` with ``G = R^T R``, which
    keeps the error at the conditioning of the normals rather than its square.
    """
    v = arr.heights(y)
    R = arr.gram_factor
    if R is None:
        q = np.einsum("...i,ij,...j->...", v, arr.gram_inverse, v)
        return np.sqrt(np.maximum(q, 0.0))
    w = solve_triangular(R, np.moveaxis(np.atleast_1d(v), -1, 0), trans="T", lower=False)
    return np.linalg.norm(np.moveaxis(w, 0, -1), axis=-1)


def combined_height(arr, y):
    """Height along the normalized sum of the normals and its threshold scale ``n a C``."""
    total = arr.normals.sum(axis=0)
    a = float(np.linalg.norm(total))
    C = math.sqrt(float(np.max(np.abs(arr.gram_inverse))))
    return (np.asarray(y, dtype=float) - arr.p0) @ (total / a), arr.n * a * C


# -- normal cones --------------------------------------------------------------------

@dataclass
class SupportCertificate:
    point: np.ndarray
    normals: np.ndarray
    margins: np.ndarray
    rank: int
    tol: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return _jsonable({"point": self.point, "normals": self.normals, "margins": self.margins,
                          "rank": self.rank, "tol": self.tol, **self.meta})


def _lp(c, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    return res


SLICE_BOX = 1e6


def _slice_lp(cost, V, c, tol, batch=64):
    """Optimize over ``{V e >= -tol/2, <c, e> = 1}`` by constraint generation.

    Returns ``None`` when infeasible; points on the bounding box signal an
    unbounded slice.
    """
    n = V.shape[1]
    lens = np.linalg.norm(V, axis=1)
    work = set(np.argsort(lens)[:128].tolist())
    work.update(np.argmin(V, axis=0).tolist())
    work.update(np.argmax(V, axis=0).tolist())
    bounds = [(-SLICE_BOX, SLICE_BOX)] * n
    while True:
        idx = np.fromiter(work, dtype=int)
        r = _lp(cost, -V[idx], np.full(len(idx), 0.5 * tol), c[None, :], np.array([1.0]), bounds)
        if r.status == 2:
            return None
        if r.status != 0:
            raise NumericalPrecisionError(f"normal-cone LP failed: {r.message}")
        slack = V @ r.x + 0.5 * tol + 1e-10
        slack[idx] = 0.0
        bad = np.flatnonzero(slack < 0)
        if len(bad) == 0:
            return r.x
        work.update(bad[np.argsort(slack[bad])[:batch]].tolist())


def _cluster(units, angle=CLUSTER_ANGLE):
    reps = []
    for u in units:
        if all(math.acos(min(1.0, max(-1.0, float(u @ r)))) >= angle for r in reps):
            reps.append(u)
    return np.array(reps)


def _rank(normals, tol=1e-6):
    if len(normals) == 0:
        return 0
    sv = np.linalg.svd(normals, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


def supporting_normals(cloud, q, tol=1e-9, directions=256, seed=0):
    """Extreme rays of the inward normal cone ``{e : <y - q, e> >= -tol for all y}``.

    The cone is cut by the affine slice ``<c, e> = 1`` with ``c`` the unit
    mean direction from ``q`` to the cloud; the slice is a polytope whose
    vertices are the extreme rays.  Vertices are collected by maximizing
    linear functionals from a direction net over the slice (one LP each),
    normalized and clustered at ``CLUSTER_ANGLE``.
    """
    Y = np.asarray(cloud, dtype=float)
    q = np.asarray(q, dtype=float)
    V = Y - q
    lens = np.linalg.norm(V, axis=1)
    V = V[lens > 1e-14]
    n = q.shape[0]
    if len(V) == 0:
        raise DomainError("cloud has no points away from q")
    scale = float(np.max(np.linalg.norm(V, axis=1)))
    # membership: min |sum lam_j y_j - q|_1 over the simplex, with slack pairs
    N = len(Y)
    A_eq = np.block([[Y.T, -np.eye(n), np.eye(n)], [np.ones((1, N)), np.zeros((1, 2 * n))]])
    res = _lp(np.r_[np.zeros(N), np.ones(2 * n)], None, None, A_eq, np.r_[q, 1.0],
              bounds=[(0, None)] * (N + 2 * n))
    if res.status != 0 or res.fun > tol * max(1.0, scale):
        gap = res.fun if res.status == 0 else math.inf
        raise DomainError(f"point lies outside the hull (L1 residual {gap:.3g})")
    U = V / np.linalg.norm(V, axis=1, keepdims=True)
    c = U.mean(axis=0)
    if np.linalg.norm(c) < 1e-12:
        raise NoSupportError("point is interior (balanced cloud directions)", witness=q)
    c /= np.linalg.norm(c)
    feas = _slice_lp(np.zeros(n), V, c, tol)
    if feas is None:
        raise NoSupportError("point is interior: no supporting hyperplane", witness=q)
    # directions in the slice (orthogonal complement of c)
    P = np.eye(n) - np.outer(c, c)
    if n == 2:
        W = np.array([P[:, 0] if np.linalg.norm(P[:, 0]) > 1e-6 else P[:, 1]])
        W = np.vstack([W, -W])
    elif n == 3:
        basis = np.linalg.svd(P)[0][:, :2]
        th = 2.0 * math.pi * np.arange(directions) / directions
        W = np.cos(th)[:, None] * basis[:, 0] + np.sin(th)[:, None] * basis[:, 1]
    else:
        W = sampling.unit_vectors(seed, directions, n, stream=71) @ P
        W = np.vstack([W, P, -P])
    found = []
    unbounded = False
    for w in W:
        if np.linalg.norm(w) < 1e-12:
            continue
        x = _slice_lp(-w, V, c, tol)
        if x is None:
            continue
        if np.max(np.abs(x)) > 0.5 * SLICE_BOX:
            unbounded = True
            continue
        found.append(x / np.linalg.norm(x))
    if unbounded:
        # flat cloud: the normal cone contains a line orthogonal to the cloud's span
        _, sv, vt = np.linalg.svd(V, full_matrices=True)
        null = vt[int(np.sum(sv > 1e-10 * sv[0])):]
        for v in null:
            found.extend([v, -v])
    normals = _cluster(found)
    margins = np.min(V @ normals.T, axis=0) if len(normals) else np.array([])
    return SupportCertificate(q, normals, margins, _rank(normals), float(tol),
                              {"cloud_size": int(len(Y)), "directions": int(len(W))})


# -- Grassmannian --------------------------------------------------------------------

@dataclass(frozen=True)
class GrassmannElement:
    """Subspace of ``R^n`` held by an orthonormal basis (columns)."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if B.shape[0] < B.shape[1]:
            B = B.T
        Q, R = np.linalg.qr(B)
        if np.min(np.abs(np.diag(R))) < 1e-12:
            raise DomainError("basis is rank deficient")
        object.__setattr__(self, "basis", Q)

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def ambient(self):
        return self.basis.shape[0]

    def projector(self):
        return self.basis @ self.basis.T

    def contains_angle(self, v):
        """Angle between the vector ``v`` and this subspace."""
        v = np.asarray(v, dtype=float) / np.linalg.norm(v)
        inside = np.linalg.norm(self.basis.T @ v)
        outside = np.linalg.norm(v - self.basis @ (self.basis.T @ v))
        return math.atan2(outside, inside)


def grassmann_distance(W1, W2):
    """Largest principal angle between equal-dimensional subspaces."""
    if W1.dim != W2.dim or W1.ambient != W2.ambient:
        raise DomainError("subspaces of different dimension")
    A, B = W1.basis, W2.basis
    sin = np.linalg.norm(B - A @ (A.T @ B), 2)
    cos = np.linalg.svd(A.T @ B, compute_uv=False)[-1]
    return float(math.atan2(sin, cos))


def normal_space(imm, p):
    return GrassmannElement(imm.normal_frame(np.asarray(p, dtype=float)))


@dataclass
class ModulusReport:
    edges: np.ndarray
    modulus: np.ndarray
    counts: np.ndarray
    tends_to_zero: bool

    def to_dict(self):
        return _jsonable({"edges": self.edges, "modulus": self.modulus, "counts": self.counts,
                          "tends_to_zero": self.tends_to_zero})


def gauss_map_modulus(imm, pairs, bin_width):
    """Binned cumulative supremum of Gauss-map distance against intrinsic distance."""
    if not bin_width > 0:
        raise DomainError("bin width must be positive")
    P = np.asarray([a for a, _ in pairs], dtype=float)
    Q = np.asarray([b for _, b in pairs], dtype=float)
    t = np.asarray(imm.manifold.distance(P, Q), dtype=float)
    NP, NQ = imm.normal_frame(P), imm.normal_frame(Q)
    g = np.array([grassmann_distance(GrassmannElement(a), GrassmannElement(b)) for a, b in zip(NP, NQ)])
    k = np.floor(t / bin_width).astype(int)
    nb = int(k.max()) + 1 if len(k) else 0
    sup = np.zeros(nb)
    counts = np.zeros(nb, dtype=int)
    np.maximum.at(sup, k, g)
    np.add.at(counts, k, 1)
    mod = np.maximum.accumulate(sup)
    edges = bin_width * np.arange(1, nb + 1)
    first = mod[np.flatnonzero(counts)[0]] if np.any(counts) else 0.0
    tends = bool(first <= 1e-9 or first <= 0.1 * mod[-1])
    return ModulusReport(edges, mod, counts, tends)


# -- theorem-level certificates ------------------------------------------------------

def _check_support(imm, X, arr, tol):
    H = arr.heights(imm.position(X))
    worst = np.unravel_index(int(np.argmin(H)), H.shape) if H.size else None
    if H.size and H[worst] < -tol:
        raise PreconditionError(f"arrangement does not support the sample: height {H[worst]:.3g}",
                                witness=X[worst[0]])
    return float(H.min()) if H.size else 0.0


def _closest(imm, X, arr):
    Y = imm.position(X)
    d = intersection_distance(arr, Y)
    i = int(np.argmin(d))
    return i, float(d[i]), Y


@dataclass
class CodimensionReport:
    verdict: str
    rank: int
    codim: int
    levels: list
    limit_normal_space: Optional[np.ndarray]
    declared_complete: bool
    caveat: str = TRUNCATION_CAVEAT

    def to_dict(self):
        return _jsonable({"verdict": self.verdict, "rank": self.rank, "codim": self.codim,
                          "declared_complete": self.declared_complete, "levels": self.levels,
                          "limit_normal_space": self.limit_normal_space, "caveat": self.caveat})

    def angles(self, i):
        return [lv["angles"][i] for lv in self.levels]


def codimension_certificate(imm, levels, arr, tol=1e-9, angle_tol=1e-6, declared_complete=None, eps0=None):
    """Check ``s <= n - m`` through shadows of the pulled-back heights.

    For each sample level ``k``: ``p_k`` minimizes the distance to
    ``H_1 cap ... cap H_s`` (the combined-height threshold
    ``delta_k = eps_k/(n a C)`` is recorded with ``eps_k`` halving); C^1
    shadows ``q_k^(i)`` of ``f_i o h`` near ``p_k`` give the angles
    ``arcsin |grad(f_i o h)(q)|`` between ``e_i`` and the normal space.
    PASS needs the last-level angles below ``angle_tol``, angles
    nonincreasing over ``k``, certified shadows and ``rank <= n - m``.
    """
    complete = imm.complete if declared_complete is None else bool(declared_complete)
    codim = imm.n - imm.m
    rank = _rank(arr.normals)
    heights = [pullback_height(imm, arr.p0, e, inf_estimate=0.0) for e in arr.normals]
    out = []
    prev_dist = None
    for k, X in enumerate(levels, start=1):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        min_height = _check_support(imm, X, arr, tol)
        i, dist, Y = _closest(imm, X, arr)
        p = X[i]
        F, scale = combined_height(arr, Y[i])
        eps_k = (eps0 if eps0 is not None else 1.0) * 0.5 ** (k - 1)
        angles, statuses, shadows, gdist = [], [], [], []
        Np = normal_space(imm, p)
        for f in heights:
            row = good_shadow_c1(imm.manifold, f, [p]).rows[0]
            qk = row["y"]
            angles.append(float(math.asin(min(1.0, row["grad_norm"]))))
            statuses.append(row["status"])
            shadows.append(qk)
            gdist.append(grassmann_distance(Np, normal_space(imm, qk)))
        out.append({
            "k": k, "samples": int(len(X)), "p": p, "h_p": Y[i], "distance": dist,
            "distance_decreased": None if prev_dist is None else bool(dist <= prev_dist),
            "combined_height": float(F), "delta_k": eps_k / scale, "eps_k": eps_k,
            "below_threshold": bool(F < eps_k / scale), "min_height": min_height,
            "angles": angles, "statuses": statuses, "shadows": shadows, "gauss_shift": gdist,
            "normal_space": Np.basis,
        })
        prev_dist = dist
    last = out[-1]
    certified = all(s != "budget" for s in last["statuses"])
    small = all(a <= angle_tol for a in last["angles"])
    monotone = all(
        out[j + 1]["angles"][i] <= out[j]["angles"][i] + 1e-12 for i in range(arr.s) for j in range(len(out) - 1)
    )
    ok = certified and small and monotone and rank <= codim
    verdict = "PASS" if ok else ("FAIL" if complete else "FAIL-hypothesis")
    return CodimensionReport(verdict, rank, codim, out, last["normal_space"], complete)


@dataclass
class SignReport:
    values: list
    verdict: str
    mean_curvature: np.ndarray

    def to_dict(self):
        return _jsonable({"values": self.values, "verdict": self.verdict, "mean_curvature": self.mean_curvature})


def mean_curvature_sign_check(imm, q, arr, point_tol=1e-8, sign_tol=1e-8):
    """``<H(q), e_i>`` at a touching point ``h(q) in H_1 cap ... cap H_s``."""
    q = np.asarray(q, dtype=float)
    d = float(intersection_distance(arr, imm.position(q)))
    if d > point_tol:
        raise PreconditionError(f"h(q) is {d:.3g} away from the hyperplane intersection", witness=q)
    H = imm.mean_curvature(q)
    vals = [float(H @ e) for e in arr.normals]
    return SignReport(vals, "pass" if all(v >= -sign_tol for v in vals) else "fail", H)


def gauss_ricci_lower_bound(m, sff_bound):
    """Gauss-equation lower bound ``Ric >= -(sqrt(m) + 1) |sigma|^2``."""
    return -(math.sqrt(m) + 1.0) * sff_bound**2


@dataclass
class Thm16Report:
    verdict: str
    rows: list
    tails: list
    certificates: list

    def to_dict(self):
        return _jsonable({"verdict": self.verdict, "rows": self.rows, "tails": self.tails,
                          "certificates": self.certificates})


def thm16_sequence(imm, levels, arr, sf, K=None, seed=0, tol=1e-8, **c2_options):
    """Liminf estimates of ``<H(p_k), e_i>`` along points approaching ``H_1 cap ... cap H_s``.

    C^2 shadows of each ``f_i o h`` (with ``K`` defaulting to the declared
    bound on ``|sigma|``) give ``<H(q), e_i> >= bound/m``; the value at
    ``p_k`` is accepted when its running tail minimum stays above
    ``-(|bound|/m + |H(p_k) - H(q_k)| + tol)``.
    """
    if not imm.bounded_sff or imm.sff_bound is None:
        raise CapabilityError(f"{imm.name}: needs a declared bound on the second fundamental form")
    K = float(imm.sff_bound if K is None else K)
    m = imm.m
    pts = []
    for X in levels:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _check_support(imm, X, arr, 1e-9)
        i, _, _ = _closest(imm, X, arr)
        pts.append(X[i])
    pts = np.asarray(pts)
    rows, certs = [], []
    for j, e in enumerate(arr.normals):
        f = pullback_height(imm, arr.p0, e, inf_estimate=0.0)
        cert = good_shadow_c2(imm.manifold, f, pts, sf, K, seed=seed, **c2_options)
        certs.append(cert.to_dict())
        for k, (p, row) in enumerate(zip(pts, cert.rows), start=1):
            Hp, Hq = imm.mean_curvature(p), imm.mean_curvature(row["y"])
            rows.append({
                "i": j, "k": k, "p": p, "q": row["y"], "distance": float(intersection_distance(arr, imm.position(p))),
                "H_p_e": float(Hp @ e), "H_q_e": float(Hq @ e), "bound_over_m": row["laplacian_bound"] / m,
                "slack": abs(row["laplacian_bound"]) / m + float(np.linalg.norm(Hp - Hq)) + tol,
                "status": row["status"],
            })
    tails, ok = [], True
    for j in range(arr.s):
        rs = [r for r in rows if r["i"] == j]
        vals = np.array([r["H_p_e"] for r in rs])
        mins = np.minimum.accumulate(vals[::-1])[::-1]
        slack = np.array([r["slack"] for r in rs])
        good = bool(np.all(mins >= -slack)) and all(r["status"] != "budget" for r in rs)
        ok = ok and good
        tails.append({"i": j, "tail_minima": mins, "slack": slack, "pass": good})
    return Thm16Report("pass" if ok else "fail", rows, tails, certs)


# -- CSV ingestion -------------------------------------------------------------------

def read_cloud_csv(path):
    """Point cloud with optional frames: columns ``x0..``, ``t<a>_<i>``, ``n<b>_<i>``, ``s<a><b>_<i>``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if data.size == 0:
        raise DomainError(f"{path}: no rows")
    cols = {name.strip(): j for j, name in enumerate(header)}
    xs = sorted((c for c in cols if c.startswith("x") and c[1:].isdigit()), key=lambda c: int(c[1:]))
    if not xs:
        raise DomainError(f"{path}: no coordinate columns x0, x1, ...")
    out = {"points": data[:, [cols[c] for c in xs]]}
    n = len(xs)
    for prefix, key in (("t", "tangent"), ("n", "normal")):
        idx = sorted({c.split("_")[0][1:] for c in cols if c.startswith(prefix) and "_" in c})
        if idx:
            out[key] = np.stack([data[:, [cols[f"{prefix}{a}_{i}"] for i in range(n)]] for a in idx], axis=-1)
    return out
