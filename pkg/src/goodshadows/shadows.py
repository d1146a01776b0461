"""Shadow finders: points near a minimizing sequence with small gradient and,
for C^2 fields, asymptotically nonnegative Laplacian.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .errors import DomainError, InconsistencyError, PreconditionError
from .fields import gradient_lipschitz_check
from .flows import (NORMALIZED, RAW, STAGNATION_TOL, StopConditions, exit_time, flow_batch,
                    integrate_flow)
from . import sampling
from .volumes import BallSpec, ball_volume_mc, sample_ball, space_form_ball_volume

BOUND_TOL = 1e-8


# -- Ekeland selection on a finite metric space ----------------------------------

@dataclass
class MetricNet:
    """Finite metric space with function values.

    ``row(i)`` returns the distances from point ``i`` to every point; rows
    are computed on demand so nets of 10^4 points never need the full matrix.
    """

    values: np.ndarray
    row: Callable
    points: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_points(cls, M, points, values):
        P = np.asarray(points, dtype=float)
        return cls(np.asarray(values, dtype=float), lambda i: np.asarray(M.distance(P[i], P), dtype=float), P)

    @classmethod
    def from_graph(cls, adjacency, values):
        """Shortest-path metric of a weighted graph (scipy sparse or dense adjacency)."""
        return cls(np.asarray(values, dtype=float),
                   lambda i: dijkstra(adjacency, directed=False, indices=int(i)))


def ekeland_point(net, x, eps, delta, inf_estimate=None, max_iter=None):
    """Index ``y`` of an Ekeland point for start index ``x``.

    Iterates ``y <- argmin f`` over ``S(y) = {z : f(z) + (eps/delta) d(y, z) <= f(y)}``
    (lowest index on ties) until ``S(y) = {y}``.  On exit
    ``f(y) < f(z) + (eps/delta) d(y, z)`` holds for every other net point
    exactly as evaluated in floating point.
    """
    F = net.values
    inf_estimate = float(np.min(F)) if inf_estimate is None else float(inf_estimate)
    if not (eps > 0 and delta > 0):
        raise DomainError("eps and delta must be positive")
    if F[x] - inf_estimate > eps + 1e-12:
        raise PreconditionError(f"f(x) - inf = {F[x] - inf_estimate:.3g} exceeds eps = {eps:.3g}")
    lam = eps / delta
    y = int(x)
    for _ in range(max_iter or len(F) + 1):
        d = net.row(y)
        S = F + lam * d <= F[y]
        S[y] = True
        if np.count_nonzero(S) == 1:
            return y
        masked = np.where(S, F, np.inf)
        z = int(np.argmin(masked))
        if z == y:
            # a distance-zero duplicate with equal value; nothing strictly better
            S[y] = False
            others = np.flatnonzero(S)
            if np.all(d[others] == 0) and np.all(F[others] == F[y]):
                return y
            z = int(others[np.argmin(F[others])])
        y = z
    raise InconsistencyError("Ekeland iteration did not terminate")


def ekeland_violations(net, x, y, eps, delta):
    """Exhaustive check of the three Ekeland conditions; returns a dict of failures."""
    F = net.values
    lam = eps / delta
    dx = net.row(x)
    dy = net.row(y)
    others = np.arange(len(F)) != y
    bad_iii = np.flatnonzero(others & ~(F[y] < F + lam * dy))
    out = {}
    if not dx[y] <= delta:
        out["i"] = float(dx[y])
    if not F[y] <= F[x]:
        out["ii"] = float(F[y] - F[x])
    if bad_iii.size:
        out["iii"] = bad_iii.tolist()
    return out


# -- certificates -------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


@dataclass
class ShadowCertificate:
    """Rows ``(x_n, y_n)`` with the bounds each must satisfy.

    Row keys: ``n, x, y, eps, radius_bound, dist, f_x, f_y, grad_norm,
    grad_bound, status`` plus ``laplacian, laplacian_bound`` for C^2 kinds.
    """

    kind: str
    rows: list
    meta: dict = field(default_factory=dict)

    def row_ok(self, row, tol=BOUND_TOL):
        if row["status"] == "budget":
            return False
        ok = row["dist"] <= row["radius_bound"] + tol
        if self.kind.startswith("c1"):
            ok = ok and row["f_y"] <= row["f_x"] + tol
        if row.get("grad_bound") is not None:
            ok = ok and row["grad_norm"] <= row["grad_bound"] + tol
        if row.get("laplacian_bound") is not None:
            ok = ok and row["laplacian"] >= row["laplacian_bound"] - tol
        return bool(ok)

    @property
    def ok(self):
        return all(self.row_ok(r) for r in self.rows)

    @property
    def verdict(self):
        if any(r["status"] == "budget" for r in self.rows):
            return "budget"
        return "pass" if self.ok else "fail"

    def to_dict(self):
        return _jsonable({"kind": self.kind, "verdict": self.verdict, "meta": self.meta, "rows": self.rows})

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


@dataclass
class VerificationReport:
    agree: bool
    failures: list

    def to_dict(self):
        return {"agree": self.agree, "failures": self.failures}


def verify_certificate(cert, M, f, tol=BOUND_TOL, rel=1e-9):
    """Recompute each row from ``(M, f)`` and re-check its bounds.

    Distances, values, gradient norms, Laplacians and the bound formulas are
    all recomputed; recorded numbers must agree to ``rel`` (relative) and
    the recomputed values must satisfy the recomputed bounds.
    """
    inf = f.inf_estimate
    failures = []
    K = cert.meta.get("K")
    sf = cert.meta.get("space_form")

    def close(a, b):
        return abs(a - b) <= rel * max(1.0, abs(a), abs(b)) + 1e-15

    for row in cert.rows:
        x = np.asarray(row["x"], dtype=float)
        y = np.asarray(row["y"], dtype=float)
        fx, fy = float(f.value(x)), float(f.value(y))
        d = float(M.distance(x, y))
        g = float(f.grad_norm(y))
        problems = []
        if cert.kind in ("c1-ekeland", "c1-flow"):
            eps = max(fx - inf, 0.0)
            radius = math.sqrt(eps)
            if not close(radius, row["radius_bound"]):
                problems.append("radius")
            if not g <= radius + tol:
                problems.append("gradient")
        elif cert.kind == "c2":
            delta = math.sqrt(max(fx - inf, 0.0))
            radius = math.sqrt(delta)
            if not close(radius, row["radius_bound"]):
                problems.append("radius")
            if delta > 0:
                ratio = space_form_ball_volume(_sf(sf), radius**2) / space_form_ball_volume(_sf(sf), radius)
                lb = 16.0 * (1.0 + K) * delta * math.log(ratio)
                if not close(lb, row["laplacian_bound"]):
                    problems.append("laplacian_bound")
            gb = (1.0 + K) * math.sqrt(max(fy - inf, 0.0))
            if not g <= gb + tol:
                problems.append("gradient")
        else:
            radius = row["radius_bound"]
        if "laplacian" in row:
            lap = float(f.laplacian(y))
            if not close(lap, row["laplacian"]):
                problems.append("laplacian")
            if row.get("laplacian_bound") is not None and not lap >= row["laplacian_bound"] - tol:
                problems.append("laplacian-bound")
        for key, val in (("f_x", fx), ("f_y", fy), ("dist", d), ("grad_norm", g)):
            if not close(val, row[key]):
                problems.append(key)
        if cert.kind.startswith("c1") and not fy <= fx + tol:
            problems.append("value")
        if not d <= radius + tol:
            problems.append("distance")
        if row["status"] == "budget":
            problems.append("budget")
        if problems:
            failures.append({"n": row["n"], "problems": problems})
    return VerificationReport(not failures, failures)


def _sf(d):
    from .volumes import SpaceForm

    return SpaceForm(float(d["curvature"]), int(d["dim"]))


def _base_row(n, M, f, x, y, radius, eps):
    return {
        "n": n,
        "x": np.asarray(x, dtype=float),
        "y": np.asarray(y, dtype=float),
        "eps": float(eps),
        "radius_bound": float(radius),
        "dist": float(M.distance(x, y)),
        "f_x": float(f.value(x)),
        "f_y": float(f.value(y)),
        "grad_norm": float(f.grad_norm(y)),
    }


def _meta(M, f, **extra):
    d = {"manifold": M.describe(), "field": f.describe(), "bound_tol": BOUND_TOL}
    d.update(extra)
    return d


# -- C^1 shadows --------------------------------------------------------------------

def _ball_net(M, center, radius, spacing):
    """Grid of spacing ``spacing`` in normal coordinates, mapped by exp into ``B(center, radius)``."""
    m = M.dim
    k = int(math.ceil(radius / spacing))
    ax = np.arange(-k, k + 1) * spacing
    G = np.stack(np.meshgrid(*([ax] * m), indexing="ij"), axis=-1).reshape(-1, m)
    G = G[np.linalg.norm(G, axis=1) <= radius * (1 - 1e-12)]
    B = M.tangent_basis(center)
    P = M.exp_map(center, G @ B.T)
    keep = np.asarray(M.contains(P), dtype=bool) & (np.asarray(M.distance(center, P)) <= radius)
    return P[keep]


def _polish(M, f, x, y, lam, target, max_iter=2000):
    """Sufficient-decrease descent from ``y`` until ``|grad f| <= target``.

    Each accepted step ``z`` satisfies ``f(z) + lam d(y, z) <= f(y)``, so the
    chain stays inside the Ekeland set of every earlier point and hence
    within ``eps/lam`` of ``x``.
    """
    fy = float(f.value(y))
    for _ in range(max_iter):
        g = f.gradient(y)
        gn = float(f.manifold.norm(y, g))
        if gn <= target:
            return y, True
        s = max(target, gn)
        u = -g / gn
        while s > 1e-12 * target:
            z = M.exp_map(y, s * u)
            if bool(M.contains(z)):
                fz = float(f.value(z))
                if fz + lam * float(M.distance(y, z)) <= fy:
                    break
            s *= 0.5
        else:
            return y, False
        y, fy = z, fz
    return y, False


def good_shadow_c1(M, f, xs, spacing_divisions=8, max_refinements=6, polish=True, shortcut=True):
    """Ekeland-based C^1 shadows: ``d(x_n, y_n) <= delta_n``, ``|grad f(y_n)| <= delta_n``.

    ``delta_n = sqrt(eps_n)`` with ``eps_n = f(x_n) - inf``.  Ekeland
    selection runs on a net of ``B(x_n, delta_n)`` whose spacing is halved
    around the current point until the gradient bound holds at the selected
    net point (at most ``max_refinements`` times).  If the net alone does
    not certify, a sufficient-decrease chain that stays in the Ekeland set
    finishes the job; rows that still fail carry status ``budget``.
    """
    inf = f.inf_estimate
    if not math.isfinite(inf):
        raise PreconditionError(f"{f.name}: declared infimum required")
    rows = []
    for n, x in enumerate(np.atleast_2d(np.asarray(xs, dtype=float)), start=1):
        M.check_point(x)
        eps = float(f.value(x)) - inf
        if eps < -1e-12:
            raise PreconditionError(f"f(x_{n}) below the declared infimum", witness=x)
        eps = max(eps, 0.0)
        delta = math.sqrt(eps)
        if eps == 0.0 or (shortcut and float(f.grad_norm(x)) <= delta):
            row = _base_row(n, M, f, x, x, delta, eps)
            row.update(grad_bound=delta, status="direct", refinements=0)
            rows.append(row)
            continue
        h = delta / spacing_divisions
        P = np.concatenate([x[None, :], _ball_net(M, x, delta, h)], axis=0)
        status = "budget"
        refinements = 0
        for refinements in range(max_refinements + 1):
            net = MetricNet.from_points(M, P, f.value(P))
            yi = ekeland_point(net, 0, eps, delta, inf_estimate=min(inf, float(np.min(net.values))))
            y = P[yi]
            if float(f.grad_norm(y)) <= delta:
                status = "net"
                break
            if refinements == max_refinements:
                break
            h *= 0.5
            local = _ball_net(M, y, 4.0 * h, h)
            local = local[np.asarray(M.distance(x, local)) <= delta]
            P = np.concatenate([P, local], axis=0)
        if status == "budget" and polish:
            y, done = _polish(M, f, x, y, eps / delta, delta)
            if done:
                status = "polished"
        row = _base_row(n, M, f, x, y, delta, eps)
        row.update(grad_bound=delta, status=status, refinements=refinements)
        rows.append(row)
    return ShadowCertificate("c1-ekeland", rows, _meta(M, f))


def flow_shadow_c1(M, f, xs, stagnation_tol=STAGNATION_TOL, resolution=64):
    """Normalized-flow C^1 shadows with ``r_n = sqrt(f(x_n) - inf)``.

    The flow ``-grad f/|grad f|^2`` lowers ``f`` at unit rate, so it either
    leaves ``B(x_n, r_n)`` before time ``eps_n`` or approaches a critical
    point.  The returned point minimizes ``|grad f|`` over the recorded
    trajectory up to exit.
    """
    inf = f.inf_estimate
    if not math.isfinite(inf):
        raise PreconditionError(f"{f.name}: declared infimum required")
    rows = []
    for n, x in enumerate(np.atleast_2d(np.asarray(xs, dtype=float)), start=1):
        M.check_point(x)
        eps = max(float(f.value(x)) - inf, 0.0)
        r = math.sqrt(eps)
        if eps == 0.0 or float(f.grad_norm(x)) <= stagnation_tol:
            row = _base_row(n, M, f, x, x, r, eps)
            row.update(grad_bound=r, status="direct", termination="none")
            rows.append(row)
            continue
        t_max = eps * (1.0 + 1e-9) + 1e-300
        stop = StopConditions(t_max=t_max, ball=(x, r), stagnation_tol=stagnation_tol)
        tr = integrate_flow(M, f, x, NORMALIZED, stop, max_step=t_max / resolution)
        inside = np.asarray(M.distance(x, tr.points)) <= r
        inside[0] = True
        gn = np.where(inside, tr.grad_norms, np.inf)
        i = int(np.argmin(gn))
        y = tr.points[i]
        if tr.termination == "stagnation" and gn[i] > r + BOUND_TOL:
            raise InconsistencyError("stagnated with gradient above the radius; integrator failure")
        row = _base_row(n, M, f, x, y, r, eps)
        status = "ok" if row["grad_norm"] <= r + BOUND_TOL else "budget"
        row.update(grad_bound=r, status=status, termination=tr.termination, time=float(tr.times[i]))
        rows.append(row)
    return ShadowCertificate("c1-flow", rows, _meta(M, f, stagnation_tol=stagnation_tol))


# -- C^2 shadows --------------------------------------------------------------------

def _tube_max_laplacian(M, f, center, radius, tau, n_points, n_times, seed, method="Radau"):
    """Max of ``lap f`` over product samples of ``B(center, radius) x [0, tau]`` under the raw flow."""
    P = sample_ball(M, center, radius, n_points, seed, stream=51)
    ts = np.sort(sampling.uniform(seed, n_times, 1, stream=52)[:, 0] * tau)
    pos, _ = flow_batch(M, f, P, tau, t_eval=np.concatenate([[0.0], ts]), method=method)
    Q = pos.reshape(-1, pos.shape[-1])
    lap = np.asarray(f.laplacian(Q), dtype=float)
    i = int(np.argmax(lap))
    return Q[i], float(lap[i]), float(np.mean(-lap)), float(np.std(-lap, ddof=1) / math.sqrt(len(lap))), len(lap)


def _ball_max_laplacian(M, f, center, radius, n, seed):
    P = sample_ball(M, center, radius, n, seed, stream=53)
    P = np.concatenate([np.asarray(center, dtype=float)[None, :], P], axis=0)
    lap = np.asarray(f.laplacian(P), dtype=float)
    i = int(np.argmax(lap))
    return P[i], float(lap[i]), len(P)


def _tube_size(r, m, base, cap):
    return int(min(cap, max(base, base * r ** (-m) / 16.0)))


def good_shadow_c2(M, f, ps, sf, K, boundary_samples=48, tube_points=256, tube_times=32, tube_cap=2048,
                   seed=0, t_max=None, method="Radau"):
    """C^2 shadows with ``delta_n = sqrt(f(p_n) - inf)``, ``r_n = sqrt(delta_n)``.

    Case ``a`` (no sampled orbit from ``B(p_n, r_n^2)`` reaches
    ``dB(p_n, r_n)``): the best sampled ``lap f`` in ``B(p_n, r_n)``, which
    must be nonnegative (else status ``budget``).  Case ``b``: the largest
    ``lap f`` over the flow tube ``B(p_n, r_n^2) x [0, tau_n]`` with
    ``tau_n`` the sampled minimal transit time; every row records the bound
    ``16 (1+K) delta_n log(v^c(r_n^2) / v^c(r_n))``.
    The gradient is re-checked through a C^1 shadow of ``q_n`` and the
    gradient Lipschitz inequality: ``|grad f(q)| <= (1+K) sqrt(f(q) - inf)``.
    """
    inf = f.inf_estimate
    if not math.isfinite(inf):
        raise PreconditionError(f"{f.name}: declared infimum required")
    if not f.has_laplacian:
        from .errors import CapabilityError

        raise CapabilityError(f"{f.name}: C^2 shadows need a Laplacian")
    K = float(K)
    rows = []
    m = M.dim
    for n, p in enumerate(np.atleast_2d(np.asarray(ps, dtype=float)), start=1):
        M.check_point(p)
        eps = max(float(f.value(p)) - inf, 0.0)
        delta = math.sqrt(eps)
        r = math.sqrt(delta)
        sub_seed = (int(seed) * 1_000_003 + n) & 0xFFFFFFFF
        if delta == 0.0:
            q, case, tau, lb, info = p, "direct", None, 0.0, {}
        else:
            ratio = space_form_ball_volume(sf, r * r) / space_form_ball_volume(sf, r)
            lb = 16.0 * (1.0 + K) * delta * math.log(ratio)
            budget = t_max if t_max is not None else 1e3 / delta**2
            et = exit_time(M, f, p, r * r, r, boundary_samples, sub_seed, t_max=budget, method=method)
            npts = _tube_size(r, m, tube_points, tube_cap)
            if et.case == "a":
                q, lap_q, count = _ball_max_laplacian(M, f, p, r, npts * tube_times // 4, sub_seed)
                case, tau = "a", None
                info = {"samples": count, "escaped": 0}
            else:
                tau = et.tau
                q, lap_q, mean_neg, se, count = _tube_max_laplacian(M, f, p, r * r, tau, npts, tube_times, sub_seed, method)
                case = "b"
                info = {"samples": count, "escaped": et.escaped, "tube_mean_neg_laplacian": mean_neg,
                        "tube_stderr": se,
                        "jensen_rhs": math.log(1.0 / ratio) / tau}
        row = _base_row(n, M, f, p, q, r, eps)
        lap = float(f.laplacian(q))
        fq = max(row["f_y"] - inf, 0.0)
        grad_bound = (1.0 + K) * math.sqrt(fq)
        shadow = good_shadow_c1(M, f, [q]).rows[0]
        lip = gradient_lipschitz_check(f, M, K, [(q, shadow["y"])])
        row.update(
            delta=delta,
            laplacian=lap,
            laplacian_bound=lb,
            case=case,
            tau=tau,
            grad_bound=grad_bound,
            c1_shadow=shadow["y"],
            c1_shadow_grad=shadow["grad_norm"],
            lipschitz=lip.verdict,
            **info,
        )
        if tau is not None:
            tau_lower = (1.0 - r) ** 2 / (4.0 * delta * (1.0 + K))
            row.update(tau_lower=tau_lower, tau_check=bool(tau_lower <= tau))
        if case == "a" and lap < 0:
            row["status"] = "budget"
        else:
            row["status"] = "ok"
        rows.append(row)
    meta = _meta(M, f, K=K, space_form={"curvature": sf.curvature, "dim": sf.dim}, seed=int(seed),
                 stagnation_tol=STAGNATION_TOL)
    return ShadowCertificate("c2", rows, meta)


def bound_magnitudes(cert):
    return [abs(r["laplacian_bound"]) for r in cert.rows]


# -- oscillation variant ------------------------------------------------------------

def oscillation(M, f, center, delta, samples, seed):
    P = sample_ball(M, center, delta, samples, seed, stream=61)
    v = np.concatenate([[float(f.value(center))], np.asarray(f.value(P), dtype=float)])
    return float(np.max(v) - np.min(v))


def doubling_constant(sf, delta, kappa, grid=64):
    """``max_{0 < r <= delta} v^c(r) / v^c(kappa r)`` on a grid including ``delta``."""
    rs = np.linspace(delta / grid, delta, grid)
    return max(space_form_ball_volume(sf, r) / space_form_ball_volume(sf, kappa * r) for r in rs)


def oscillation_shadow(M, f, ps, delta, sf, kappa=0.5, osc_samples=4096, boundary_samples=48,
                       tube_points=256, tube_times=32, seed=0, t_max=1e8, method="Radau"):
    """Shadows from the oscillation of ``f`` on ``B(p_n, delta)``.

    ``r_n`` is the fourth root of the sampled oscillation (must be below
    ``delta``).  The bound is ``log(1/C)/tau_n`` in the escaping case, with
    ``C`` bounding ``v^c(r)/v^c(kappa r)`` for ``r <= delta``; zero otherwise.
    """
    if not 0 < kappa < 1:
        raise DomainError("kappa must lie in (0, 1)")
    C = doubling_constant(sf, delta, kappa)
    rows = []
    for n, p in enumerate(np.atleast_2d(np.asarray(ps, dtype=float)), start=1):
        M.check_point(p)
        sub_seed = (int(seed) * 1_000_003 + n) & 0xFFFFFFFF
        osc = oscillation(M, f, p, delta, osc_samples, sub_seed)
        r = osc**0.25
        if osc == 0.0:
            row = _base_row(n, M, f, p, p, 0.0, 0.0)
            row.update(oscillation=0.0, laplacian=float(f.laplacian(p)), laplacian_bound=None, case="constant",
                       tau=None, status="direct")
            rows.append(row)
            continue
        if not r < delta:
            raise PreconditionError(f"r_{n} = {r:.4g} is not below delta = {delta}", witness=p)
        et = exit_time(M, f, p, kappa * r, r, boundary_samples, sub_seed, t_max=t_max, method=method)
        if et.case == "a":
            q, lap_q, _ = _ball_max_laplacian(M, f, p, r, tube_points * tube_times // 4, sub_seed)
            lb, tau, case = 0.0, None, "a"
        else:
            tau = et.tau
            q, lap_q, *_ = _tube_max_laplacian(M, f, p, kappa * r, tau, tube_points, tube_times, sub_seed, method)
            lb, case = math.log(1.0 / C) / tau, "b"
        row = _base_row(n, M, f, p, q, r, osc)
        row.update(oscillation=osc, laplacian=float(f.laplacian(q)), laplacian_bound=lb, case=case, tau=tau,
                   status="budget" if (case == "a" and lap_q < 0) else "ok")
        rows.append(row)
    meta = _meta(M, f, delta=delta, kappa=kappa, C=C, space_form={"curvature": sf.curvature, "dim": sf.dim},
                 seed=int(seed))
    return ShadowCertificate("oscillation", rows, meta)


# -- volume doubling -----------------------------------------------------------------

@dataclass
class DoublingReport:
    a: float
    b: float
    rows: list
    verdict: str

    def to_dict(self):
        return _jsonable({"a": self.a, "b": self.b, "rows": self.rows, "verdict": self.verdict})


def doubling_check(M, a, b, trials, samples, seed):
    """``Vol B(p, r) <= b Vol B(p, r/2)`` for trial ``(p, r)`` with ``r < a``, Monte Carlo error bars."""
    rows = []
    for k, (p, r) in enumerate(trials):
        if not 0 < r < a:
            raise DomainError(f"trial radius {r} not in (0, {a})")
        big, se_big = ball_volume_mc(M, BallSpec(p, r), samples, (int(seed) + 2 * k) & 0xFFFFFFFF)
        small, se_small = ball_volume_mc(M, BallSpec(p, r / 2.0), samples, (int(seed) + 2 * k + 1) & 0xFFFFFFFF)
        ratio = big / small
        se = ratio * math.hypot(se_big / big, se_small / small)
        rows.append({"p": np.asarray(p, dtype=float), "r": float(r), "ratio": ratio, "stderr": se,
                     "verdict": "pass" if ratio <= b + 3.0 * se else "fail"})
    verdict = "pass" if all(r["verdict"] == "pass" for r in rows) else "fail"
    return DoublingReport(float(a), float(b), rows, verdict)
