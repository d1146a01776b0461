"""Descent flows of scalar fields: trajectories, exit times, volume transport."""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import DOP853, Radau, solve_ivp
from scipy.sparse import block_diag
from scipy.optimize import brentq

from . import sampling
from .errors import CapabilityError, DomainError, PreconditionError
from .manifolds import ChartManifold, Euclidean
from .volumes import BallSpec, sample_ball, space_form_ball_volume

RAW = "raw"
NORMALIZED = "normalized"
STAGNATION_TOL = 1e-9


@dataclass
class StopConditions:
    """When to end a trajectory.

    ``ball`` is ``(center, radius)``: stop on first exit.  ``stagnation_tol``
    ends the run once ``|grad f|`` drops below it.
    """

    t_max: float = 1e3
    max_steps: int = 200_000
    ball: Optional[tuple] = None
    stagnation_tol: float = STAGNATION_TOL


@dataclass
class FlowTrajectory:
    tag: str
    times: np.ndarray
    points: np.ndarray
    decrease: np.ndarray  # integral of <grad f, -X>: predicted f(p) - f(gamma(t))
    length: np.ndarray  # integral of |X|
    lap_integral: Optional[np.ndarray]
    termination: str
    values: np.ndarray = None
    grad_norms: np.ndarray = None
    laplacians: Optional[np.ndarray] = None
    detail: dict = field(default_factory=dict)

    @property
    def end(self):
        return self.points[-1]

    @property
    def duration(self):
        return float(self.times[-1])

    def to_csv(self, path=None):
        """Rows ``t, coordinates..., f, |grad f|, lap f``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = self.points.shape[1]
        w.writerow(["t"] + [f"x{i}" for i in range(dim)] + ["f", "grad_norm", "laplacian"])
        lap = self.laplacians if self.laplacians is not None else [math.nan] * len(self.times)
        for t, p, v, g, l in zip(self.times, self.points, self.values, self.grad_norms, lap):
            w.writerow([repr(float(t))] + [repr(float(c)) for c in p] + [repr(float(v)), repr(float(g)), repr(float(l))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def summary(self):
        return {"tag": self.tag, "termination": self.termination, "duration": self.duration,
                "steps": len(self.times) - 1, "start": self.points[0].tolist(), "end": self.end.tolist(),
                **self.detail}


def _velocity(f, P, tag, sign=1.0):
    g = f.gradient(P)
    gn = f.manifold.norm(P, g)
    if tag == NORMALIZED:
        with np.errstate(divide="ignore", invalid="ignore"):
            X = -sign * g / (gn**2)[..., None]
        return X, gn, np.ones_like(gn), 1.0 / gn
    return -sign * g, gn, gn**2, gn


_SOLVERS = {"DOP853": DOP853, "Radau": Radau}


def _make_solver(method, rhs, t0, y0, t_bound, rtol, atol, blocks=None, block=None, **kw):
    """Explicit DOP853 by default; implicit Radau for stiff long-horizon runs."""
    if method not in _SOLVERS:
        raise DomainError(f"unknown integrator {method!r}")
    if method == "Radau" and blocks:
        kw["jac_sparsity"] = block_diag([np.ones((block, block))] * blocks, format="csc")
    return _SOLVERS[method](rhs, t0, y0, t_bound, rtol=rtol, atol=atol, **kw)


def _check_tag(tag):
    if tag not in (RAW, NORMALIZED):
        raise DomainError(f"unknown flow tag {tag!r}")


def integrate_flow(M, f, p, tag=RAW, stop=None, rtol=1e-10, atol=1e-12, max_step=np.inf, method="DOP853"):
    """Integrate ``-grad f`` (``raw``) or ``-grad f/|grad f|^2`` (``normalized``) from ``p``.

    Explicit Dormand-Prince 8(5,3) with local error control (``method="Radau"``
    switches to the implicit solver for stiff runs).  Ball exit and
    stagnation are located by root finding on the dense output to 1e-12 in
    time.  Leaving the manifold's domain ends the run with termination
    ``domain-exit``.
    """
    _check_tag(tag)
    stop = stop or StopConditions()
    p = np.asarray(p, dtype=float)
    M.check_point(p)
    rep = p.shape[0]
    has_lap = f.has_laplacian
    if tag == NORMALIZED and float(f.grad_norm(p)) <= stop.stagnation_tol:
        raise PreconditionError("normalized flow needs a non-critical start", witness=p)

    def rhs(t, y):
        X, _, dec, spd = _velocity(f, y[:rep], tag)
        out = [X, [dec, spd]]
        if has_lap:
            out.append([f.laplacian(y[:rep])])
        return np.concatenate(out)

    y0 = np.concatenate([p, [0.0, 0.0] + ([0.0] if has_lap else [])])
    solver = _make_solver(method, rhs, 0.0, y0, stop.t_max, rtol, atol, max_step=max_step)

    def exit_gap(y):
        c, r = stop.ball
        return float(M.distance(np.asarray(c, dtype=float), y[:rep])) - r

    def stag_gap(y):
        return float(f.grad_norm(y[:rep])) - stop.stagnation_tol

    checks = [stag_gap]
    names = ["stagnation"]
    if stop.ball is not None:
        checks.append(exit_gap)
        names.append("ball-exit")
    prev = [g(y0) for g in checks]
    ts, ys = [0.0], [y0.copy()]
    termination = "time-budget"
    steps = 0
    while solver.status == "running":
        if steps >= stop.max_steps:
            termination = "step-budget"
            break
        solver.step()
        steps += 1
        if solver.status == "failed":
            termination = "integrator-failure"
            break
        y = solver.y
        if not bool(M.contains(y[:rep])):
            dense = solver.dense_output()
            lo, hi = solver.t_old, solver.t
            while hi - lo > 1e-12 * max(1.0, hi):
                mid = 0.5 * (lo + hi)
                if bool(M.contains(dense(mid)[:rep])):
                    lo = mid
                else:
                    hi = mid
            ts.append(lo)
            ys.append(dense(lo))
            termination = "domain-exit"
            break
        cur = [g(y) for g in checks]
        hits = []
        for i, (a, b) in enumerate(zip(prev, cur)):
            crossed = (a > 0 >= b) if names[i] == "stagnation" else (a <= 0 < b)
            if crossed:
                dense = solver.dense_output()
                gi = checks[i]
                root = brentq(lambda s: gi(dense(s)), solver.t_old, solver.t, xtol=1e-13, rtol=4 * np.finfo(float).eps)
                hits.append((root, names[i], dense))
        if hits:
            root, name, dense = min(hits, key=lambda h: h[0])
            ts.append(root)
            ys.append(dense(root))
            termination = name
            break
        ts.append(solver.t)
        ys.append(y.copy())
        prev = cur
        if solver.status == "finished":
            termination = "time-budget"
    Y = np.asarray(ys)
    P = Y[:, :rep]
    traj = FlowTrajectory(
        tag, np.asarray(ts), P, Y[:, rep], Y[:, rep + 1], Y[:, rep + 2] if has_lap else None, termination,
        detail={"stagnation_tol": stop.stagnation_tol},
    )
    if stop.ball is not None:
        traj.detail["ball_radius"] = float(stop.ball[1])
    traj.values = np.asarray(f.value(P), dtype=float)
    traj.grad_norms = np.asarray(f.grad_norm(P), dtype=float)
    if has_lap:
        traj.laplacians = np.asarray(f.laplacian(P), dtype=float)
    return traj


def _rep_cutoff(M, center, radius):
    """Chart radius outside which a point is certainly farther than ``radius``."""
    if isinstance(M, Euclidean):
        return radius
    if isinstance(M, ChartManifold) and M.metric_lower_bound:
        return radius / math.sqrt(M.metric_lower_bound)
    return None


def flow_batch(M, f, points, t_end, tag=RAW, t_eval=None, with_laplacian=False, backward=False,
               freeze=None, rtol=1e-10, atol=1e-12, method="DOP853"):
    """Flow a stack of points simultaneously.

    Returns ``(positions, lap_integral)``; with ``t_eval`` the positions have
    shape ``(len(t_eval), N, rep)`` and ``lap_integral`` ``(len(t_eval), N)``.
    ``freeze = (center, R)`` smoothly switches the field off beyond chart
    radius ``R`` so that escaping points cannot blow up the step control.
    """
    _check_tag(tag)
    P0 = np.asarray(points, dtype=float)
    N, rep = P0.shape
    if with_laplacian and not f.has_laplacian:
        raise CapabilityError(f"{f.name}: no Laplacian")
    k = rep + (1 if with_laplacian else 0)
    sign = -1.0 if backward else 1.0

    def rhs(t, y):
        Y = y.reshape(N, k)
        P = Y[:, :rep]
        X, *_ = _velocity(f, P, tag, sign)
        chi = 1.0
        if freeze is not None:
            c, R = freeze
            s = np.linalg.norm(P - c, axis=-1) / R
            chi = np.clip(2.0 - s, 0.0, 1.0)
            chi = (chi * chi * (3.0 - 2.0 * chi))[:, None]
        cols = [X * chi]
        if with_laplacian:
            cols.append(sign * f.laplacian(P)[:, None] * chi)
        return np.concatenate(cols, axis=1).ravel()

    y0 = np.concatenate([P0] + ([np.zeros((N, 1))] if with_laplacian else []), axis=1).ravel()
    kw = {}
    if method == "Radau":
        kw["jac_sparsity"] = block_diag([np.ones((k, k))] * N, format="csc")
    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method=method, rtol=rtol, atol=atol,
                    t_eval=None if t_eval is None else np.asarray(t_eval, dtype=float), **kw)
    if not sol.success:
        raise DomainError(f"batch flow failed: {sol.message}")
    if t_eval is None:
        Y = sol.y[:, -1].reshape(N, k)
        return Y[:, :rep], (Y[:, rep] if with_laplacian else None)
    Y = sol.y.T.reshape(len(sol.t), N, k)
    return Y[..., :rep], (Y[..., rep] if with_laplacian else None)


# -- exit time ---------------------------------------------------------------------

def batch_transit(M, f, starts, center, r_out, t_max, stagnation_tol=STAGNATION_TOL, rtol=1e-10, atol=1e-12,
                  max_steps=200_000, method="DOP853"):
    """First time each start's raw-flow orbit reaches distance ``r_out`` from ``center``.

    All orbits are advanced as one stacked system; an orbit leaves the
    system when it exits (crossing located on the dense output by root
    finding) or stagnates.  Returns ``inf`` for orbits that never exit
    within ``t_max``.
    """
    center = np.asarray(center, dtype=float)
    Y = np.array(starts, dtype=float)
    N, rep = Y.shape
    out = np.full(N, math.inf)
    active = np.arange(N)

    def gap(P):
        return np.asarray(M.distance(center, P), dtype=float) - r_out

    g_prev = gap(Y)
    stag = np.asarray(f.grad_norm(Y)) < stagnation_tol
    active = active[~stag & (g_prev <= 0)]
    t0 = 0.0
    steps = 0
    while active.size and t0 < t_max and steps < max_steps:
        k = active.size

        def rhs(t, y, k=k):
            return (-f.gradient(y.reshape(k, rep))).ravel()

        solver = _make_solver(method, rhs, t0, Y[active].ravel(), t_max, rtol, atol, blocks=k, block=rep)
        changed = False
        while solver.status == "running" and steps < max_steps:
            solver.step()
            steps += 1
            if solver.status == "failed":
                break
            P = solver.y.reshape(k, rep)
            Y[active] = P
            g = gap(P)
            crossed = np.flatnonzero(g > 0)
            done = set()
            if crossed.size:
                dense = solver.dense_output()
                for j in crossed:
                    fn = lambda s, j=j: float(gap(dense(s).reshape(k, rep)[j]))
                    out[active[j]] = brentq(fn, solver.t_old, solver.t, xtol=1e-13, rtol=4 * np.finfo(float).eps)
                    done.add(int(j))
            stag = np.flatnonzero(np.asarray(f.grad_norm(P)) < stagnation_tol)
            done.update(int(j) for j in stag)
            if done:
                keep = np.array([j not in done for j in range(k)], dtype=bool)
                active = active[keep]
                t0 = solver.t
                changed = True
                break
        if not changed:
            break
    return out


@dataclass
class ExitTimeReport:
    tau: float
    case: str  # "a": nothing escaped within budget, "b": some trajectory escaped
    witness_start: Optional[np.ndarray]
    witness: Optional[FlowTrajectory]
    samples: int
    escaped: int
    t_max: float
    refined: bool = False

    def to_dict(self):
        return {"tau": self.tau, "case": self.case, "samples": self.samples, "escaped": self.escaped,
                "t_max": self.t_max, "refined": self.refined,
                "witness_start": None if self.witness_start is None else self.witness_start.tolist()}


def _circle_starts(M, center, r, angles):
    B = M.tangent_basis(center)
    U = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return M.exp_map(center, r * U @ B.T)


def exit_time(M, f, center, r_in, r_out, boundary_samples=64, seed=0, t_max=1e4, refine=True,
              stagnation_tol=STAGNATION_TOL, zoom_levels=3, zoom_points=16, witness=True, method="DOP853"):
    """Shortest sampled transit time of the raw flow from the ``r_in`` to the ``r_out`` sphere.

    A trajectory that stagnates (``|grad f|`` below ``stagnation_tol``) or
    runs out of time without reaching the outer sphere counts as not
    escaping; if none escapes the report is case ``a``.  In dimension 2 the
    best sampled start is refined by repeated angular zooms around the
    current best angle.
    """
    if not 0 < r_in < r_out:
        raise DomainError("need 0 < r_in < r_out")
    center = np.asarray(center, dtype=float)
    if M.dim == 1:
        starts = M.exp_map(center, r_in * np.array([[1.0], [-1.0]]) @ M.tangent_basis(center).T)
        angles = None
    elif M.dim == 2:
        off = sampling.uniform(seed, 1, 1, stream=21)[0, 0]
        angles = 2.0 * math.pi * (np.arange(boundary_samples) + off) / boundary_samples
        starts = _circle_starts(M, center, r_in, angles)
    else:
        U = sampling.unit_vectors(seed, boundary_samples, M.dim, stream=21)
        starts = M.exp_map(center, r_in * U @ M.tangent_basis(center).T)
        angles = None
    times = batch_transit(M, f, starts, center, r_out, t_max, stagnation_tol, method=method)
    escaped = int(np.sum(np.isfinite(times)))
    if escaped == 0:
        return ExitTimeReport(math.inf, "a", None, None, len(starts), 0, float(t_max))
    i = int(np.argmin(times))
    best_t, best_q = float(times[i]), starts[i]
    refined = False
    if refine and angles is not None:
        th, h = angles[i], 2.0 * math.pi / len(angles)
        for _ in range(zoom_levels):
            cand = th + np.linspace(-h, h, zoom_points + 1)
            qs = _circle_starts(M, center, r_in, cand)
            tt = batch_transit(M, f, qs, center, r_out, t_max, stagnation_tol, method=method)
            j = int(np.argmin(tt))
            if tt[j] < best_t:
                best_t, best_q, th = float(tt[j]), qs[j], cand[j]
            h = 2.0 * h / zoom_points
        refined = True
    tr = None
    if witness:
        tr = integrate_flow(M, f, best_q, RAW, StopConditions(t_max=t_max, ball=(center, r_out),
                                                               stagnation_tol=stagnation_tol), method=method)
    return ExitTimeReport(best_t, "b", np.asarray(best_q), tr, len(starts), escaped, float(t_max), refined)


# -- Liouville volume transport ----------------------------------------------------

@dataclass
class LiouvilleReport:
    predicted: float
    predicted_stderr: float
    measured: float
    measured_stderr: float
    region_volume: float
    t: float
    samples: int

    @property
    def stderr(self):
        return math.hypot(self.predicted_stderr, self.measured_stderr)

    def __iter__(self):
        return iter((self.predicted, self.measured, self.stderr))

    def to_dict(self):
        return {"predicted": self.predicted, "predicted_stderr": self.predicted_stderr,
                "measured": self.measured, "measured_stderr": self.measured_stderr,
                "stderr": self.stderr, "region_volume": self.region_volume, "t": self.t,
                "samples": self.samples}


def liouville_volume(M, f, region, t, samples, seed):
    """Transported volume of ``region`` under the raw flow at time ``t``, two ways.

    ``predicted`` integrates ``exp(-int_0^t lap f)`` over the region by
    Monte Carlo.  ``measured`` maps the region forward to find a bounding
    chart box, then counts box samples whose backward flow lands in the
    region.  Euclidean manifolds only.
    """
    if not isinstance(M, Euclidean):
        raise CapabilityError("liouville_volume works in Euclidean charts")
    if not f.has_laplacian:
        raise CapabilityError(f"{f.name}: no Laplacian")
    if not t > 0:
        raise DomainError("t must be positive")
    samples = int(samples)
    c = np.asarray(region.center, dtype=float)
    m = M.dim
    u = sampling.uniform(seed, samples, m, stream=31)
    pts, w, box = M.ball_proposal(c, region.radius, u)
    inside = w > 0
    P = pts[inside]
    _, lint = flow_batch(M, f, P, t, with_laplacian=True)
    vals = np.zeros(samples)
    vals[inside] = np.exp(-lint)
    predicted = box * float(np.mean(vals))
    pred_se = box * float(np.std(vals, ddof=1)) / math.sqrt(samples)
    region_vol = box * float(np.mean(inside))

    # bounding box of the image from boundary and interior samples
    shell = c + region.radius * sampling.unit_vectors(seed, 4096, m, stream=32)
    probe = np.concatenate([shell, P[:4096]], axis=0)
    img, _ = flow_batch(M, f, probe, t)
    if not np.all(M.contains(img)):
        raise DomainError("flow leaves the chart domain")
    lo, hi = img.min(axis=0), img.max(axis=0)
    pad = 0.05 * (hi - lo) + 1e-12
    lo, hi = lo - pad, hi + pad
    U = sampling.uniform(seed, samples, m, stream=33)
    Q = lo + U * (hi - lo)
    back, _ = flow_batch(M, f, Q, t, backward=True)
    hit = (np.linalg.norm(back - c, axis=-1) <= region.radius).astype(float)
    vol_box = float(np.prod(hi - lo))
    measured = vol_box * float(np.mean(hit))
    meas_se = vol_box * float(np.std(hit, ddof=1)) / math.sqrt(samples)
    return LiouvilleReport(predicted, pred_se, measured, meas_se, region_vol, float(t), samples)


# -- averaged Laplacian (Jensen + comparison) ---------------------------------------

@dataclass
class AvgLaplacianReport:
    lhs: float
    lhs_stderr: float
    rhs: float
    tau: float
    verdict: str
    max_excursion: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    def to_dict(self):
        return {"lhs": self.lhs, "lhs_stderr": self.lhs_stderr, "rhs": self.rhs, "margin": self.margin,
                "lhs_per_time": self.lhs / self.tau, "rhs_per_time": self.rhs / self.tau,
                "tau": self.tau, "verdict": self.verdict, "max_excursion": self.max_excursion}


def avg_laplacian_bound(M, f, center, r_small, r_big, tau, sf, samples, seed, time_nodes=33):
    """Average over ``B(center, r_small)`` of ``int_0^tau -lap f(phi_s p) ds`` vs ``log(v^c(r_big)/v^c(r_small))``.

    The containment ``phi_s(B(center, r_small)) in B(center, r_big)`` for
    ``s <= tau`` is checked at ``time_nodes`` equally spaced times.
    """
    if not 0 < r_small < r_big:
        raise DomainError("need 0 < r_small < r_big")
    center = np.asarray(center, dtype=float)
    P = sample_ball(M, center, r_small, samples, seed, stream=41)
    ts = np.linspace(0.0, float(tau), int(time_nodes))
    pos, lint = flow_batch(M, f, P, tau, t_eval=ts, with_laplacian=True)
    d = np.asarray(M.distance(center, pos.reshape(-1, pos.shape[-1])), dtype=float).reshape(pos.shape[:2])
    worst = np.unravel_index(int(np.argmax(d)), d.shape)
    if d[worst] > r_big + 1e-9:
        raise PreconditionError(
            f"flowed sample leaves B(center, {r_big}) at t = {ts[worst[0]]:.6g}", witness=P[worst[1]]
        )
    vals = -lint[-1]
    lhs = float(np.mean(vals))
    se = float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
    rhs = math.log(space_form_ball_volume(sf, r_big) / space_form_ball_volume(sf, r_small))
    verdict = "pass" if lhs <= rhs + 3.0 * se + 1e-8 else "fail"
    return AvgLaplacianReport(lhs, se, rhs, float(tau), verdict, float(d[worst]))
