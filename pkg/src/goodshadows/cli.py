"""Command-line entry point ``goodshadows``.

Exit codes: 0 success, 1 verdict failure, 2 configuration or input error,
3 numerical or capability error.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import hull
from .errors import (CapabilityError, ConfigError, GoodShadowsError, InconsistencyError,
                     NumericalPrecisionError)
from .fields import field_from_spec
from .flows import NORMALIZED, RAW, StopConditions, integrate_flow, liouville_volume
from .manifolds import manifold_from_spec
from .scenarios import (Scenario, _jsonable, _manifold_point, builtin_names, load_scenario, parse_matrix,
                        parse_vector, run_scenario)
from .shadows import (doubling_check, flow_shadow_c1, good_shadow_c1, good_shadow_c2, oscillation_shadow,
                      verify_certificate)
from .volumes import BallSpec, SpaceForm, gromov_ratio_check

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _emit(args, payload, csv_text=None):
    if args.format == "csv":
        if csv_text is None:
            raise ConfigError("this command has no CSV output", key="format")
        text = csv_text
    else:
        text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_csv(rows):
    if not rows:
        return ""
    keys = sorted({k for r in rows for k in r})
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(_cell(r.get(k)) for k in keys))
    return "\n".join(lines) + "\n"


def _cell(v):
    v = _jsonable(v)
    if isinstance(v, list):
        return " ".join(_cell(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _field_args(args):
    M = manifold_from_spec({"kind": "euclidean", "dim": args.dim})
    return M, field_from_spec({"kind": "expr", "expr": args.expr, "inf": args.inf}, M)


# -- command handlers -----------------------------------------------------------------

def cmd_shadow(args):
    M, f = _field_args(args)
    pts = parse_matrix(args.points)
    if args.which == "c1":
        cert = good_shadow_c1(M, f, pts)
    elif args.which == "flow-c1":
        cert = flow_shadow_c1(M, f, pts)
    elif args.which == "c2":
        cert = good_shadow_c2(M, f, pts, SpaceForm(args.curvature, M.dim), args.K, seed=args.seed,
                              tube_points=args.samples or 256)
    else:
        cert = oscillation_shadow(M, f, pts, args.delta, SpaceForm(args.curvature, M.dim), seed=args.seed,
                                  osc_samples=args.samples or 4096)
    ver = verify_certificate(cert, M, f, tol=args.tol)
    _emit(args, {"certificate": cert.to_dict(), "verification": ver.to_dict()}, _table_csv(cert.rows))
    return EXIT_OK if cert.verdict == "pass" and ver.agree else EXIT_VERDICT


def cmd_flow(args):
    M, f = _field_args(args)
    tag = NORMALIZED if args.tag == "normalized" else RAW
    tr = integrate_flow(M, f, parse_vector(args.start), tag, StopConditions(t_max=args.t_max))
    _emit(args, {"summary": tr.summary(), "times": tr.times, "points": tr.points, "values": tr.values},
          tr.to_csv())
    return EXIT_OK


def _manifold_from_args(args):
    spec = {"kind": args.manifold, "dim": args.dim, "radius": args.radius, "curvature": args.manifold_curvature}
    return manifold_from_spec(spec)


def cmd_volume(args):
    if args.which == "liouville":
        M, f = _field_args(args)
        rep = liouville_volume(M, f, BallSpec(np.zeros(M.dim), args.radius), args.t, args.samples or 100000,
                               args.seed)
        _emit(args, rep.to_dict(), _table_csv([rep.to_dict()]))
        return EXIT_OK if abs(rep.measured - rep.predicted) <= 3 * rep.stderr else EXIT_VERDICT
    M = _manifold_from_args(args)
    if args.center is None:
        center = M.origin() if hasattr(M, "origin") else np.zeros(M.dim)
        if args.manifold == "sphere":
            center = np.r_[np.zeros(M.dim), M.radius]
    else:
        center = _manifold_point(M, parse_vector(args.center))
    if args.which == "gromov":
        rep = gromov_ratio_check(M, center, parse_vector(args.radii), SpaceForm(args.curvature, M.dim),
                                 args.samples or 200000, args.seed)
        rows = [{"r": r, "ratio": x, "stderr": s} for r, x, s in zip(rep.radii, rep.ratios, rep.stderrs)]
        _emit(args, rep.to_dict(), _table_csv(rows))
        return EXIT_OK if rep.verdict == "pass" else EXIT_VERDICT
    trials = [(center, float(r)) for r in parse_vector(args.radii)]
    rep = doubling_check(M, args.a, args.b, trials, args.samples or 100000, args.seed)
    _emit(args, rep.to_dict(), _table_csv([{k: r[k] for k in ("r", "ratio", "stderr")} for r in rep.rows]))
    return EXIT_OK if rep.verdict == "pass" else EXIT_VERDICT


def _adhoc(kind, sections, seed):
    return Scenario(f"adhoc-{kind}", kind, seed, "pass", sections, "<command line>")


def cmd_hull(args):
    if args.which == "distance":
        arr = hull.make_arrangement(parse_vector(args.p0), parse_matrix(args.normals))
        d = float(hull.intersection_distance(arr, parse_vector(args.y)))
        _emit(args, {"arrangement": arr.to_dict(), "distance": d}, _table_csv([{"distance": d}]))
        return EXIT_OK
    if args.which == "support":
        cloud = hull.read_cloud_csv(args.cloud)["points"]
        cert = hull.supporting_normals(cloud, parse_vector(args.point), tol=args.tol)
        rows = [{"normal": n, "margin": m} for n, m in zip(cert.normals, cert.margins)]
        _emit(args, cert.to_dict(), _table_csv(rows))
        return EXIT_OK
    imm = {"kind": args.immersion, "radius": str(args.radius)}
    arrangement = {"p0": args.p0, "normals": args.normals}
    if args.which == "certify":
        scn = _adhoc("codimension", {"immersion": imm, "arrangement": arrangement,
                                     "levels": {"count": str(args.levels)},
                                     "declared": {"complete": args.complete}}, args.seed)
    elif args.which == "curvature":
        scn = _adhoc("sign", {"immersion": imm, "arrangement": arrangement, "point": {"q": args.point}}, args.seed)
    else:
        scn = _adhoc("thm16", {"immersion": imm, "arrangement": arrangement,
                               "sequence": {"u": args.u, "v": args.v, "k_min": str(args.k_min),
                                            "k_max": str(args.k_max)},
                               "comparison": {"curvature": str(args.curvature)}}, args.seed)
    rep = run_scenario(scn)
    _emit(args, rep.to_dict(), rep.to_csv())
    return EXIT_OK if rep.verdict in ("PASS", "FAIL-hypothesis") else EXIT_VERDICT


def cmd_scenario(args):
    if args.which == "list":
        names = builtin_names()
        for name in names:
            scn = load_scenario(name)
            sys.stdout.write(f"{name}\t{scn.kind}\texpect={scn.expect}\n")
        return EXIT_OK
    scn = load_scenario(args.name)
    if args.which == "print-config":
        sys.stdout.write(scn.full_config())
        return EXIT_OK
    if args.seed is not None:
        scn.seed = int(args.seed)
    if args.samples is not None:
        scn.sections.setdefault("budget", {})["samples"] = str(args.samples)
    if args.tol is not None:
        scn.sections.setdefault("budget", {})["tol"] = repr(float(args.tol))
    rep = run_scenario(scn)
    _emit(args, rep.to_dict(), rep.to_csv())
    sys.stderr.write(f"{scn.name}: {rep.verdict} (expected {scn.expect})\n")
    return EXIT_OK if rep.as_expected else EXIT_VERDICT


# -- parser ---------------------------------------------------------------------------

def _common(p, seed_default=0):
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _field_opts(p):
    p.add_argument("--expr", required=True, help="field expression in x, y, z, w")
    p.add_argument("--inf", default="0", help="declared infimum")
    p.add_argument("--dim", type=int, default=2)


def build_parser():
    parser = argparse.ArgumentParser(prog="goodshadows", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sh = sub.add_parser("shadow", help="good shadows of a minimizing sequence")
    sh.add_argument("which", choices=("c1", "flow-c1", "c2", "oscillation"))
    _field_opts(sh)
    sh.add_argument("--points", required=True, help="sequence points, 'x y; x y; ...'")
    sh.add_argument("--K", type=float, default=1.0, help="gradient Lipschitz constant (c2)")
    sh.add_argument("--curvature", type=float, default=0.0, help="comparison curvature")
    sh.add_argument("--delta", type=float, default=1.0, help="oscillation radius")
    _common(sh)
    sh.set_defaults(handler=cmd_shadow)

    fl = sub.add_parser("flow", help="gradient-flow trajectories")
    fl.add_argument("which", choices=("trace",))
    _field_opts(fl)
    fl.add_argument("--start", required=True)
    fl.add_argument("--tag", choices=("raw", "normalized"), default="raw")
    fl.add_argument("--t-max", type=float, default=10.0)
    _common(fl)
    fl.set_defaults(handler=cmd_flow)

    vo = sub.add_parser("volume", help="volume identities and comparisons")
    vo.add_argument("which", choices=("liouville", "gromov", "doubling"))
    vo.add_argument("--expr", default="(x^2 + y^2)/2")
    vo.add_argument("--inf", default="0")
    vo.add_argument("--dim", type=int, default=2)
    vo.add_argument("--t", type=float, default=1.0)
    vo.add_argument("--radius", type=float, default=1.0, help="region radius / sphere radius")
    vo.add_argument("--manifold", choices=("euclidean", "sphere", "hyperbolic"), default="sphere")
    vo.add_argument("--manifold-curvature", type=float, default=-1.0)
    vo.add_argument("--center", default=None, help="ball center (default: north pole, origin or zero)")
    vo.add_argument("--radii", default="0.2 0.4 0.6 0.8 1.0 1.2 1.4 1.6 1.8 2.0")
    vo.add_argument("--curvature", type=float, default=0.0, help="comparison curvature")
    vo.add_argument("--a", type=float, default=2.0)
    vo.add_argument("--b", type=float, default=4.0)
    _common(vo)
    vo.set_defaults(handler=cmd_volume)

    hu = sub.add_parser("hull", help="supporting hyperplanes and hull certificates")
    hu.add_argument("which", choices=("distance", "support", "certify", "curvature", "thm16"))
    hu.add_argument("--p0", default="0 0 0")
    hu.add_argument("--normals", default="0 0 1", help="unit normals, 'a b c; d e f'")
    hu.add_argument("--y", default="0 0 0")
    hu.add_argument("--cloud", help="CSV point cloud (columns x0, x1, ...)")
    hu.add_argument("--point", default="0 0 0")
    hu.add_argument("--immersion", default="sphere",
                    choices=("circle", "sphere", "hemisphere", "cylinder", "plane", "ellipsoid", "wedge-curve"))
    hu.add_argument("--radius", type=float, default=1.0)
    hu.add_argument("--levels", type=int, default=6)
    hu.add_argument("--complete", choices=("yes", "no"), default="yes")
    hu.add_argument("--u", default="-1.5707963267948966 + 2^(-k)", help="thm16 first chart coordinate in k")
    hu.add_argument("--v", default="k", help="thm16 second chart coordinate in k")
    hu.add_argument("--k-min", type=int, default=2)
    hu.add_argument("--k-max", type=int, default=9)
    hu.add_argument("--curvature", type=float, default=0.0)
    _common(hu)
    hu.set_defaults(handler=cmd_hull)

    sc = sub.add_parser("scenario", help="shipped and user scenarios")
    sc.add_argument("which", choices=("run", "list", "print-config"))
    sc.add_argument("name", nargs="?", help="scenario name or path to an .ini file")
    sc.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sc.add_argument("--samples", type=int, default=None)
    sc.add_argument("--tol", type=float, default=None)
    sc.add_argument("--out", default=None)
    sc.add_argument("--format", choices=("json", "csv"), default="json")
    sc.set_defaults(handler=cmd_scenario)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scenario" and args.which != "list" and not args.name:
        parser.error("scenario name required")
    start = time.perf_counter()
    try:
        code = args.handler(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (CapabilityError, NumericalPrecisionError, InconsistencyError) as exc:
        sys.stderr.write(f"numerical/capability error: {exc}\n")
        return EXIT_NUMERIC
    except GoodShadowsError as exc:
        sys.stderr.write(f"input error: {type(exc).__name__}: {exc}\n")
        return EXIT_CONFIG
    sys.stderr.write(f"elapsed {time.perf_counter() - start:.2f} s\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
