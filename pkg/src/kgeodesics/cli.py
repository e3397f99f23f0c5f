"""Batch command-line front end.

Subcommands: distance, minimizers, ddist, energy, balance, find, classify,
gs, sweep, verify-thm.  Every artifact embeds the full run configuration as
``#``-prefixed header lines; identical configurations (including the seed)
produce byte-identical artifacts.  Exit codes: 0 success, 1 usage error,
2 domain error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import classify as cl
from . import distance as dist
from . import energy as en
from . import geodesic as geo
from . import svg as svgmod
from . import sweep as sw
from .errors import GeometryError
from .surfaces import (
    DoubledPolygon,
    FlatTorus,
    RoundSphere,
    SurfacePoint,
    TangentVector,
    _Spheroid,
    parse_surface,
)

OUT_ENV = "KGEODESICS_OUTDIR"


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_point(text: str) -> SurfacePoint:
    parts = text.split(",")
    if len(parts) == 2:
        return SurfacePoint(float(parts[0]), float(parts[1]))
    if len(parts) == 3:
        return SurfacePoint(float(parts[0]), float(parts[1]), parts[2])
    raise _UsageError(f"cannot parse point {text!r} (use u,v or u,v,sheet)")


def _parse_tuple(text: str):
    return [_parse_point(tok) for tok in text.split(";" ) if tok.strip()]


def _parse_vector(text: str) -> TangentVector:
    a, b = text.split(",")
    return TangentVector(float(a), float(b))


def _parse_geodesic(surface, text: str):
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name == "equator":
        return geo.equator_geodesic(surface)
    if name == "meridian":
        phi0 = float(rest) if rest else 0.0
        return geo.meridian_geodesic(surface, phi0)
    if name == "great":
        th, ph, ang = (float(x) for x in rest.split(","))
        p = SurfacePoint(th, ph)
        g = surface.metric_at(p)
        v = TangentVector(math.cos(ang) / math.sqrt(g[0, 0]), math.sin(ang) / math.sqrt(g[1, 1]))
        return geo.great_circle(surface, p, v)
    if name == "line":
        bits = rest.split(":")
        m, n = (int(x) for x in bits[0].split(","))
        start = _parse_point(bits[1]) if len(bits) > 1 else SurfacePoint(0.0, 0.0)
        return geo.torus_line(surface, start, m, n)
    if name in ("overunder", "over-under"):
        which = int(rest) if rest else 0
        return geo.over_under_geodesic(surface, which)
    raise _UsageError(f"unknown geodesic spec {text!r}")


def _config_header(args, command):
    keys = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "config") or v is None:
            continue
        keys[k] = v
    lines = [f"# command={command}"]
    for k, v in sorted(keys.items()):
        lines.append(f"# {k}={v}")
    return lines


def _write(args, name: str, body: str, command: str) -> Path:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    header = "\n".join(_config_header(args, command))
    if name.endswith(".svg"):
        text = body  # config embedded as <!-- --> comments by the caller
    else:
        text = header + "\n" + body
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_distance(args):
    surface = parse_surface(args.surface)
    d = dist.distance(surface, _parse_point(args.q), _parse_point(args.p))
    print(fmt(d))
    _write(args, "distance.txt", fmt(d) + "\n", "distance")
    return 0


def _cmd_minimizers(args):
    surface = parse_surface(args.surface)
    ms = dist.minimizers(surface, _parse_point(args.q), _parse_point(args.p))
    print(f"distance={fmt(ms.distance)} multiplicity={ms.multiplicity} continuum={ms.continuum}")
    _write(args, "minimizers.json", ms.to_json() + "\n", "minimizers")
    return 0


def _cmd_ddist(args):
    surface = parse_surface(args.surface)
    val = dist.directional_derivative(
        surface, _parse_point(args.p), _parse_point(args.q), _parse_vector(args.v)
    )
    print(fmt(val))
    _write(args, "ddist.txt", fmt(val) + "\n", "ddist")
    return 0


def _cmd_energy(args):
    surface = parse_surface(args.surface)
    tp = en.TuplePoint(surface, _parse_tuple(args.tuple))
    val = en.uniform_energy(surface, tp)
    print(fmt(val))
    _write(args, "energy.txt", fmt(val) + "\n", "energy")
    return 0


def _cmd_balance(args):
    surface = parse_surface(args.surface)
    tp = en.TuplePoint(surface, _parse_tuple(args.tuple))
    rep = en.balance_test(surface, tp)
    print(
        f"{rep.classification} spacing={fmt(rep.spacing_residual)} "
        f"antipodal={fmt(rep.antipodal_residual)}"
    )
    _write(args, "balance.json", rep.to_json() + "\n", "balance")
    return 0


def _cmd_find(args):
    surface = parse_surface(args.surface)
    if args.seed_file:
        text = Path(args.seed_file).read_text()
        pts = _parse_tuple(";".join(line for line in text.splitlines() if line.strip()))
    elif args.tuple:
        pts = _parse_tuple(args.tuple)
    else:
        rng = np.random.default_rng(args.seed)
        bbox = svgmod.chart_bbox(surface)
        pts = [
            SurfacePoint(rng.uniform(bbox[0], bbox[2]), rng.uniform(bbox[1], bbox[3]))
            for _ in range(args.k)
        ]
    opts = en.SearchOptions(max_iter=args.max_iter, keep_trace=True)
    res = en.find_balanced(surface, args.k, en.TuplePoint(surface, pts), opts)
    print(f"{res.status} E={fmt(res.energy)} iterations={res.iterations}")
    if res.report is not None:
        print(
            f"classification={res.report.classification} "
            f"spacing={fmt(res.report.spacing_residual)} "
            f"antipodal={fmt(res.report.antipodal_residual)}"
        )
    _write(args, "find_trace.csv", res.trace_csv(), "find")
    body = "\n".join(f"{fmt(p.u)},{fmt(p.v)},{p.sheet}" for p in res.tuple_point.points)
    _write(args, "find_tuple.csv", "u,v,sheet\n" + body + "\n", "find")
    return 0


def _cmd_classify(args):
    surface = parse_surface(args.surface)
    gamma = _parse_geodesic(surface, args.geodesic)
    rows = ["k,verdict,defect,witness_t,cut_witness_t,length"]
    if args.minimal_k:
        mk = cl.minimal_k(surface, gamma, k_max=args.k_max, n_grid=args.n_grid)
        print(f"minimal_k={'NotFound' if mk is None else mk}")
        ks = [mk] if mk is not None else []
    else:
        ks = [args.k]
    for k in ks:
        rep = cl.is_k_geodesic(surface, gamma, k, n_grid=args.n_grid)
        rows.append(rep.to_csv_row())
        print(f"k={k} verdict={rep.verdict} defect={fmt(rep.defect_max)}")
    _write(args, "classify.csv", "\n".join(rows) + "\n", "classify")
    body = svgmod.arc_svg(
        surface, [gamma], comments=[" ".join(_config_header(args, "classify"))]
    )
    _write(args, "classify.svg", body, "classify")
    return 0


def _cmd_gs(args):
    surface = parse_surface(args.surface)
    p = _parse_point(args.p)
    if args.enumerate:
        pts = cl.enumerate_gs_critical(surface, p, grid_n=args.grid_n)
        print(f"n_critical={len(pts)}")
        rows = ["u,v"]
        for q in pts:
            print(f"  {fmt(q.u)},{fmt(q.v)}")
            rows.append(f"{fmt(q.u)},{fmt(q.v)}")
        _write(args, "gs_critical.csv", "\n".join(rows) + "\n", "gs")
        return 0
    rep = cl.gs_critical(surface, p, _parse_point(args.q))
    print(f"critical={rep.critical} max_gap={fmt(rep.max_gap)}")
    if rep.witness is not None:
        print(f"witness={fmt(rep.witness.a)},{fmt(rep.witness.b)}")
    _write(
        args,
        "gs.txt",
        f"critical={rep.critical}\nmax_gap={fmt(rep.max_gap)}\n",
        "gs",
    )
    return 0


def _cmd_sweep(args):
    lo, hi = (float(x) for x in args.bracket.split(","))
    c0 = sw.find_c0((lo, hi))
    print(f"c0={fmt(c0)}")
    cs = np.linspace(lo, hi, args.grid)
    records = sw.sweep_grid(cs, n_grid=args.n_grid, k_max=args.k_max, with_classes=not args.no_classes)
    rows = ["c,cut_distance,equator_length,verdict_k3,minimal_k,class_found,smooth_class"]
    rows += [r.to_csv_row() for r in records]
    rows.append(f"# c0={fmt(c0)}")
    _write(args, "sweep.csv", "\n".join(rows) + "\n", "sweep")
    body = svgmod.sweep_svg(records, c0=c0, comments=[" ".join(_config_header(args, "sweep"))])
    _write(args, "sweep.svg", body, "sweep")
    if args.blowup_cs:
        bs = [float(x) for x in args.blowup_cs.split(",")]
        rep = sw.blowup_experiment(bs, k_max=args.k_max, n_grid=args.n_grid)
        _write(args, "blowup.csv", rep.to_csv(), "sweep")
        for c, mk in rep.rows:
            print(f"c={fmt(c)} minimal_k={'NotFound' if mk is None else mk}")
    return 0


def _cmd_verify_thm(args):
    surface = parse_surface(args.surface)
    gamma = _parse_geodesic(surface, args.geodesic)
    candidates = [
        _parse_geodesic(surface, tok) for tok in args.candidates.split(";") if tok.strip()
    ]
    rep = cl.verify_theorem_behavior(surface, gamma, candidates)
    print(
        f"ok={rep.ok} checks={len(rep.checks)} violations={len(rep.violations)} "
        f"H={fmt(rep.curvature_floor)} threshold={fmt(rep.length_threshold)}"
    )
    rows = ["candidate,t,s,separation,length_ok,half,passes_opposite,length_match"]
    for c in rep.checks:
        rows.append(
            f"{c.candidate_index},{fmt(c.t_on_gamma)},{fmt(c.s_on_candidate)},"
            f"{fmt(c.separation)},{int(c.length_ok)},{int(c.half_geodesic)},"
            f"{'' if c.passes_opposite is None else int(c.passes_opposite)},"
            f"{'' if c.length_match is None else int(c.length_match)}"
        )
    _write(args, "verify_thm.csv", "\n".join(rows) + "\n", "verify-thm")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="kgeo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--surface", default="sphere", help="surface descriptor")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
        p.add_argument("--config", default=None, help="key=value config file overriding defaults")

    p = sub.add_parser("distance")
    common(p)
    p.add_argument("--q", required=True)
    p.add_argument("--p", required=True)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("minimizers")
    common(p)
    p.add_argument("--q", required=True)
    p.add_argument("--p", required=True)
    p.set_defaults(func=_cmd_minimizers)

    p = sub.add_parser("ddist")
    common(p)
    p.add_argument("--q", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--v", required=True)
    p.set_defaults(func=_cmd_ddist)

    p = sub.add_parser("energy")
    common(p)
    p.add_argument("--tuple", required=True)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("balance")
    common(p)
    p.add_argument("--tuple", required=True)
    p.set_defaults(func=_cmd_balance)

    p = sub.add_parser("find")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tuple", default=None)
    p.add_argument("--seed-file", default=None)
    p.add_argument("--max-iter", type=int, default=10000)
    p.set_defaults(func=_cmd_find)

    p = sub.add_parser("classify")
    common(p)
    p.add_argument("--geodesic", default="equator")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--minimal-k", action="store_true")
    p.add_argument("--k-max", type=int, default=64)
    p.add_argument("--n-grid", type=int, default=128)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("gs")
    common(p)
    p.add_argument("--p", required=True)
    p.add_argument("--q", default=None)
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--grid-n", type=int, default=24)
    p.set_defaults(func=_cmd_gs)

    p = sub.add_parser("sweep")
    common(p)
    p.add_argument("--bracket", default="0.2,0.99")
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--k-max", type=int, default=64)
    p.add_argument("--n-grid", type=int, default=12)
    p.add_argument("--no-classes", action="store_true")
    p.add_argument("--blowup-cs", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify-thm")
    common(p)
    p.add_argument("--geodesic", default="meridian")
    p.add_argument("--candidates", required=True)
    p.set_defaults(func=_cmd_verify_thm)

    return parser


def _apply_config(args):
    if getattr(args, "config", None):
        overrides = {}
        for line in Path(args.config).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            overrides[k.strip().replace("-", "_")] = v.strip()
        for k, v in overrides.items():
            if hasattr(args, k):
                cur = getattr(args, k)
                if isinstance(cur, bool):
                    setattr(args, k, v.lower() in ("1", "true", "yes"))
                elif isinstance(cur, int):
                    setattr(args, k, int(v))
                else:
                    setattr(args, k, v)
    if args.out is None:
        args.out = os.environ.get(OUT_ENV, "out")
    return args


def run(argv=None) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args)
        if args.command == "gs" and not args.enumerate and args.q is None:
            raise _UsageError("gs requires --q unless --enumerate is given")
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except GeometryError as exc:
        print(f"domain error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
