"""``dlp-kit`` command line entry point.

Exit status: 0 on success, 1 on a domain failure (inconsistent oracle,
localization failure, underivable query), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import dlp, intervals, mbf, models, reasoner, shapes, viz
from .lattice import hansel_chains
from .trace import Trace


class DomainFailure(Exception):
    pass


def _config(args) -> dlp.Config:
    cfg = dlp.Config.load(args.config) if args.config else dlp.Config()
    over = {k: getattr(args, k, None) for k in ("threshold", "max_depth", "refine_factor", "window",
                                                "kappa", "shrink_rho", "seed")}
    return cfg.override(**over)


def _out(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# -- mbf -----------------------------------------------------------------------------

def cmd_mbf_restore(args) -> int:
    oracle = mbf.make_oracle(args.oracle, args.n)
    try:
        table, stats, trace = mbf.restore(args.n, oracle)
    except mbf.RestorationAborted as exc:
        if args.trace:
            exc.trace.write(args.trace)
        raise DomainFailure(f"restoration aborted: {exc}") from None
    except mbf.OracleInconsistency as exc:
        raise DomainFailure(str(exc)) from None
    if args.trace:
        trace.write(args.trace)
    units = mbf.lower_units(table)
    print(f"queries: {stats.queries_asked}")
    print(f"bound: {stats.bound}")
    print(f"per-chain: {' '.join(map(str, stats.per_chain_queries))}")
    print("lower units: " + (" ".join(sorted(str(u) for u in units)) or "(none)"))
    print(f"dnf: {mbf.to_dnf(units, args.n)}")
    return 0


def cmd_mbf_chains(args) -> int:
    sys.stdout.write(hansel_chains(args.n).to_text())
    return 0


# -- models ----------------------------------------------------------------------------

def cmd_models_order(args) -> int:
    variables = [v.strip() for v in args.vars.split(",") if v.strip()]
    a = models.parse_poly(args.a, variables)
    b = models.parse_poly(args.b, variables)
    for name, m in (("A", a), ("B", b)):
        print(f"{name}: {m}")
        desc = models.measures(m).describe(variables)
        print(f"   NUC={desc['NUC']} HP={desc['HP']} HPV={{{', '.join(desc['HPV'])}}} SP={desc['SP']}")
    print(f"Mu (uncertainty): A {models.order_mu(a, b).value} B")
    print(f"Mg (generality):  A {models.order_mg(a, b).value} B")
    print(f"Ms (simplicity):  A {models.order_ms(a, b).value} B")
    return 0


# -- shapes ------------------------------------------------------------------------------

def cmd_shapes_gen(args) -> int:
    spec = shapes.SceneSpec(args.n, args.m, tuple(shapes.parse_shape(s) for s in args.shape or ()),
                            args.contrast, args.seed)
    _out(shapes.gen_scene(spec).to_jsonl(), args.out)
    return 0


def _format_detection(d: shapes.Detection) -> str:
    return f"{d.shape}  llr={d.score:.3f}  d_in={d.d_in:.5f}  d_out={d.d_out:.5f}"


def cmd_shapes_detect(args) -> int:
    cloud = shapes.PointCloud.read(getattr(args, "in"))
    if args.algo == "brute":
        dets, counters = shapes.brute_force_search(cloud, args.n, args.kind, args.t,
                                                   allow_huge=args.yes_huge)
        if args.trace:
            t = Trace()
            for d in dets:
                t.append(verdict=1, model=str(d.shape), score=d.score)
            t.counters.update(membership_tests=counters.membership_tests, ddt_calls=counters.ddt_calls)
            t.write(args.trace)
    else:
        res = shapes.dlp_search(cloud, args.n, args.kind, _config(args), args.t)
        dets, counters = res.detections, res.counters
        if args.trace:
            res.trace.write(args.trace)
    print(f"detections: {len(dets)}")
    for d in dets:
        print("  " + _format_detection(d))
    print(f"membership tests: {counters.membership_tests}")
    print(f"ddt calls: {counters.ddt_calls}")
    if args.timing:
        print(f"wall time: {counters.wall_time:.3f} s")
    return 0


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    out = []
    for part in text.split(","):
        try:
            n, m = part.split(":")
            out.append((int(n), int(m)))
        except ValueError:
            raise ValueError(f"sizes must look like 10:1,100:10, got {part!r}") from None
    return out


def cmd_shapes_scaling(args) -> int:
    rows, slope = shapes.scaling_report(args.kind, _parse_sizes(args.sizes), args.seed or 0,
                                        allow_huge=args.yes_huge)
    head = f"{'n':>6} {'m':>6} {'predicted':>14} {'measured':>14}"
    print(head + ("  wall_s" if args.timing else ""))
    for r in rows:
        line = f"{r.n:>6} {r.m:>6} {r.predicted:>14.4g} {r.measured:>14.4g}"
        print(line + (f"  {r.wall_time:.3f}" if args.timing else ""))
    if slope is not None:
        print(f"log-log slope: {slope:.3f}")
    return 0


# -- intervals --------------------------------------------------------------------------

def cmd_interval_demo(args) -> int:
    cfg = _config(args)
    try:
        a, b = (float(v) for v in args.target.split(","))
    except ValueError:
        raise ValueError(f"target must look like 0,4, got {args.target!r}") from None
    samples = intervals.gen_interval_data(intervals.IntervalModel.from_bounds(a, b), args.m,
                                          args.contrast, cfg.seed)
    res = intervals.refine_loop(samples, cfg, resolution=args.resolution)
    if args.trace:
        res.trace.write(args.trace)
    print(f"{'step':>4} {'sigma':>9} {'mu':>7}  {'class':<18} verdict")
    for i, (step, k) in enumerate(zip(res.run.steps, res.kernels)):
        verdict = int(res.family.accepted(step.model, step.score, cfg))
        print(f"{i:>4} {k.sigma:>9.4f} {k.mu:>7.3f}  {str(step.model):<18} {verdict}")
    print(f"evaluations: {res.evaluations}")
    if res.failed:
        print("outcome: localization-failed")
        return 1
    est = res.estimate
    print(f"estimate: {est}  c={est.c:.3f} r={est.r:.3f}")
    return 0


# -- reasoner, viz ------------------------------------------------------------------------

def cmd_reason(args) -> int:
    kb = reasoner.parse_kb(Path(args.kb).read_text())
    goal = reasoner.parse_fact(args.query)
    d = reasoner.derive(kb, goal, args.depth)
    if d is None:
        print("not derivable")
        return 1
    print(d)
    print(f"length: {d.length}")
    return 0


def cmd_viz(args) -> int:
    trace = Trace.read(args.trace)
    _out(viz.render_trace(trace, args.format, args.arrange, args.highlight), args.out)
    return 0


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")

    p = argparse.ArgumentParser(prog="dlp-kit", description="Model search and restoration toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    pm = sub.add_parser("mbf", help="monotone Boolean function restoration")
    msub = pm.add_subparsers(dest="action", required=True)
    r = msub.add_parser("restore", parents=[common], help="restore a function from an oracle")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--oracle", required=True, help="table:<path> | expr:<formula> | interactive")
    r.add_argument("--trace", help="write the trace as JSON lines")
    r.set_defaults(func=cmd_mbf_restore)
    c = msub.add_parser("chains", parents=[common], help="print the Hansel chain cover")
    c.add_argument("--n", type=int, required=True)
    c.set_defaults(func=cmd_mbf_chains)

    pmod = sub.add_parser("models", help="polynomial model measures and orders")
    modsub = pmod.add_subparsers(dest="action", required=True)
    o = modsub.add_parser("order", parents=[common], help="compare two models")
    o.add_argument("--vars", required=True)
    o.add_argument("--a", required=True)
    o.add_argument("--b", required=True)
    o.set_defaults(func=cmd_models_order)

    ps = sub.add_parser("shapes", help="planted-shape scenes and detection")
    ssub = ps.add_subparsers(dest="action", required=True)
    g = ssub.add_parser("gen", parents=[common], help="generate a scene")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--shape", action="append", help="circle:cx,cy,r or lens:xa,xg,yb,h (repeatable)")
    g.add_argument("--contrast", type=float, default=3.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_shapes_gen)
    d = ssub.add_parser("detect", parents=[common], help="detect shapes in a point cloud")
    d.add_argument("--algo", choices=("brute", "dlp"), default="dlp")
    d.add_argument("--kind", choices=("circle", "lens"), default="circle")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--in", required=True)
    d.add_argument("--t", type=float, help="density difference threshold")
    d.add_argument("--trace")
    d.add_argument("--max-depth", type=int, dest="max_depth")
    d.add_argument("--window", type=int)
    d.add_argument("--kappa", type=float)
    d.add_argument("--seed", type=int)
    d.add_argument("--yes-huge", action="store_true", help="allow sweeps above the size cap")
    d.add_argument("--timing", action="store_true", help="also print wall-clock time")
    d.set_defaults(func=cmd_shapes_detect)
    sc = ssub.add_parser("scaling", parents=[common], help="brute-force operation counts")
    sc.add_argument("--kind", choices=("circle", "lens"), default="circle")
    sc.add_argument("--sizes", required=True, help="comma-separated n:m pairs")
    sc.add_argument("--seed", type=int)
    sc.add_argument("--yes-huge", action="store_true")
    sc.add_argument("--timing", action="store_true")
    sc.set_defaults(func=cmd_shapes_scaling)

    pi = sub.add_parser("interval", help="hidden interval localization")
    isub = pi.add_subparsers(dest="action", required=True)
    dm = isub.add_parser("demo", parents=[common], help="run the shrinking-kernel loop")
    dm.add_argument("--target", default="0,4")
    dm.add_argument("--m", type=int, default=500)
    dm.add_argument("--contrast", type=float, default=3.0)
    dm.add_argument("--resolution", type=float, default=0.1)
    dm.add_argument("--seed", type=int)
    dm.add_argument("--shrink-rho", type=float, dest="shrink_rho")
    dm.add_argument("--trace")
    dm.set_defaults(func=cmd_interval_demo)

    rs = sub.add_parser("reason", parents=[common], help="derive a fact from a knowledge base")
    rs.add_argument("--kb", required=True)
    rs.add_argument("--query", required=True)
    rs.add_argument("--depth", type=int, default=1)
    rs.set_defaults(func=cmd_reason)

    vz = sub.add_parser("viz", parents=[common], help="render a trace as a bar diagram")
    vz.add_argument("--trace", required=True)
    vz.add_argument("--format", choices=("svg", "text"), default="svg")
    vz.add_argument("--arrange", choices=("chronological", "pareto"), default="chronological")
    vz.add_argument("--highlight", help="column filter such as weight>=2")
    vz.add_argument("--out")
    vz.set_defaults(func=cmd_viz)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DomainFailure as exc:
        print(f"dlp-kit: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"dlp-kit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
