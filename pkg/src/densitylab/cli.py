"""Command-line front end: list-surfaces, run, converge, export-mesh."""

import argparse
import sys

from . import catalog, harness, meshing


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="densitylab",
        description="Area-density checks on discretized minimal surfaces")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list-surfaces", help="print the surface catalog")

    p_run = sub.add_parser("run", help="execute the checks in a config")
    p_run.add_argument("config", nargs="?", default=None,
                       help="flat key=value config file")
    p_run.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override a config key")

    p_conv = sub.add_parser("converge", help="multi-level convergence table")
    p_conv.add_argument("config", nargs="?", default=None)
    p_conv.add_argument("--quantity", required=True,
                        choices=["mesh-area", "geodesic-error",
                                 "intrinsic-density", "residual"])
    p_conv.add_argument("--set", action="append", default=[], metavar="K=V")

    p_exp = sub.add_parser("export-mesh", help="triangulate and write a mesh")
    p_exp.add_argument("surface")
    p_exp.add_argument("target_h", type=float)
    p_exp.add_argument("path")
    p_exp.add_argument("--grading", default="uniform",
                       choices=["uniform", "graded"])
    p_exp.add_argument("--base", default=None,
                       help="base point 'u0,u1' (required for graded)")

    args = ap.parse_args(argv)

    if args.command == "list-surfaces":
        print(harness.list_surfaces())
        return 0

    if args.command == "run":
        cfg = harness.parse_config(args.config, overrides=args.set)
        report = harness.run(cfg)
        for f in report.findings:
            print(f"[{f.status:4s}] L{f.level} {f.check}"
                  + (f": {f.message}" if f.message else ""))
        print(f"report written to {cfg.out_dir}/report.json")
        return 1 if report.failed else 0

    if args.command == "converge":
        cfg = harness.parse_config(args.config, overrides=args.set)
        table = harness.convergence_study(cfg, args.quantity)
        print(f"# quantity: {table['quantity']}")
        print(f"{'level':>5s} {'h':>12s} {'value':>18s} {'error':>12s} "
              f"{'order':>7s}")
        for row in table["rows"]:
            err = "" if row["error"] is None else f"{row['error']:.4e}"
            order = "" if row["order"] is None else f"{row['order']:.3f}"
            print(f"{row['level']:>5d} {row['h']:>12.6f} "
                  f"{row['value']:>18.12f} {err:>12s} {order:>7s}")
        if table["extrapolated"] is not None:
            print(f"# Richardson-extrapolated: {table['extrapolated']:.12f}")
        return 0

    if args.command == "export-mesh":
        chart = catalog.get_chart(args.surface)
        base = None
        if args.base is not None:
            base = tuple(float(p) for p in args.base.split(","))
        mesh = meshing.triangulate(chart, args.target_h,
                                   grading=args.grading, base_u=base)
        meshing.export_mesh(mesh, args.path)
        print(f"wrote {mesh.n_vertices} vertices / {mesh.n_triangles} "
              f"triangles to {args.path}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
