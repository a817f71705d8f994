"""Command-line front end.

Subcommands:
  run <scenario>        execute a scenario file, write artifacts
  threshold <scenario>  print the critical-load summary for a geometry
  plotdata <run-dir>    emit gnuplot-ready .dat tables from a finished run
  report <run-dir>      render matplotlib figures from a finished run

Exit codes: 0 success, 2 parse/parameter error, 3 solver error,
4 consistency error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (AdmissibilityError, ConsistencyError, GeofracError,
                     GeometryError, ParameterError, ScenarioError, SolverError)

EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_CONSISTENCY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geofrac",
        description="Antiplane brittle fracture: Mumford-Shah minimization, "
                    "geodesic crack prediction, duality certificates, damage descent.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", help="path to a key = value scenario file")
    run.add_argument("--figures", action="store_true",
                     help="also render figures after the run")

    thr = sub.add_parser("threshold", help="print critical-load thresholds")
    thr.add_argument("scenario", help="scenario file (kind may be anything; "
                                      "geometry and G are used)")

    plot = sub.add_parser("plotdata", help="emit plot-ready .dat tables")
    plot.add_argument("run_dir", help="directory written by a previous run")

    rep = sub.add_parser("report", help="render figures from a run directory")
    rep.add_argument("run_dir", help="directory written by a previous run")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ParameterError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConsistencyError, AdmissibilityError) as exc:
        print(f"consistency error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except GeofracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "run":
        from .runner import run_scenario
        from .scenario import parse_scenario
        scenario = parse_scenario(args.scenario)
        if args.figures:
            scenario.figures = True
        manifest = run_scenario(scenario, scenario_path=args.scenario)
        print(f"run complete: kind={manifest['kind']} artifacts={len(manifest['artifacts'])}")
        return 0

    if args.command == "threshold":
        from .runner import build_geometry
        from .scenario import parse_scenario
        from .thresholds import critical_thresholds
        scenario = parse_scenario(args.scenario)
        if scenario.G is None:
            raise ScenarioError("key 'G': is required for the threshold command", key="G")
        mesh = build_geometry(scenario)
        report = critical_thresholds(mesh, scenario.G)
        print(f"m               = {report.m:.6g}")
        print(f"M               = {report.M:.6g}")
        print(f"exact_threshold = {report.exact_threshold:.6g}")
        print(f"geodesic_length = {report.geodesic_length:.6g}")
        print(f"note: {report.note}")
        return 0

    if args.command == "plotdata":
        from .runner import emit_plot_data
        written = emit_plot_data(args.run_dir)
        for path in written:
            print(path)
        return 0

    from .plots import render_run_figures
    written = render_run_figures(args.run_dir)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
