"""Command-line harness: estimation sweeps, manipulation trials, metrics, plots."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .config import PRESETS, ConfigError, dump_scenario, load_scenario
from .control import TRAJECTORY_COLUMNS
from .evaluation import metric_v, summarize
from .io import (
    SchemaError,
    estimate_document,
    read_csv,
    read_estimate,
    write_csv,
    write_estimate,
)
from .sim import LOG_COLUMNS, ground_truth_cone

log = logging.getLogger("frictioncone")


class CliError(Exception):
    pass


def _common(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d, help="scenario seed (overrides the config)")
    p.add_argument("--config", default=d, help="YAML scenario file")
    p.add_argument("--out-dir", default=d, help="output directory (default: out)")
    p.add_argument("--print-config", action="store_true",
                   default=argparse.SUPPRESS if suppress else False,
                   help="print the effective scenario as YAML and exit")
    p.add_argument("--preset", choices=sorted(PRESETS), default=d,
                   help="built-in scenario: the 3x3 grid or the slope study")
    p.add_argument("-v", "--verbose", action="store_true",
                   default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frictioncone", description=__doc__)
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command")
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)

    p = sub.add_parser("estimate", parents=[common],
                       help="estimate cones and write estimate documents plus a metric CSV")
    p.add_argument("--length", type=float, help="run a single object length (m)")
    p.add_argument("--mu", type=float, help="run a single friction coefficient")
    p.add_argument("--slope", type=float, help="run a single surface slope (deg)")
    p.add_argument("--reps", type=int, help="repetitions per cell")
    p.add_argument("--jobs", type=int, help="parallel worker processes")

    p = sub.add_parser("sweep", parents=[common],
                       help="run every cell of the scenario and write metric and summary CSVs")
    p.add_argument("--reps", type=int, help="repetitions per cell")
    p.add_argument("--jobs", type=int, help="parallel worker processes")

    p = sub.add_parser("manipulate", parents=[common],
                       help="pivot then slide with an analytical or estimated cone")
    p.add_argument("--cone", default="analytical",
                   help="'analytical' or the path of an estimate document")
    p.add_argument("--trials", type=int, help="number of trials")

    p = sub.add_parser("metric", parents=[common],
                       help="overlap metric of an estimate against the ground truth or another cone")
    p.add_argument("estimate", help="estimate document")
    p.add_argument("reference", nargs="?",
                   help="second estimate document (default: the analytical cone of the run)")

    p = sub.add_parser("plot", parents=[common], help="render SVG figures from CSV outputs")
    p.add_argument("csv", nargs="+", help="metric or trajectory CSV files")
    p.add_argument("--name", help="output file stem")
    return parser


def _scenario(args):
    sc = load_scenario(args.config, args.preset or "grid")
    if args.seed is not None:
        sc.seed = args.seed
    for attr, field_ in (("reps", "repetitions"), ("jobs", "jobs")):
        v = getattr(args, attr, None)
        if v is not None:
            setattr(sc, field_, v)
    for attr, field_ in (("length", "lengths"), ("mu", "mus"), ("slope", "slopes_deg")):
        v = getattr(args, attr, None)
        if v is not None:
            setattr(sc, field_, [v])
    if getattr(args, "trials", None) is not None:
        sc.manipulation.trials = args.trials
    return sc.validate()


def _run_name(r: ex.EstimateRun) -> str:
    return f"L{r.length * 100:g}cm_mu{r.mu:g}_slope{r.slope_deg:g}_rep{r.rep:02d}"


def _estimate_doc(r: ex.EstimateRun, sc):
    cone = r.cone if r.cone is not None else None
    info = {"length": r.length, "mu": r.mu, "slope_deg": r.slope_deg, "rep": r.rep,
            "mass": sc.mass, "v": r.v, "v_final": r.v_final, "probes": r.state.probes,
            "error": r.error}
    if cone is None:
        from .wrench import PolyhedralCone

        cone = PolyhedralCone(r.state.P_bar)
    return estimate_document(cone, r.seed, sc, r.state.plane, r.state.W, info)


def cmd_estimate(args, sc, out: Path) -> int:
    runs = ex.run_sweep(sc)
    for r in runs:
        write_estimate(out / "estimates" / f"{_run_name(r)}.json", _estimate_doc(r, sc))
    write_csv(out / "metrics.csv", ex.METRIC_COLUMNS, [r.row() for r in runs])
    for r in runs:
        print(f"{_run_name(r)} v={r.v:.4f} probes={r.state.probes}")
    failed = [r for r in runs if r.cone is None]
    if failed:
        print(f"{len(failed)} run(s) could not be finalised or labelled", file=sys.stderr)
    return 0


def summary_rows(runs):
    cells = {}
    for r in runs:
        cells.setdefault((r.length, r.mu, r.slope_deg), []).append(r.v)
    return [(L, mu, s, *summarize(v).as_row()) for (L, mu, s), v in cells.items()]


def cmd_sweep(args, sc, out: Path) -> int:
    runs = ex.run_sweep(sc)
    write_csv(out / "metrics.csv", ex.METRIC_COLUMNS, [r.row() for r in runs])
    rows = summary_rows(runs)
    write_csv(out / "summary.csv", ex.SUMMARY_COLUMNS, rows)
    for row in rows:
        print("L={:g} mu={:g} slope={:g}: n={} min={:.3f} q1={:.3f} median={:.3f} "
              "q3={:.3f} max={:.3f}".format(*row))
    return 0


def cmd_manipulate(args, sc, out: Path) -> int:
    if args.cone == "analytical":
        cone, name = None, "analytical"
    else:
        path = Path(args.cone)
        if not path.is_file():
            raise CliError(f"estimate file not found: {path}")
        cone, doc = read_estimate(path)
        if not cone.face_labels:
            raise CliError(f"{path}: estimate has no face labels")
        name = path.stem
        info = doc.get("info") or {}
        m = sc.manipulation
        sc.manipulation = replace(m, length=info.get("length", m.length), mu=info.get("mu", m.mu),
                                  slope_deg=info.get("slope_deg", m.slope_deg))
    phases, failures = [], 0
    for k in range(sc.manipulation.trials):
        tr = ex.manipulation_trial(cone, sc, k, name)
        write_csv(out / f"trajectory_{name}_{k}.csv", LOG_COLUMNS + TRAJECTORY_COLUMNS, tr.rows)
        phases.extend(ex.phase_rows(tr))
        for r in tr.results:
            print(f"{name} trial {k} {r.task.kind}: success={r.success} steps={r.steps} "
                  f"error={r.final_error:.4g} drift={r.drift:.3g} "
                  f"translation={r.translation:.4f} rotation={math.degrees(r.rotation):.2f}deg")
        if not tr.success:
            failures += 1
            print(f"{name} trial {k} failed: {tr.failure}", file=sys.stderr)
    write_csv(out / f"phases_{name}.csv", ex.PHASE_COLUMNS, phases)
    return 1 if failures else 0


def cmd_metric(args, sc, out: Path) -> int:
    for p in filter(None, (args.estimate, args.reference)):
        if not Path(p).is_file():
            raise CliError(f"estimate file not found: {p}")
    est, doc = read_estimate(args.estimate)
    if args.reference:
        ref, _ = read_estimate(args.reference)
    else:
        info = doc.get("info") or {}
        if not {"length", "mu", "slope_deg"} <= set(info):
            raise CliError(f"{args.estimate}: no run information to rebuild the ground truth")
        sc.mass = info.get("mass", sc.mass)
        system = ex.make_system(info["length"], info["mu"], info["slope_deg"], sc)
        ref = ground_truth_cone(system.state, system.surface, system.cfg)
    samples = doc.get("samples")
    v = metric_v(samples if samples is not None else est, ref, sc.metric)
    print(f"v={v!r}")
    return 0


def cmd_plot(args, sc, out: Path) -> int:
    from .plotting import detect_kind, plot_metric, plot_trajectories

    kinds = {}
    for f in args.csv:
        if not Path(f).is_file():
            raise CliError(f"CSV file not found: {f}")
        header, _ = read_csv(f)
        kinds.setdefault(detect_kind(header), []).append(f)
    stem = args.name
    for f in kinds.get("metric", []):
        header, rows = read_csv(f)
        path = out / f"{stem or Path(f).stem}_boxplot.svg"
        plot_metric(header, rows, path)
        print(path)
    if "trajectory" in kinds:
        path = out / f"{stem or 'trajectories'}.svg"
        plot_trajectories(kinds["trajectory"], path)
        print(path)
    return 0


COMMANDS = {
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
    "manipulate": cmd_manipulate,
    "metric": cmd_metric,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None and not args.print_config:
        parser.error("a command is required")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = _scenario(args)
        if args.print_config:
            sys.stdout.write(dump_scenario(sc))
            return 0
        out = Path(args.out_dir or "out")
        return COMMANDS[args.command](args, sc, out)
    except (CliError, ConfigError, SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
