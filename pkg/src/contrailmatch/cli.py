"""Command-line entry point: ``contrailmatch {run,synth,eval,overlay}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from contrailmatch import io
from contrailmatch.errors import ContrailMatchError, LoadError
from contrailmatch.evaluation import EVALUATION_POINTS, evaluate
from contrailmatch.pipeline import CONFIG_ENV, load_config, resolved_config_json, run_pipeline, with_overrides
from contrailmatch.synthetic import ScenarioSpec, generate_scenario, write_scenario

logger = logging.getLogger("contrailmatch")

EXIT_OK = 0
EXIT_LOAD = 3
EXIT_RUNTIME = 4


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help=f"YAML/JSON run configuration (default: ${CONFIG_ENV})")
    p.add_argument("--annotations", type=Path)
    p.add_argument("--flights", type=Path)
    p.add_argument("--met", type=Path)
    p.add_argument("--camera", type=Path)
    p.add_argument("--out", type=Path, help="output directory")
    g = p.add_argument_group("matching")
    g.add_argument("--dt-before", type=float)
    g.add_argument("--dt-after", type=float)
    g.add_argument("--tau-d", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--tau-p", type=float)
    g.add_argument("--d-cap", type=float)
    g.add_argument("--assignment", choices=("greedy", "hungarian"))
    g.add_argument("--normalization", choices=("row", "global"))
    a = p.add_argument_group("advection")
    a.add_argument("--width-growth", type=float, help="plume broadening rate in m/s")
    p.add_argument("--points", choices=("first", "last", "both"), help="evaluation points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contrailmatch", description="Attribute ground-camera contrails to the flights that formed them.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="attribute contrails and write records, report and overlays")
    _add_inputs(run)
    run.add_argument("--overlays", action="store_true", help="also write one SVG per frame")

    ov = sub.add_parser("overlay", help="run the matcher and write SVG overlays")
    _add_inputs(ov)

    syn = sub.add_parser("synth", help="generate a synthetic scenario")
    syn.add_argument("--out", type=Path, required=True)
    syn.add_argument("--seed", type=int, default=42)
    syn.add_argument("--flights", type=int, default=5)
    syn.add_argument("--sigma", type=float, default=0.0, help="annotation vertex noise in px")
    syn.add_argument("--old-fraction", type=float, default=0.0)
    syn.add_argument("--wind-model", choices=("uniform", "shear"), default="uniform")
    syn.add_argument("--wind-shear", type=float, default=0.0, help="du/dlat in m/s per degree")
    syn.add_argument("--wind-mismatch", type=float, default=0.0, help="truth minus candidate wind in m/s")

    ev = sub.add_parser("eval", help="re-score an existing records file")
    ev.add_argument("--annotations", type=Path, required=True)
    ev.add_argument("--records", type=Path, required=True)
    ev.add_argument("--out", type=Path, help="directory for report files (stdout table only when omitted)")
    ev.add_argument("--points", choices=("first", "last", "both"), default="both")
    return parser


def _points(arg) -> tuple[str, ...] | None:
    if arg is None:
        return None
    return EVALUATION_POINTS if arg == "both" else (arg,)


def _run(args, overlays: bool) -> int:
    cfg = load_config(args.config)
    cfg = with_overrides(
        cfg,
        annotations=args.annotations,
        flights=args.flights,
        met=args.met,
        camera=args.camera,
        out=args.out,
        dt_before=args.dt_before,
        dt_after=args.dt_after,
        tau_d=args.tau_d,
        alpha=args.alpha,
        beta=args.beta,
        tau_p=args.tau_p,
        d_cap=args.d_cap,
        assignment=args.assignment,
        normalization=args.normalization,
        width_growth=args.width_growth,
        evaluation_points=_points(args.points),
    )
    if overlays:
        cfg.overlays = True
    res = run_pipeline(cfg)
    if cfg.out is not None:
        (Path(cfg.out) / "config.resolved.json").write_text(resolved_config_json(cfg))
    for r in res.reports.values():
        print(r.to_table())
    if res.overlay_paths:
        print(f"wrote {len(res.overlay_paths)} overlay(s) to {res.overlay_paths[0].parent}")
    return EXIT_OK


def _synth(args) -> int:
    try:
        spec = ScenarioSpec(
            seed=args.seed,
            n_flights=args.flights,
            sigma_px=args.sigma,
            old_fraction=args.old_fraction,
            wind_model=args.wind_model,
            wind_shear=args.wind_shear,
            wind_mismatch=args.wind_mismatch,
        )
    except ValueError as exc:
        raise LoadError(str(exc)) from exc
    scn = generate_scenario(spec)
    paths = write_scenario(scn, args.out)
    rep = scn.report
    print(f"scenario: {rep['n_new']} new, {rep['n_old']} old contrails over {rep['n_frames']} frames")
    print(f"phantoms isolated from candidates: {rep['phantoms_isolated']}")
    print(f"config: {paths['config']}")
    return EXIT_OK


def _eval(args) -> int:
    ann = io.load_annotations(args.annotations)
    recs = io.load_records(args.records)
    reports = evaluate(ann.contrails.values(), recs, _points(args.points))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        io.write_report(args.out, reports)
    for r in reports.values():
        print(r.to_table())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(args, overlays=args.overlays)
        if args.command == "overlay":
            return _run(args, overlays=True)
        if args.command == "synth":
            return _synth(args)
        return _eval(args)
    except LoadError as exc:
        logger.error("load error: %s", exc)
        return EXIT_LOAD
    except ContrailMatchError as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
