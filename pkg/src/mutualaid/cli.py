"""Command-line entry point.

Subcommands: ontology-validate, match, registry-replay, sim-run, sweep.
Machine output (JSON lines, CSV, report files) goes to stdout or --out;
human-readable summaries go to stderr. Exit codes: 0 ok, 1 I/O or parse
error, 2 validation error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .matching import ServiceAdvertisement, ServiceRequest, rank_matches
from .registry import ScenarioError, replay_scenario
from .simulation import InvalidParamsError, SimParams, run
from .sweep import SweepSpec, rows_to_csv, run_sweep
from .taxonomy import (
    TaxonomyError,
    TaxonomyParseError,
    TaxonomyValidationError,
    load_taxonomy_file,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def cmd_ontology_validate(args: argparse.Namespace) -> int:
    try:
        taxonomy = load_taxonomy_file(args.taxonomy)
    except (OSError, TaxonomyParseError) as exc:
        return _fail(EXIT_IO, str(exc))
    except TaxonomyValidationError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    print(f"ok: {len(taxonomy)} concepts, {len(taxonomy.edges)} edges", file=sys.stderr)
    return EXIT_OK


def cmd_match(args: argparse.Namespace) -> int:
    try:
        taxonomy = load_taxonomy_file(args.taxonomy)
        request = ServiceRequest.from_dict(_load_json(args.request))
        adverts = [ServiceAdvertisement.from_dict(d) for d in _load_json(args.adverts)]
    except (OSError, json.JSONDecodeError, TaxonomyParseError, KeyError) as exc:
        return _fail(EXIT_IO, str(exc))
    except (TaxonomyValidationError, ValueError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    try:
        ranked = rank_matches(taxonomy, request, adverts, args.now)
    except TaxonomyError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    for adv, verdict in ranked:
        line = {"advertisement": adv.id} | verdict.to_dict()
        print(json.dumps(line, sort_keys=True, separators=(",", ":")))
    print(f"{len(ranked)} of {len(adverts)} advertisements matched", file=sys.stderr)
    return EXIT_OK


def cmd_registry_replay(args: argparse.Namespace) -> int:
    try:
        taxonomy = load_taxonomy_file(args.taxonomy)
        commands = _load_json(args.scenario)
    except (OSError, json.JSONDecodeError, TaxonomyParseError) as exc:
        return _fail(EXIT_IO, str(exc))
    except TaxonomyValidationError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    if not isinstance(commands, list):
        return _fail(EXIT_VALIDATION, "scenario file must be a JSON array of commands")
    try:
        events = replay_scenario(taxonomy, commands)
    except ScenarioError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    for event in events:
        print(event.to_json())
    print(f"replayed {len(commands)} commands, {len(events)} events", file=sys.stderr)
    return EXIT_OK


def _apply_overrides(params: SimParams, args: argparse.Namespace) -> SimParams:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.steps is not None:
        changes["max_steps"] = args.steps
    if args.radius is not None:
        changes["radius"] = args.radius
    if args.torus:
        changes["torus"] = True
    return params.replace(**changes) if changes else params


def cmd_sim_run(args: argparse.Namespace) -> int:
    try:
        params = SimParams.from_dict(_load_json(args.params))
        params = _apply_overrides(params, args)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return _fail(EXIT_IO, str(exc))
    except InvalidParamsError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    report = run(params)
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "report.json")
    csv_path = os.path.join(args.out, "steps.csv")
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(report.to_json() + "\n")
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write(report.series_csv())
    if args.plot:
        from .plots import plot_run_series
        plot_run_series(report, os.path.join(args.out, "report.png"))
    sat = "n/a" if report.satisfaction_rate is None else f"{report.satisfaction_rate:.4f}"
    lat = "n/a" if report.mean_latency is None else f"{report.mean_latency:.2f}"
    print(
        f"requests={report.total_requests} served={report.served} "
        f"failed={report.failed} open={report.open} "
        f"satisfaction={sat} mean_latency={lat} -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        spec = SweepSpec.from_dict(_load_json(args.spec))
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed_base=args.seed)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return _fail(EXIT_IO, str(exc))
    except InvalidParamsError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    rows = run_sweep(spec)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write(rows_to_csv(rows))
    if args.plot:
        from .plots import plot_sweep_rows
        plot_sweep_rows(rows, spec.axis, os.path.join(args.out, "sweep.png"))
    print(f"{len(rows)} axis values x {spec.replicates} replicates -> {csv_path}",
          file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutualaid",
        description="Taxonomy matchmaking, service coordination and community simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ontology-validate", help="validate a taxonomy file")
    p.add_argument("taxonomy")
    p.set_defaults(func=cmd_ontology_validate)

    p = sub.add_parser("match", help="match one request against an advertisement list")
    p.add_argument("taxonomy")
    p.add_argument("request")
    p.add_argument("adverts")
    p.add_argument("--now", type=int, default=0, help="current time (integer units)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("registry-replay", help="replay a scenario and print its event log")
    p.add_argument("scenario")
    p.add_argument("--taxonomy", default="ontology/aal.json")
    p.set_defaults(func=cmd_registry_replay)

    p = sub.add_parser("sim-run", help="run one simulation from a params file")
    p.add_argument("params")
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--torus", action="store_true")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_sim_run)

    p = sub.add_parser("sweep", help="run a replicated parameter sweep")
    p.add_argument("spec")
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, help="override seed_base")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
