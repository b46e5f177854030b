"""Command-line entry point: ``cluster``, ``sweep`` and ``prob`` subcommands.

Exit codes: 0 success, 1 usage or config error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .clustering import optimize_cluster_count
from .connectivity import (AnalyticParams, noncluster_connection_probability,
                           system_connection_probability, vehicle_connection_probability)
from .experiments import (DEFAULT_DENSITY, DEFAULT_LENGTHS, DEFAULT_RADII, DEFAULT_SEEDS,
                          DEFAULT_TRIALS, SweepSpec, emit_table, sweep_connection_probability,
                          sweep_optimized_k)
from .rng import derive_seed
from .scenario import ConfigError, RoadScenario, load_scenario, reference_road, place_vehicles

log = logging.getLogger("vanetclust")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    master_seed: int
    tool_version: str
    output_paths: list[str] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError(f"values must be positive: {text!r}")
    return values


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _count(minimum: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}: {text!r}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vanetclust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("cluster", help="cluster every street of a scenario")
    c.add_argument("--config", required=True, type=Path)
    c.add_argument("--seed", type=_count(0), default=None,
                   help="master seed (overrides the config's seed)")
    c.add_argument("--out", type=Path, default=None,
                   help="directory for one JSON file per street; stdout if omitted")

    s = sub.add_parser("sweep", help="cluster-count and connection-probability sweeps")
    s.add_argument("--config", type=Path, default=None,
                   help="road for the probability sweep (default: the 5 km five-street road)")
    s.add_argument("--seed", type=_count(0), default=0)
    s.add_argument("--seeds", type=_count(1), default=DEFAULT_SEEDS, help="replicate placements")
    s.add_argument("--trials", type=_count(1), default=DEFAULT_TRIALS)
    s.add_argument("--radii", type=_float_list, default=list(DEFAULT_RADII))
    s.add_argument("--lengths", type=_float_list, default=list(DEFAULT_LENGTHS))
    s.add_argument("--density", type=_positive_float, default=None)
    s.add_argument("--out", type=Path, default=Path("results"))
    s.add_argument("--threads", type=_count(1), default=1)
    s.add_argument("--json", action="store_true", help="also write JSON mirrors of the tables")

    p = sub.add_parser("prob", help="evaluate the closed-form probabilities")
    p.add_argument("--density", type=_positive_float, required=True)
    p.add_argument("--radius", "-R", type=_positive_float, required=True)
    p.add_argument("--n", type=_count(1), required=True)
    p.add_argument("--k", type=_count(0), required=True)
    p.add_argument("--m", type=_count(0), required=True)
    return parser


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_cluster(args) -> int:
    scenario = load_scenario(args.config)
    seed = args.seed if args.seed is not None else (scenario.seed or 0)
    docs = []
    for idx, street in enumerate(scenario.streets):
        vs = place_vehicles(street, scenario.density, derive_seed(seed, "cluster", idx),
                            scenario.coverage_radius)
        if len(vs) == 0:
            doc = {"street_id": street.id, "n": 0, "k": 0, "m": 0, "clusters": [], "singleton_ids": []}
        else:
            doc = optimize_cluster_count(vs).to_dict()
        doc["length_m"] = street.length
        doc["positions_m"] = [v.position for v in vs.vehicles]
        docs.append(doc)

    if args.out is None:
        for doc in docs:
            print(json.dumps(doc, sort_keys=True))
        return EXIT_OK
    outputs = []
    for doc in docs:
        name = f"cluster_{doc['street_id']}.json"
        _write(args.out / name, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        outputs.append(name)
    manifest = RunManifest("cluster", str(args.config), seed, __version__, outputs,
                           {"density_per_m": scenario.density,
                            "coverage_radius_m": scenario.coverage_radius,
                            "streets": [{"id": s.id, "length_m": s.length} for s in scenario.streets]})
    manifest.write(args.out / "manifest.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config is not None:
        scenario = load_scenario(args.config)
        if args.density is not None:
            scenario = RoadScenario(scenario.streets, args.density, scenario.coverage_radius, scenario.seed)
    else:
        scenario = reference_road(args.density or DEFAULT_DENSITY)
    density = scenario.density
    seeds = tuple(range(args.seeds))

    spec = SweepSpec(tuple(args.lengths), tuple(args.radii), density, seeds, args.trials, args.seed)
    log.info("cluster-count sweep: %d lengths x %d radii", len(spec.lengths), len(spec.radii))
    fig4 = sweep_optimized_k(spec, threads=args.threads)
    log.info("connection-probability sweep over %d streets", len(scenario.streets))
    fig5 = sweep_connection_probability(scenario, spec.radii, seeds, args.trials, args.seed,
                                        threads=args.threads)

    args.out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, rows in (("fig4_cluster_count.csv", fig4), ("fig5_connection_probability.csv", fig5)):
        emit_table(rows, args.out / name, json_mirror=args.json)
        outputs.append(name)
        if args.json:
            outputs.append(Path(name).with_suffix(".json").name)
    params = {
        "lengths_m": list(spec.lengths),
        "radii_m": list(spec.radii),
        "density_per_m": density,
        "seeds": args.seeds,
        "trials": args.trials,
        "streets": [{"id": s.id, "length_m": s.length} for s in scenario.streets],
    }
    config = str(args.config) if args.config is not None else None
    RunManifest("sweep", config, args.seed, __version__, outputs, params).write(args.out / "manifest.json")
    return EXIT_OK


def cmd_prob(args) -> int:
    if args.k > args.n:
        raise UsageError(f"k ({args.k}) cannot exceed n ({args.n})")
    params = AnalyticParams(args.density, args.radius, args.n, args.k, args.m)
    result = {
        "p_vehicle": vehicle_connection_probability(args.density, args.radius),
        "p_clustered": system_connection_probability(params),
        "p_noncluster": noncluster_connection_probability(args.density, args.radius, args.n),
    }
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


COMMANDS = {"cluster": cmd_cluster, "sweep": cmd_sweep, "prob": cmd_prob}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"vanetclust {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"vanetclust {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
