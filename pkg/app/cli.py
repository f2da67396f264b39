"""
Command-line surface.

Every subcommand builds a run configuration from the optional ``--config``
file plus its own options (options win) and hands it to the reporting
service. ``serve`` starts the HTTP API instead.
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

from .config import settings
from .services import reporting
from .services.config_parser import parse_config, parse_value
from .utils.errors import ConfigError


logger = logging.getLogger(__name__)

# option dest -> config key, per subcommand
COMMON_OPTIONS = {
    "metric": "metric.kind",
    "dimension": "metric.dimension",
    "b": "metric.b",
    "epsilon": "metric.epsilon",
    "field": "field.name",
    "width": "field.width",
    "p": "sobolev.p",
    "k": "sobolev.k",
    "domain": "domain.kind",
    "bounds": "domain.bounds",
    "radius": "domain.radius",
    "resolution": "quad.base_resolution",
    "fiber_nodes": "quad.fiber_nodes",
    "tier": "distance.tier",
    "grid_n": "distance.grid_n",
}

LIST_KEYS = {
    "metric.b", "density.center", "mollify.eps_list", "geodesic.start", "geodesic.velocity",
    "fiber_decay.L_list", "sharpness.widths", "dirichlet.eps_list",
}

COMMAND_OPTIONS = {
    "norm": {},
    "density": {"jmax": "density.jmax", "center": "density.center"},
    "mollify": {"eps_list": "mollify.eps_list"},
    "geodesic": {"start": "geodesic.start", "velocity": "geodesic.velocity", "T": "geodesic.T", "steps": "geodesic.steps"},
    "fiber_decay": {"L": "fiber_decay.L_list"},
    "sharpness": {"p": "sharpness.p", "widths": "sharpness.widths"},
    "dirichlet": {"n": "dirichlet.N", "f": "dirichlet.rhs", "eps_list": "dirichlet.eps_list"},
    "check": {"samples": "check.samples"},
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--threads", type=int, help="worker threads for quadrature loops")
    group = parser.add_argument_group("metric and quadrature")
    group.add_argument("--metric", help="euclidean, conformal, randers, funk or quartic")
    group.add_argument("--dimension")
    group.add_argument("--b", help="Randers covector, e.g. 0.5,0")
    group.add_argument("--epsilon")
    group.add_argument("--field", help="catalog field name")
    group.add_argument("--width", help="ramp width")
    group.add_argument("--k")
    group.add_argument("--domain", help="box, torus, ball or half_ball")
    group.add_argument("--bounds", help="JSON list of [lo, hi] per axis")
    group.add_argument("--radius")
    group.add_argument("--resolution", help="base grid cells per axis")
    group.add_argument("--fiber-nodes", dest="fiber_nodes")
    group.add_argument("--tier", help="closed_form, grid_dijkstra or curve_descent")
    group.add_argument("--grid-n", dest="grid_n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finsler", description=f"{settings.PROJECT_NAME} command line")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    commands = parser.add_subparsers(dest="command", required=True)

    norm = commands.add_parser("norm", help="L^p and H_1^p norms of a field")
    _add_common(norm)
    norm.add_argument("--p")

    density = commands.add_parser("density", help="truncation density experiment")
    _add_common(density)
    density.add_argument("--p")
    density.add_argument("--jmax")
    density.add_argument("--center")

    mollify = commands.add_parser("mollify", help="mollification convergence")
    _add_common(mollify)
    mollify.add_argument("--p")
    mollify.add_argument("--eps-list", dest="eps_list")

    geodesic = commands.add_parser("geodesic", help="integrate one geodesic")
    _add_common(geodesic)
    geodesic.add_argument("--start")
    geodesic.add_argument("--velocity")
    geodesic.add_argument("--T", dest="T")
    geodesic.add_argument("--steps")

    counter = commands.add_parser("counterexample", help="counterexamples")
    cases = counter.add_subparsers(dest="case", required=True)
    decay = cases.add_parser("fiber-decay", help="shrinking-fiber integrals")
    _add_common(decay)
    decay.add_argument("--L", dest="L", help="strip half-widths, e.g. 1,2,5,10")
    sharp = cases.add_parser("sharpness", help="ramp approximation of a step")
    _add_common(sharp)
    sharp.add_argument("--p")
    sharp.add_argument("--widths")

    dirichlet = commands.add_parser("dirichlet", help="torus Dirichlet problem")
    _add_common(dirichlet)
    dirichlet.add_argument("--n", dest="n")
    dirichlet.add_argument("--f", dest="f", help="cos1, cos2 or zero")
    dirichlet.add_argument("--eps-list", dest="eps_list")

    check = commands.add_parser("check", help="metric validity suite")
    _add_common(check)
    check.add_argument("--samples")

    serve = commands.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--reload", action="store_true")
    return parser


def _experiment(args: argparse.Namespace) -> str:
    if args.command == "counterexample":
        return args.case.replace("-", "_")
    return args.command


def _overrides(args: argparse.Namespace, experiment: str) -> Dict[str, tuple]:
    mapping = dict(COMMON_OPTIONS)
    mapping.update(COMMAND_OPTIONS[experiment])
    overrides = {"experiment": (experiment, "command")}
    for dest, key in mapping.items():
        value = getattr(args, dest, None)
        if value is not None:
            value = parse_value(value)
            if key in LIST_KEYS and not isinstance(value, list):
                value = [value]
            overrides[key] = (value, f"option --{dest.replace('_', '-')}")
    return overrides


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, reload=args.reload)
    return reporting.EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point.

    Returns:
        int: Process exit code (0 success, 2 configuration error, 3 numerical failure)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "serve":
        return _serve(args)
    if args.threads is not None:
        if args.threads < 1:
            logger.error("--threads must be at least 1")
            return reporting.EXIT_CONFIG
        settings.THREADS = args.threads

    experiment = _experiment(args)
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            logger.error("cannot read config %s: %s", args.config, exc)
            return reporting.EXIT_CONFIG
    try:
        config = parse_config(text, _overrides(args, experiment))
    except ConfigError as exc:
        for message in exc.errors:
            logger.error("%s", message)
        return reporting.EXIT_CONFIG
    return reporting.run(config, args.out)


if __name__ == "__main__":
    sys.exit(main())
