"""
Experiment dispatch and CSV reporting.

``execute`` turns a validated ``RunConfig`` into a ``RunReport``; ``run``
also writes the table as CSV and maps failures to exit codes:

- 0: success, CSV written
- 2: invalid configuration
- 3: numerical failure raised by a service
"""

import logging
import os
import tempfile
import time
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..models.domain import Domain, FiberQuadrature
from ..models.field import ScalarField, build_field, constant, cos1, cos2
from ..models.geometry import TangentVector
from ..schemas.run_config import RunConfig
from ..schemas.table import ConvergenceTable, RunReport
from ..utils.errors import ConfigError, FinslerError
from . import approximation, experiments, sobolev, sphere_bundle
from .config_parser import config_echo
from .metric_zoo import FinslerMetric, build_metric, validate_metric
from .spray_geodesics import DistanceProvider, integrate_geodesic


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class RunContext:
    """Objects shared by every experiment, built once from the configuration."""

    def __init__(self, config: RunConfig):
        self.config = config
        spec = config.metric
        try:
            self.metric: FinslerMetric = build_metric(
                spec.kind, spec.dimension, spec.b, spec.a, spec.epsilon, spec.lam, spec.scale
            )
            self.domain: Domain = config.domain.build(spec.dimension, config.quad.base_resolution)
            self.field: ScalarField = build_field(config.field.name, config.field.width, config.field.radius)
        except ValueError as exc:
            raise ConfigError([f"config: {exc}"]) from exc
        self.rule = FiberQuadrature.standard(spec.dimension, config.quad.fiber_nodes)
        distance = config.distance
        if distance.tier is None:
            self.provider = DistanceProvider.auto(self.metric, distance.grid_n)
        else:
            self.provider = DistanceProvider(distance.tier, distance.grid_n, distance.descent_iters)

    def quadrature_floor(self) -> float:
        """|I_h - I_{2h}| of the L^p(M) norm of the configured field."""
        p = self.config.sobolev.p
        coarse = self.domain.with_resolution(tuple(max(8, r // 2) for r in self.domain.resolution))
        fine = sobolev.lp_norm_M(self.metric, self.field, p, self.domain, self.rule)
        return abs(fine - sobolev.lp_norm_M(self.metric, self.field, p, coarse, self.rule))


def _norm(ctx: RunContext) -> Tuple[ConvergenceTable, Optional[float]]:
    k, p = ctx.config.sobolev.k, ctx.config.sobolev.p
    metric, u, domain, rule = ctx.metric, ctx.field, ctx.domain, ctx.rule
    lp_m = sobolev.lp_norm_M(metric, u, p, domain, rule)
    lp_sm = sobolev.lp_norm_SM(metric, u, p, domain, rule)
    columns, row = ["p", "lp_m", "lp_sm"], [p, lp_m, lp_sm]
    if k == 1:
        grad = sobolev.gradient_lp_norm_SM(metric, u, p, domain, rule)
        columns.append("grad_lp_sm")
        row.append(grad)
    columns.append("sobolev")
    row.append(sum(row[2:]))
    if metric.reversible and k == 1:
        ours, gs, ratio = experiments.compare_gs(metric, u, domain, rule)
        columns += ["gs", "ratio"]
        row += [gs, ratio]
    table = ConvergenceTable(
        columns=columns,
        rows=[row],
        metadata={"metric": metric.describe(), "field": u.name, "k": repr(k), "truncation": domain.describe()},
    )
    return table, ctx.quadrature_floor()


def _density(ctx: RunContext):
    params = ctx.config.density
    table = approximation.density_experiment(
        ctx.metric, ctx.field, ctx.config.sobolev.p, params.jmax, ctx.provider, ctx.rule, ctx.domain, params.center
    )
    return table, ctx.quadrature_floor()


def _mollify(ctx: RunContext):
    params = ctx.config.mollify
    table = approximation.mollification_convergence(
        ctx.field, ctx.config.sobolev.p, params.eps_list, ctx.domain, params.margin
    )
    return table, None


def _geodesic(ctx: RunContext):
    params = ctx.config.geodesic
    n = ctx.metric.dimension
    start = params.start if params.start is not None else [0.0] * n
    velocity = params.velocity if params.velocity is not None else [1.0] + [0.0] * (n - 1)
    if len(start) != n or len(velocity) != n:
        raise ConfigError([f"config: geodesic.start and geodesic.velocity need {n} entries"])
    curve = integrate_geodesic(ctx.metric, TangentVector.at(start, velocity), params.T, params.steps)
    speed = ctx.metric.F(curve.points, curve.velocities)
    columns = ["t"] + [f"x{a + 1}" for a in range(n)] + [f"y{a + 1}" for a in range(n)] + ["speed"]
    rows = np.column_stack([curve.t, curve.points, curve.velocities, speed]).tolist()
    table = ConvergenceTable(
        columns=columns,
        rows=rows,
        metadata={
            "metric": ctx.metric.describe(),
            "truncated": repr(curve.truncated),
            "speed_drift": repr(curve.notes["speed_drift"]),
        },
    )
    return table, None


def _fiber_decay(ctx: RunContext):
    params = ctx.config.fiber_decay
    model = experiments.ShrinkingFiberModel(params.resolution)
    table = experiments.fiber_decay_table(params.L_list, model)
    return table, None


def _sharpness(ctx: RunContext):
    params = ctx.config.sharpness
    table, _ = experiments.sharpness_experiment(params.p, params.widths, params.resolution)
    return table, None


_RHS: Dict[str, Callable[[], ScalarField]] = {"cos1": cos1, "cos2": cos2, "zero": lambda: constant(0.0)}


def _dirichlet(ctx: RunContext):
    params = ctx.config.dirichlet
    f = _RHS[params.rhs]()
    u, residual = experiments.dirichlet_solve_torus(f, params.N)
    weak = experiments.weak_form_residual(u, f, seed=ctx.config.seed)
    table = experiments.dirichlet_approximation(u, params.eps_list, params.N)
    table.metadata.update({"rhs": f.name, "residual": repr(residual), "weak_residual": repr(weak)})
    return table, residual


def _check(ctx: RunContext):
    samples = ctx.config.check.samples
    report = validate_metric(ctx.metric, samples, ctx.config.seed)
    R = sphere_bundle.stry_constant(ctx.metric, ctx.domain, samples, ctx.rule, ctx.config.seed)
    columns = ["samples", "min_F", "max_homogeneity_deviation", "max_asymmetry", "min_eigenvalue", "stry_constant", "valid"]
    row = [
        float(report.samples),
        report.min_F,
        report.max_homogeneity_deviation,
        report.max_asymmetry,
        report.min_eigenvalue,
        R,
        1.0 if report.valid and R > 0.0 else 0.0,
    ]
    return ConvergenceTable(columns=columns, rows=[row], metadata={"metric": report.metric}), None


EXPERIMENTS: Dict[str, Callable[[RunContext], Tuple[ConvergenceTable, Optional[float]]]] = {
    "norm": _norm,
    "density": _density,
    "mollify": _mollify,
    "geodesic": _geodesic,
    "fiber_decay": _fiber_decay,
    "sharpness": _sharpness,
    "dirichlet": _dirichlet,
    "check": _check,
}


def execute(config: RunConfig) -> RunReport:
    """
    Run the configured experiment without writing files.

    Raises:
        ConfigError: If the configuration cannot be turned into objects, or a
            service rejects an argument combination taken from it
        FinslerError: Propagated from the services
    """
    logger.info("starting %s run", config.experiment)
    started = time.perf_counter()
    ctx = RunContext(config)
    try:
        table, floor = EXPERIMENTS[config.experiment](ctx)
    except ValueError as exc:
        raise ConfigError([f"config: {exc}"]) from exc
    wall_time = time.perf_counter() - started
    logger.info("finished %s run in %.2fs", config.experiment, wall_time)
    return RunReport(
        experiment=config.experiment,
        config_echo=config_echo(config),
        wall_time=wall_time,
        quadrature_floor=floor,
        table=table,
    )


def format_csv(report: RunReport) -> str:
    """CSV text: '#' metadata lines, header, rows of repr floats, LF endings."""
    lines = [f"# experiment={report.experiment}"]
    lines += [f"# {key}={value}" for key, value in sorted(report.config_echo.items())]
    lines += [f"# table.{key}={value}" for key, value in sorted(report.table.metadata.items())]
    if report.quadrature_floor is not None:
        lines.append(f"# quadrature_floor={report.quadrature_floor!r}")
    lines.append(",".join(report.table.columns))
    lines += [",".join(repr(float(v)) for v in row) for row in report.table.rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(config: RunConfig, output: str = None) -> int:
    """
    Execute a run and write its CSV.

    Args:
        config: Validated configuration
        output: CSV path; defaults to config.output, then '<experiment>.csv'

    Returns:
        int: 0 on success, 2 on configuration errors, 3 on numerical failures
    """
    path = output or config.output or f"{config.experiment}.csv"
    try:
        report = execute(config)
    except ConfigError as exc:
        for message in exc.errors:
            logger.error("%s", message)
        return EXIT_CONFIG
    except FinslerError as exc:
        logger.error("%s run failed: %s: %s", config.experiment, type(exc).__name__, exc)
        return EXIT_NUMERIC
    write_atomic(path, format_csv(report))
    logger.info("wrote %s", path)
    return EXIT_OK
