"""
Experiment commands behind the CLI.

Each ``cmd_*`` takes a validated experiment document plus the resolved
seed and worker count and returns a CommandResult: the rows to write, the
row model (which fixes the column order) and whether every check passed.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Type

from pydantic import BaseModel

from config.base import StrictModel
from crossings.cft_formulas import (
    carleson_crossing,
    crossing_prediction,
    crossing_probability,
    kleban_crossing,
    mean_crossing_number,
    strip_mean_crossings,
)
from crossings.config import (
    Check,
    CompareExperiment,
    EnumerateExperiment,
    FormulaExperiment,
    GeometryExperiment,
    GraphSource,
    McExperiment,
    SleExperiment,
)
from crossings.conformal_geometry import (
    half_plane_eta,
    rectangle_from_modulus,
    rectangle_geometry,
    triangle_geometry,
)
from crossings.errors import ConfigError, CrossingsError
from crossings.exact_enumeration import (
    SmallGraph,
    crossing_prob_exact,
    direct_event_sums,
    enumerate_partition_set,
    mean_crossing_exact,
    mean_crossing_exact_product,
)
from crossings.lattice_mc import (
    CrossingStats,
    Shape,
    SmirnovEstimate,
    build_lattice,
    run_experiment,
    run_graph_experiment,
    smirnov_h,
)
from crossings.sle_engine import SleEstimate, estimate_left_first
from crossings.statistics import wilson_interval

logger = logging.getLogger(__name__)

# exact-versus-exact comparisons without an explicit tolerance
EXACT_TOLERANCE = 1e-12


class FormulaRow(StrictModel):
    input: str
    value: float
    eta: Optional[float] = None
    p_cross: Optional[float] = None
    mean_nc: Optional[float] = None
    asymptotic: Optional[bool] = None
    kleban: Optional[float] = None
    carleson: Optional[float] = None
    error: Optional[str] = None


class GeometryRow(StrictModel):
    input: str
    value: float
    r: Optional[float] = None
    k: Optional[float] = None
    eta: Optional[float] = None
    x: Optional[float] = None
    error: Optional[str] = None


class EnumerationRow(StrictModel):
    p: float
    n_sites: int
    n_bonds: int
    p_cross: float
    mean_nc: float
    mean_nc_product: float
    direct_p_cross: float
    direct_mean_nc: float
    z_ff: list[float]
    z_aa: list[float]
    z_ab: list[float]
    z_af: list[float]
    z_fa: list[float]


class ComparisonRow(StrictModel):
    label: str
    geometry: str
    predicted: float
    measured: float
    ci_low: float
    ci_high: float
    abs_error: float
    within_ci: bool
    master_seed: int
    n: int


@dataclass
class CommandResult:
    rows: list[BaseModel]
    model: Type[BaseModel]
    ok: bool = True


@dataclass(frozen=True)
class RunContext:
    master_seed: int = 0
    workers: int = 1
    chunk_size: int = 4096


def _grid_rows(
    values: Sequence[float],
    label: str,
    build: Callable[[float], BaseModel],
    row_model: Type[BaseModel],
) -> list[BaseModel]:
    rows = []
    for value in values:
        try:
            rows.append(build(value))
        except CrossingsError as e:
            logger.warning(f"{label}={value}: {e}")
            rows.append(row_model(input=label, value=value, error=str(e)))
    return rows


def _mean_or_none(eta: float) -> tuple[Optional[float], Optional[bool]]:
    # the mean number diverges at eta = 1 and is zero at eta = 0
    if not 0.0 < eta < 1.0:
        return None, None
    prediction = crossing_prediction(eta)
    return prediction.mean_nc, prediction.asymptotic


def _eta_row(eta: float) -> FormulaRow:
    mean_nc, asymptotic = _mean_or_none(eta)
    return FormulaRow(
        input="eta",
        value=eta,
        eta=eta,
        p_cross=crossing_probability(eta),
        mean_nc=mean_nc,
        asymptotic=asymptotic,
    )


def _rectangle_row(r: float) -> FormulaRow:
    eta = rectangle_geometry(r).eta
    mean_nc, asymptotic = _mean_or_none(eta)
    return FormulaRow(
        input="rect_r",
        value=r,
        eta=eta,
        p_cross=crossing_probability(eta),
        mean_nc=mean_nc,
        asymptotic=asymptotic,
        kleban=kleban_crossing(r),
    )


def _triangle_row(x: float) -> FormulaRow:
    eta = triangle_geometry(x).eta
    return FormulaRow(
        input="x",
        value=x,
        eta=eta,
        p_cross=crossing_probability(eta),
        carleson=carleson_crossing(x),
    )


def _strip_row(ratio: float) -> FormulaRow:
    return FormulaRow(input="strip_ratio", value=ratio, mean_nc=strip_mean_crossings(ratio))


def cmd_formula(config: FormulaExperiment, context: RunContext) -> CommandResult:
    """Closed forms over the requested grids; domain errors stay in their row."""
    rows = (
        _grid_rows(config.eta, "eta", _eta_row, FormulaRow)
        + _grid_rows(config.rect_r, "rect_r", _rectangle_row, FormulaRow)
        + _grid_rows(config.x, "x", _triangle_row, FormulaRow)
        + _grid_rows(config.strip_ratio, "strip_ratio", _strip_row, FormulaRow)
    )
    return CommandResult(rows=rows, model=FormulaRow)


def cmd_geometry(config: GeometryExperiment, context: RunContext) -> CommandResult:
    def from_r(r: float) -> GeometryRow:
        g = rectangle_geometry(r)
        return GeometryRow(input="r", value=r, r=g.r, k=g.k, eta=g.eta)

    def from_k(k: float) -> GeometryRow:
        g = rectangle_from_modulus(k)
        return GeometryRow(input="k", value=k, r=g.r, k=g.k, eta=g.eta)

    def from_x(x: float) -> GeometryRow:
        g = triangle_geometry(x)
        return GeometryRow(input="x", value=x, x=g.x, eta=g.eta)

    rows = (
        _grid_rows(config.r, "r", from_r, GeometryRow)
        + _grid_rows(config.k, "k", from_k, GeometryRow)
        + _grid_rows(config.x, "x", from_x, GeometryRow)
    )
    return CommandResult(rows=rows, model=GeometryRow)


def cmd_mc(config: McExperiment, context: RunContext) -> CommandResult:
    if config.smirnov_x:
        rows = [
            smirnov_h(config.lattice, x, config.n_trials, context.master_seed, context.workers)
            for x in config.smirnov_x
        ]
        return CommandResult(rows=rows, model=SmirnovEstimate)

    stats = run_experiment(
        config.lattice,
        config.n_trials,
        context.master_seed,
        context.workers,
        context.chunk_size,
    )
    return CommandResult(rows=[stats], model=CrossingStats)


def resolve_graph(source: GraphSource) -> SmallGraph:
    if source.graph is not None:
        return source.graph
    if source.graph_path is not None:
        try:
            return SmallGraph.from_json_file(source.graph_path)
        except (OSError, ValueError) as e:
            raise ConfigError(f"Failed to load graph from {source.graph_path}: {e}") from e
    return SmallGraph.from_lattice(build_lattice(source.lattice))


def cmd_enumerate(config: EnumerateExperiment, context: RunContext) -> CommandResult:
    graph = resolve_graph(config.source)
    rows = []
    for p in config.p:
        pset = enumerate_partition_set(graph, p, workers=context.workers)
        direct_p, direct_mean = direct_event_sums(graph, p, workers=context.workers)
        rows.append(
            EnumerationRow(
                p=p,
                n_sites=graph.n_sites,
                n_bonds=graph.n_bonds,
                p_cross=crossing_prob_exact(pset),
                mean_nc=mean_crossing_exact(pset),
                mean_nc_product=mean_crossing_exact_product(pset),
                direct_p_cross=direct_p,
                direct_mean_nc=direct_mean,
                z_ff=pset.z_ff.coefficients.tolist(),
                z_aa=pset.z_aa.coefficients.tolist(),
                z_ab=pset.z_ab.coefficients.tolist(),
                z_af=pset.z_af.coefficients.tolist(),
                z_fa=pset.z_fa.coefficients.tolist(),
            )
        )
    return CommandResult(rows=rows, model=EnumerationRow)


def cmd_sle(config: SleExperiment, context: RunContext) -> CommandResult:
    estimate = estimate_left_first(
        config.a,
        config.b,
        config.n_traces,
        config.params,
        context.master_seed,
        context.workers,
    )
    return CommandResult(rows=[estimate], model=SleEstimate)


@dataclass(frozen=True)
class _Measurement:
    value: float
    ci_low: float
    ci_high: float
    n: int


def _stats_measurement(stats: CrossingStats, quantity: str, z: float) -> _Measurement:
    if quantity == "p_cross":
        low, high = wilson_interval(stats.crossings, stats.trials, z)
        return _Measurement(stats.p_hat, low, high, stats.trials)
    half = z * stats.se_nc
    return _Measurement(stats.mean_nc, stats.mean_nc - half, stats.mean_nc + half, stats.trials)


def _formula_for_lattice(check: Check, stats: CrossingStats) -> tuple[float, str]:
    lattice = check.lattice
    r = stats.effective_aspect_ratio
    if lattice.shape == Shape.periodic_strip:
        return strip_mean_crossings(r), f"W/L={r!r}"
    if lattice.shape != Shape.rectangle or lattice.arcs is not None:
        raise ConfigError(f"check {check.label}: no closed form for this lattice geometry")
    eta = rectangle_geometry(r).eta
    if check.quantity == "p_cross":
        return crossing_probability(eta), f"r={r!r}"
    return mean_crossing_number(eta), f"r={r!r}"


def _compare_formula(check: Check, context: RunContext) -> tuple[float, str, _Measurement]:
    seed, workers = context.master_seed, context.workers
    if check.measurer in ("mc", "strip"):
        stats = run_experiment(check.lattice, check.n_trials, seed, workers, context.chunk_size)
        predicted, geometry = _formula_for_lattice(check, stats)
        return predicted, geometry, _stats_measurement(stats, check.quantity, check.z)

    if check.measurer == "smirnov":
        estimate = smirnov_h(check.lattice, check.x, check.n_trials, seed, workers)
        low, high = wilson_interval(estimate.hits, estimate.trials, check.z)
        measurement = _Measurement(estimate.h_hat, low, high, estimate.trials)
        return carleson_crossing(estimate.snapped_x), f"x={estimate.snapped_x!r}", measurement

    estimate = estimate_left_first(check.a, check.b, check.n_trials, check.sle, seed, workers)
    resolved = estimate.left_first + estimate.right_first
    low, high = wilson_interval(estimate.left_first, resolved, check.z)
    eta = half_plane_eta(check.a, check.b)
    return crossing_probability(eta), f"eta={eta!r}", _Measurement(estimate.p_hat, low, high, resolved)


def _compare_enumerate(check: Check, context: RunContext) -> tuple[float, str, _Measurement]:
    graph = resolve_graph(check.source)
    pset = enumerate_partition_set(graph, check.p, workers=context.workers)
    if check.quantity == "p_cross":
        predicted = crossing_prob_exact(pset)
    else:
        predicted = mean_crossing_exact(pset)
    geometry = f"graph sites={graph.n_sites} bonds={graph.n_bonds} p={check.p!r}"

    if check.measurer == "enumerate":
        direct_p, direct_mean = direct_event_sums(graph, check.p, workers=context.workers)
        value = direct_p if check.quantity == "p_cross" else direct_mean
        tolerance = check.tolerance if check.tolerance is not None else EXACT_TOLERANCE
        return predicted, geometry, _Measurement(value, value - tolerance, value + tolerance, 1 << graph.n_bonds)

    stats = run_graph_experiment(
        graph.to_lattice(), check.p, check.n_trials, context.master_seed, context.workers
    )
    return predicted, geometry, _stats_measurement(stats, check.quantity, check.z)


def run_check(check: Check, context: RunContext) -> ComparisonRow:
    logger.info(f"Check {check.label}: {check.predictor} vs {check.measurer} ({check.quantity})")
    if check.predictor == "formula":
        predicted, geometry, measured = _compare_formula(check, context)
    else:
        predicted, geometry, measured = _compare_enumerate(check, context)

    abs_error = abs(predicted - measured.value)
    if check.tolerance is not None:
        low = measured.value - check.tolerance
        high = measured.value + check.tolerance
        within = abs_error <= check.tolerance
    else:
        low, high = measured.ci_low, measured.ci_high
        within = low <= predicted <= high
    if math.isnan(measured.value):
        within = False

    row = ComparisonRow(
        label=check.label,
        geometry=geometry,
        predicted=predicted,
        measured=measured.value,
        ci_low=low,
        ci_high=high,
        abs_error=abs_error,
        within_ci=within,
        master_seed=context.master_seed,
        n=measured.n,
    )
    verdict = "ok" if within else "FAIL"
    message = (
        f"Check {check.label}: predicted {predicted:.6f}, measured {measured.value:.6f} "
        f"[{low:.6f}, {high:.6f}] -> {verdict}"
    )
    if within:
        logger.info(message)
    else:
        logger.warning(message)
    return row


def cmd_compare(config: CompareExperiment, context: RunContext) -> CommandResult:
    """
    Run every check in order. A check that raises stops the run; rows
    already produced are kept and the result is marked failed.
    """
    rows: list[BaseModel] = []
    for check in config.checks:
        try:
            rows.append(run_check(check, context))
        except ConfigError:
            raise
        except CrossingsError as e:
            logger.error(f"Check {check.label} failed: {e}")
            return CommandResult(rows=rows, model=ComparisonRow, ok=False)
    ok = all(row.within_ci for row in rows)
    return CommandResult(rows=rows, model=ComparisonRow, ok=ok)


COMMANDS = {
    "formula": cmd_formula,
    "geometry": cmd_geometry,
    "mc": cmd_mc,
    "enumerate": cmd_enumerate,
    "sle": cmd_sle,
    "compare": cmd_compare,
}
