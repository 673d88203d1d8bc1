"""
Monte Carlo engine for critical lattice percolation.

Each trial samples its bonds or sites from a counter-based generator keyed
by the trial seed, labels clusters with union-find and counts the distinct
cluster roots touching both boundary arcs. Trials are grouped in fixed
chunks and run by numba kernels on a thread pool; outputs never depend on
the worker count.
"""

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit
from pydantic import Field, model_validator

from config.base import StrictModel
from crossings.errors import DomainError
from crossings.lattices import (
    Lattice,
    periodic_strip,
    square_bond_rectangle,
    triangle_sides,
    triangular_site_rectangle,
    triangular_site_triangle,
)
from crossings.parallel import run_chunked
from crossings.seeding import counter_uniform, derive_key, derive_seed
from crossings.statistics import mean_and_stderr, wilson_interval
from crossings.unionfind import find_root, reset, union

logger = logging.getLogger(__name__)

P_CRITICAL = 0.5


class LatticeKind(str, Enum):
    square_bond = "square_bond"
    triangular_site = "triangular_site"


class Shape(str, Enum):
    rectangle = "rectangle"
    equilateral_triangle = "equilateral_triangle"
    periodic_strip = "periodic_strip"


class Arcs(StrictModel):
    gamma1: tuple[int, ...]
    gamma2: tuple[int, ...]


class LatticeSpec(StrictModel):
    """
    A lattice percolation experiment.

    nx, ny count sites. For ``periodic_strip`` nx is the periodic width and
    ny the number of rows between the two edges; for
    ``equilateral_triangle`` nx is the side length and ny is ignored.
    """

    kind: LatticeKind = LatticeKind.triangular_site
    shape: Shape = Shape.rectangle
    nx: int = Field(ge=1)
    ny: int = Field(default=1, ge=1)
    p: float = Field(default=P_CRITICAL, ge=0.0, le=1.0)
    crossing: str = Field(default="horizontal", pattern="^(horizontal|vertical)$")
    arcs: Optional[Arcs] = None

    @model_validator(mode="after")
    def _check_geometry(self) -> "LatticeSpec":
        if self.shape == Shape.equilateral_triangle and self.kind != LatticeKind.triangular_site:
            raise ValueError("equilateral_triangle is defined on the triangular site lattice")
        if self.shape == Shape.rectangle:
            across = self.nx if self.crossing == "horizontal" else self.ny
            if across < 2 and self.arcs is None:
                raise ValueError("a rectangle needs two distinct columns (rows) to cross")
        if self.shape == Shape.periodic_strip and (self.nx < 3 or self.ny < 2):
            raise ValueError("periodic strip needs width >= 3 and at least 2 rows")
        if self.arcs is not None:
            overlap = set(self.arcs.gamma1) & set(self.arcs.gamma2)
            if overlap:
                raise ValueError(f"arcs must be disjoint, shared sites {sorted(overlap)}")
        return self


@dataclass(frozen=True)
class TrialResult:
    crossed: bool
    n_crossing_clusters: int


class CrossingStats(StrictModel):
    trials: int
    crossings: int
    p_hat: float
    p_ci_low: float
    p_ci_high: float
    mean_nc: float
    se_nc: float
    master_seed: int
    effective_aspect_ratio: float


class SmirnovEstimate(StrictModel):
    """Boundary value of the separation observable at X on side BC."""

    query_x: float
    snapped_x: float
    side_sites: int
    trials: int
    hits: int
    h_hat: float
    ci_low: float
    ci_high: float
    # trials with a closed crossing from CA to BX on the same configurations
    dual_hits: int
    master_seed: int


@functools.lru_cache(maxsize=32)
def build_lattice(spec: LatticeSpec) -> Lattice:
    if spec.shape == Shape.rectangle:
        if spec.kind == LatticeKind.square_bond:
            lattice = square_bond_rectangle(spec.nx, spec.ny, spec.crossing)
        else:
            lattice = triangular_site_rectangle(spec.nx, spec.ny, spec.crossing)
    elif spec.shape == Shape.equilateral_triangle:
        lattice = triangular_site_triangle(spec.nx)
    else:
        lattice = periodic_strip(spec.kind.value, spec.ny, spec.nx)

    if spec.arcs is not None:
        lattice = lattice.with_arcs(spec.arcs.gamma1, spec.arcs.gamma2)
    return lattice


@njit(cache=True, nogil=True)
def _sample_and_label(bond_mode, invert, edges, p, key, parent, size, occupied):
    reset(parent, size)
    n_sites = parent.shape[0]
    if bond_mode:
        for i in range(n_sites):
            occupied[i] = 1
        for e in range(edges.shape[0]):
            if counter_uniform(key, np.uint64(e)) < p:
                union(parent, size, edges[e, 0], edges[e, 1])
    else:
        for i in range(n_sites):
            is_open = counter_uniform(key, np.uint64(i)) < p
            occupied[i] = 1 if is_open != invert else 0
        for e in range(edges.shape[0]):
            u = edges[e, 0]
            v = edges[e, 1]
            if occupied[u] == 1 and occupied[v] == 1:
                union(parent, size, u, v)


@njit(cache=True, nogil=True)
def count_crossing_clusters(parent, occupied, gamma1, gamma2, mark, stamp):
    """Distinct roots touching both arcs; ``mark`` holds per-root stamps,
    ``stamp`` and ``stamp + 1`` must be unused in it."""
    for s in gamma1:
        if occupied[s] == 1:
            mark[find_root(parent, s)] = stamp
    n_crossing = 0
    for s in gamma2:
        if occupied[s] == 1:
            root = find_root(parent, s)
            if mark[root] == stamp:
                mark[root] = stamp + 1
                n_crossing += 1
    return n_crossing


@njit(cache=True, nogil=True)
def _trial_kernel(bond_mode, invert, n_sites, edges, gamma1, gamma2, p, key):
    parent = np.empty(n_sites, dtype=np.int64)
    size = np.empty(n_sites, dtype=np.int64)
    occupied = np.empty(n_sites, dtype=np.uint8)
    mark = np.zeros(n_sites, dtype=np.int64)
    _sample_and_label(bond_mode, invert, edges, p, key, parent, size, occupied)
    return count_crossing_clusters(parent, occupied, gamma1, gamma2, mark, 1)


@njit(cache=True, nogil=True)
def _batch_kernel(
    bond_mode, invert, n_sites, edges, gamma1, gamma2, p, master_seed, start, stop, out
):
    # scratch arrays are allocated once per chunk and reused by every trial
    parent = np.empty(n_sites, dtype=np.int64)
    size = np.empty(n_sites, dtype=np.int64)
    occupied = np.empty(n_sites, dtype=np.uint8)
    mark = np.zeros(n_sites, dtype=np.int64)
    for t in range(start, stop):
        key = derive_key(master_seed, np.uint64(t))
        _sample_and_label(bond_mode, invert, edges, p, key, parent, size, occupied)
        stamp = 2 * (t - start) + 1
        out[t] = count_crossing_clusters(parent, occupied, gamma1, gamma2, mark, stamp)


def _validate_seed(master_seed: int):
    # derive_seed raises on out-of-range seeds
    derive_seed(master_seed, 0)


def sample_counts(
    lattice: Lattice,
    p: float,
    n_trials: int,
    master_seed: int,
    workers: int = 1,
    chunk_size: int = 4096,
    invert: bool = False,
) -> np.ndarray:
    """Crossing-cluster count of every trial, trial i keyed by derive_seed(master_seed, i)."""
    if n_trials < 1:
        raise DomainError(f"n_trials must be >= 1, got {n_trials}")
    _validate_seed(master_seed)
    out = np.zeros(n_trials, dtype=np.int64)
    seed = np.uint64(master_seed)

    def run_chunk(start: int, stop: int):
        _batch_kernel(
            lattice.bond_percolation,
            invert,
            lattice.n_sites,
            lattice.edges,
            lattice.gamma1,
            lattice.gamma2,
            float(p),
            seed,
            start,
            stop,
            out,
        )

    run_chunked(run_chunk, n_trials, workers=workers, chunk_size=chunk_size)
    return out


def _stats_from_counts(counts: np.ndarray, master_seed: int, aspect_ratio: float) -> CrossingStats:
    n = int(counts.shape[0])
    crossings = int(np.count_nonzero(counts))
    low, high = wilson_interval(crossings, n)
    mean_nc, se_nc = mean_and_stderr(int(counts.sum()), int((counts * counts).sum()), n)
    return CrossingStats(
        trials=n,
        crossings=crossings,
        p_hat=crossings / n,
        p_ci_low=low,
        p_ci_high=high,
        mean_nc=mean_nc,
        se_nc=se_nc,
        master_seed=master_seed,
        effective_aspect_ratio=aspect_ratio,
    )


def run_trial(spec: LatticeSpec, trial_seed: int) -> TrialResult:
    """One configuration sampled with the counter-based generator keyed by trial_seed."""
    lattice = build_lattice(spec)
    n_crossing = int(
        _trial_kernel(
            lattice.bond_percolation,
            False,
            lattice.n_sites,
            lattice.edges,
            lattice.gamma1,
            lattice.gamma2,
            float(spec.p),
            np.uint64(trial_seed),
        )
    )
    return TrialResult(crossed=n_crossing > 0, n_crossing_clusters=n_crossing)


def run_lattice_experiment(
    lattice: Lattice,
    p: float,
    n_trials: int,
    master_seed: int,
    workers: int = 1,
    chunk_size: int = 4096,
) -> CrossingStats:
    logger.info(
        f"Sampling {n_trials} trials on {lattice.n_sites} sites / {lattice.n_edges} edges "
        f"(p={p}, seed={master_seed}, workers={workers})",
        extra={"master_seed": master_seed, "workers": workers, "n_trials": n_trials},
    )
    counts = sample_counts(lattice, p, n_trials, master_seed, workers, chunk_size)
    stats = _stats_from_counts(counts, master_seed, lattice.aspect_ratio)
    logger.info(
        f"p_hat={stats.p_hat:.6f} [{stats.p_ci_low:.6f}, {stats.p_ci_high:.6f}], "
        f"mean_nc={stats.mean_nc:.6f} +- {stats.se_nc:.6f}"
    )
    return stats


def run_experiment(
    spec: LatticeSpec,
    n_trials: int,
    master_seed: int,
    workers: int = 1,
    chunk_size: int = 4096,
) -> CrossingStats:
    """Crossing statistics of n_trials independent trials, bit-identical for any workers."""
    return run_lattice_experiment(
        build_lattice(spec), spec.p, n_trials, master_seed, workers, chunk_size
    )


def run_graph_experiment(
    lattice: Lattice,
    p: float,
    n_trials: int,
    master_seed: int,
    workers: int = 1,
) -> CrossingStats:
    """Monte Carlo on an arbitrary bond graph, e.g. an enumeration graph."""
    if not lattice.bond_percolation:
        raise DomainError("graph experiments use bond percolation")
    return run_lattice_experiment(lattice, p, n_trials, master_seed, workers)


def strip_crossing_count(
    L_sites: int,
    W_sites: int,
    p: float,
    n_trials: int,
    master_seed: int,
    workers: int = 1,
    kind: LatticeKind = LatticeKind.square_bond,
) -> CrossingStats:
    """Clusters crossing an annulus of L_sites rows and periodic width W_sites."""
    spec = LatticeSpec(kind=kind, shape=Shape.periodic_strip, nx=W_sites, ny=L_sites, p=p)
    return run_experiment(spec, n_trials, master_seed, workers)


def smirnov_h(
    spec: LatticeSpec,
    query_x: float,
    n_trials: int,
    master_seed: int,
    workers: int = 1,
) -> SmirnovEstimate:
    """
    Estimate h at the point X on side BC with |XC| = query_x.

    h(X) is the probability that an open cluster spanning AB to BC separates
    X from AC; on the boundary that is an open crossing from AB to XC. The
    segment XC is the first round(x n) sites of BC counted from C, and the
    snapped x is reported. The same configurations are also scanned for a
    closed crossing from CA to BX, the complementary event.
    """
    if spec.shape != Shape.equilateral_triangle:
        raise DomainError("smirnov_h needs an equilateral_triangle lattice spec")
    if not 0.0 <= query_x <= 1.0:
        raise DomainError(f"query_x must lie in [0, 1], got {query_x}")

    n = spec.nx
    base = build_lattice(spec)
    sides = triangle_sides(n)
    m = int(round(query_x * n))
    snapped = m / n
    if not math.isclose(snapped, query_x, abs_tol=0.5 / n):
        logger.warning(f"query_x={query_x} snapped to {snapped} on a side of {n} sites")

    # BX shares the corner site X with XC; an empty XC leaves all of BC to BX
    segment_bx = sides.bc[m - 1 :] if m > 0 else sides.bc
    dual = base.with_arcs(sides.ca, segment_bx)
    dual_hits = int(
        np.count_nonzero(sample_counts(dual, spec.p, n_trials, master_seed, workers, invert=True))
    )
    if m == 0:
        hits = 0
    else:
        primal = base.with_arcs(sides.ab, sides.bc[:m])
        hits = int(
            np.count_nonzero(sample_counts(primal, spec.p, n_trials, master_seed, workers))
        )

    low, high = wilson_interval(hits, n_trials)
    logger.info(f"h({snapped:.4f}) = {hits / n_trials:.6f} [{low:.6f}, {high:.6f}]")
    return SmirnovEstimate(
        query_x=query_x,
        snapped_x=snapped,
        side_sites=n,
        trials=n_trials,
        hits=hits,
        h_hat=hits / n_trials,
        ci_low=low,
        ci_high=high,
        dual_hits=dual_hits,
        master_seed=master_seed,
    )
