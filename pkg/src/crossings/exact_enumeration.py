"""
Exhaustive random-cluster partition functions on small bond graphs.

Every subset of open bonds C is weighted by p^|C| (1-p)^(B-|C|). Its
clusters are classified by which boundary arcs they touch (none, gamma1
only, gamma2 only, both: N_0, N_L, N_R, N_c) and contribute a power of Q
to each member of the partition set:

    Z_ff <- Q^(N_c + N_L + N_R + N_0)     both arcs free
    Z_aa <- Q^(N_0)                       both arcs fixed, same colour
    Z_af <- Q^(N_R + N_0)                 gamma1 fixed, gamma2 free
    Z_fa <- Q^(N_L + N_0)                 gamma1 free, gamma2 fixed
    Z_ab <- Q^(N_0), only when N_c = 0    arcs fixed to different colours

At Q = 1 percolation is recovered: P = Z_aa(1) - Z_ab(1) and
E[N_c] = d/dQ (Z_ff + Z_aa - Z_fa - Z_af) at Q = 1.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from numba import njit
from numpy.polynomial import Polynomial
from pydantic import Field, model_validator

from config.base import StrictModel
from crossings.errors import DomainError, EnumerationCapError
from crossings.lattice_mc import count_crossing_clusters
from crossings.lattices import Lattice, graph_lattice
from crossings.parallel import run_chunked
from crossings.unionfind import find_root, reset, union

logger = logging.getLogger(__name__)

MAX_BONDS = 24
SHARD_SIZE = 1 << 14

# rows of the accumulated coefficient table
_FF, _AA, _AB, _AF, _FA = range(5)


class SmallGraph(StrictModel):
    """A bond graph with two disjoint boundary arcs, small enough to enumerate."""

    n_sites: int = Field(ge=1)
    bonds: tuple[tuple[int, int], ...] = ()
    gamma1: tuple[int, ...]
    gamma2: tuple[int, ...]

    @model_validator(mode="after")
    def _check_indices(self) -> "SmallGraph":
        sites = [s for bond in self.bonds for s in bond] + list(self.gamma1) + list(self.gamma2)
        bad = [s for s in sites if not 0 <= s < self.n_sites]
        if bad:
            raise ValueError(f"site indices {sorted(set(bad))} outside [0, {self.n_sites})")
        loops = [bond for bond in self.bonds if bond[0] == bond[1]]
        if loops:
            raise ValueError(f"self-loops are not allowed: {loops}")
        shared = set(self.gamma1) & set(self.gamma2)
        if shared:
            raise ValueError(f"gamma1 and gamma2 share sites {sorted(shared)}")
        return self

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "SmallGraph":
        """Read ``{"n_sites", "bonds", "gamma1", "gamma2"}`` from a JSON file."""
        with open(path, "r") as f:
            return cls.model_validate(json.load(f))

    @classmethod
    def from_lattice(cls, lattice: Lattice) -> "SmallGraph":
        if not lattice.bond_percolation:
            raise DomainError("only bond-percolation lattices convert to a SmallGraph")
        return cls(
            n_sites=lattice.n_sites,
            bonds=tuple((int(u), int(v)) for u, v in lattice.edges),
            gamma1=tuple(int(s) for s in lattice.gamma1),
            gamma2=tuple(int(s) for s in lattice.gamma2),
        )

    def to_lattice(self) -> Lattice:
        return graph_lattice(self.n_sites, self.bonds, self.gamma1, self.gamma2)


@dataclass(frozen=True, eq=False)
class QPolynomial:
    """Polynomial in Q, coefficients indexed by power."""

    coefficients: np.ndarray

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial(self.coefficients)

    @property
    def degree(self) -> int:
        nonzero = np.flatnonzero(self.coefficients)
        return int(nonzero[-1]) if nonzero.size else 0

    def __call__(self, q: float) -> float:
        return float(self.polynomial(q))

    def derivative_at(self, q: float) -> float:
        return float(self.polynomial.deriv()(q))


@dataclass(frozen=True)
class PartitionSet:
    z_ff: QPolynomial
    z_aa: QPolynomial
    z_ab: QPolynomial
    z_af: QPolynomial
    z_fa: QPolynomial
    p: float


@njit(cache=True, nogil=True)
def _label_mask(mask, edges, parent, size):
    reset(parent, size)
    n_open = 0
    for e in range(edges.shape[0]):
        if (mask >> e) & 1:
            union(parent, size, edges[e, 0], edges[e, 1])
            n_open += 1
    return n_open


@njit(cache=True, nogil=True)
def _partition_shard(n_sites, edges, gamma1, gamma2, weights, start, stop):
    coeffs = np.zeros((5, n_sites + 1))
    parent = np.empty(n_sites, dtype=np.int64)
    size = np.empty(n_sites, dtype=np.int64)
    flags = np.zeros(n_sites, dtype=np.uint8)
    for mask in range(start, stop):
        w = weights[_label_mask(mask, edges, parent, size)]
        for i in range(n_sites):
            flags[i] = 0
        for s in gamma1:
            flags[find_root(parent, s)] |= 1
        for s in gamma2:
            flags[find_root(parent, s)] |= 2

        n_free = 0
        n_left = 0
        n_right = 0
        n_cross = 0
        for i in range(n_sites):
            if parent[i] != i:
                continue
            if flags[i] == 0:
                n_free += 1
            elif flags[i] == 1:
                n_left += 1
            elif flags[i] == 2:
                n_right += 1
            else:
                n_cross += 1

        coeffs[_FF, n_cross + n_left + n_right + n_free] += w
        coeffs[_AA, n_free] += w
        coeffs[_AF, n_right + n_free] += w
        coeffs[_FA, n_left + n_free] += w
        if n_cross == 0:
            coeffs[_AB, n_free] += w
    return coeffs


@njit(cache=True, nogil=True)
def _event_shard(n_sites, edges, gamma1, gamma2, weights, start, stop):
    parent = np.empty(n_sites, dtype=np.int64)
    size = np.empty(n_sites, dtype=np.int64)
    occupied = np.ones(n_sites, dtype=np.uint8)
    mark = np.zeros(n_sites, dtype=np.int64)
    p_cross = 0.0
    mean_nc = 0.0
    for mask in range(start, stop):
        w = weights[_label_mask(mask, edges, parent, size)]
        stamp = 2 * (mask - start) + 1
        n_crossing = count_crossing_clusters(parent, occupied, gamma1, gamma2, mark, stamp)
        if n_crossing > 0:
            p_cross += w
        mean_nc += w * n_crossing
    return p_cross, mean_nc


def _check_enumerable(graph: SmallGraph, p: float):
    if graph.n_bonds > MAX_BONDS:
        raise EnumerationCapError(
            f"graph has {graph.n_bonds} bonds, enumeration is capped at {MAX_BONDS}"
        )
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")


def _configuration_weights(n_bonds: int, p: float) -> np.ndarray:
    k = np.arange(n_bonds + 1)
    return p**k * (1.0 - p) ** (n_bonds - k)


def enumerate_partition_set(graph: SmallGraph, p: float, workers: int = 1) -> PartitionSet:
    """
    Sum all 2^B bond subsets into the five partition functions.

    The subset range is split into fixed shards merged in shard order, so the
    coefficients are identical for any worker count.

    Raises:
        EnumerationCapError: the graph has more than MAX_BONDS bonds
    """
    _check_enumerable(graph, p)
    lattice = graph.to_lattice()
    weights = _configuration_weights(graph.n_bonds, p)
    n_configs = 1 << graph.n_bonds
    logger.info(
        f"Enumerating {n_configs} configurations of {graph.n_bonds} bonds "
        f"on {graph.n_sites} sites (p={p})"
    )

    shards = run_chunked(
        lambda start, stop: _partition_shard(
            lattice.n_sites, lattice.edges, lattice.gamma1, lattice.gamma2, weights, start, stop
        ),
        n_configs,
        workers=workers,
        chunk_size=SHARD_SIZE,
    )
    coeffs = shards[0].copy()
    for shard in shards[1:]:
        coeffs += shard

    return PartitionSet(
        z_ff=QPolynomial(coeffs[_FF]),
        z_aa=QPolynomial(coeffs[_AA]),
        z_ab=QPolynomial(coeffs[_AB]),
        z_af=QPolynomial(coeffs[_AF]),
        z_fa=QPolynomial(coeffs[_FA]),
        p=p,
    )


def crossing_prob_exact(pset: PartitionSet) -> float:
    """P = Z_aa(1) - Z_ab(1)."""
    return pset.z_aa(1.0) - pset.z_ab(1.0)


def mean_crossing_exact(pset: PartitionSet) -> float:
    """E[N_c] = d/dQ (Z_ff + Z_aa - Z_fa - Z_af) at Q = 1."""
    combined = (
        pset.z_ff.polynomial + pset.z_aa.polynomial - pset.z_fa.polynomial - pset.z_af.polynomial
    )
    return float(combined.deriv()(1.0))


def mean_crossing_exact_product(pset: PartitionSet) -> float:
    """
    E[N_c] = d/dQ [Z_ff Z_aa / (Z_fa Z_af)] at Q = 1.

    Agrees with the sum form because Z_ff, Z_aa, Z_fa and Z_af all equal one
    at Q = 1; Z_ab does not enter.
    """
    members = [pset.z_ff, pset.z_aa, pset.z_fa, pset.z_af]
    values = [z(1.0) for z in members]
    slopes = [z.derivative_at(1.0) for z in members]
    # derivative of a ratio of products through logarithmic derivatives
    log_slope = (
        slopes[0] / values[0] + slopes[1] / values[1] - slopes[2] / values[2] - slopes[3] / values[3]
    )
    return values[0] * values[1] / (values[2] * values[3]) * log_slope


def direct_event_sums(graph: SmallGraph, p: float, workers: int = 1) -> tuple[float, float]:
    """
    Crossing probability and mean crossing number by direct summation over
    configurations, classified by the Monte Carlo crossing-cluster counter.
    """
    _check_enumerable(graph, p)
    lattice = graph.to_lattice()
    weights = _configuration_weights(graph.n_bonds, p)

    shards = run_chunked(
        lambda start, stop: _event_shard(
            lattice.n_sites, lattice.edges, lattice.gamma1, lattice.gamma2, weights, start, stop
        ),
        1 << graph.n_bonds,
        workers=workers,
        chunk_size=SHARD_SIZE,
    )
    p_cross = 0.0
    mean_nc = 0.0
    for shard_p, shard_mean in shards:
        p_cross += shard_p
        mean_nc += shard_mean
    return p_cross, mean_nc
