"""
Finite lattices as flat edge lists with two boundary arcs.

Sites are numbered row by row. A lattice knows whether its random elements
are bonds (every site present, each edge open with probability p) or sites
(each site open with probability p, edges fixed).
"""

import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from crossings.errors import DomainError

ROW_SPACING = math.sqrt(3.0) / 2.0

Crossing = Literal["horizontal", "vertical"]


@dataclass(frozen=True, eq=False)
class Lattice:
    bond_percolation: bool
    n_sites: int
    edges: np.ndarray  # (n_edges, 2) int64
    gamma1: np.ndarray  # int64 site indices
    gamma2: np.ndarray
    aspect_ratio: float

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_elements(self) -> int:
        return self.n_edges if self.bond_percolation else self.n_sites

    def with_arcs(self, gamma1: Iterable[int], gamma2: Iterable[int]) -> "Lattice":
        return Lattice(
            bond_percolation=self.bond_percolation,
            n_sites=self.n_sites,
            edges=self.edges,
            gamma1=_index_array(gamma1, self.n_sites),
            gamma2=_index_array(gamma2, self.n_sites),
            aspect_ratio=self.aspect_ratio,
        )


def _index_array(indices: Iterable[int], n_sites: int) -> np.ndarray:
    array = np.asarray(list(indices), dtype=np.int64)
    if array.size and (array.min() < 0 or array.max() >= n_sites):
        raise DomainError(f"arc index out of range [0, {n_sites})")
    return array


def _edge_array(edges: list[tuple[int, int]]) -> np.ndarray:
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def _ratio(width: float, height: float) -> float:
    return width / height if height > 0 else math.inf


def square_bond_rectangle(nx: int, ny: int, crossing: Crossing = "horizontal") -> Lattice:
    """nx x ny sites of the square lattice, bond percolation.

    The aspect ratio counts cells, (nx - 1)/(ny - 1) for a horizontal crossing.
    """
    index = lambda i, j: j * nx + i  # noqa: E731
    edges = [(index(i, j), index(i + 1, j)) for j in range(ny) for i in range(nx - 1)]
    edges += [(index(i, j), index(i, j + 1)) for j in range(ny - 1) for i in range(nx)]

    if crossing == "horizontal":
        gamma1 = [index(0, j) for j in range(ny)]
        gamma2 = [index(nx - 1, j) for j in range(ny)]
        ratio = _ratio(nx - 1, ny - 1)
    else:
        gamma1 = [index(i, 0) for i in range(nx)]
        gamma2 = [index(i, ny - 1) for i in range(nx)]
        ratio = _ratio(ny - 1, nx - 1)

    n_sites = nx * ny
    return Lattice(
        bond_percolation=True,
        n_sites=n_sites,
        edges=_edge_array(edges),
        gamma1=_index_array(gamma1, n_sites),
        gamma2=_index_array(gamma2, n_sites),
        aspect_ratio=ratio,
    )


def _triangular_row_edges(nx: int, ny: int, periodic: bool) -> list[tuple[int, int]]:
    # odd rows are shifted right by half a lattice unit
    edges = []
    for j in range(ny):
        for i in range(nx):
            site = j * nx + i
            if i + 1 < nx:
                edges.append((site, site + 1))
            elif periodic:
                edges.append((site, j * nx))
            if j + 1 == ny:
                continue
            up = [i - 1, i] if j % 2 == 0 else [i, i + 1]
            for iu in up:
                if periodic:
                    edges.append((site, (j + 1) * nx + iu % nx))
                elif 0 <= iu < nx:
                    edges.append((site, (j + 1) * nx + iu))
    return edges


def triangular_site_rectangle(nx: int, ny: int, crossing: Crossing = "horizontal") -> Lattice:
    """nx x ny sites of the triangular lattice, site percolation.

    Rows sit sqrt(3)/2 apart, so a horizontal crossing sees the aspect ratio
    nx / ((ny - 1) sqrt(3)/2).
    """
    edges = _triangular_row_edges(nx, ny, periodic=False)
    if crossing == "horizontal":
        gamma1 = [j * nx for j in range(ny)]
        gamma2 = [j * nx + nx - 1 for j in range(ny)]
        ratio = _ratio(nx, (ny - 1) * ROW_SPACING)
    else:
        gamma1 = list(range(nx))
        gamma2 = [(ny - 1) * nx + i for i in range(nx)]
        ratio = _ratio((ny - 1) * ROW_SPACING, nx)

    n_sites = nx * ny
    return Lattice(
        bond_percolation=False,
        n_sites=n_sites,
        edges=_edge_array(edges),
        gamma1=_index_array(gamma1, n_sites),
        gamma2=_index_array(gamma2, n_sites),
        aspect_ratio=ratio,
    )


@dataclass(frozen=True)
class TriangleSides:
    """Site indices along the sides of an equilateral triangle.

    A is the bottom-left corner, C the bottom-right corner, B the apex.
    ``bc`` runs from C (position 0) to B (position n - 1).
    """

    ab: np.ndarray
    bc: np.ndarray
    ca: np.ndarray


def _triangle_index(n: int, i: int, j: int) -> int:
    return j * n - j * (j - 1) // 2 + i


def triangle_sides(n: int) -> TriangleSides:
    return TriangleSides(
        ab=np.asarray([_triangle_index(n, 0, j) for j in range(n)], dtype=np.int64),
        bc=np.asarray(
            [_triangle_index(n, n - 1 - j, j) for j in range(n)], dtype=np.int64
        ),
        ca=np.asarray([_triangle_index(n, i, 0) for i in range(n)], dtype=np.int64),
    )


def triangular_site_triangle(n: int) -> Lattice:
    """Equilateral triangle of side n sites on the triangular lattice.

    Row j holds n - j sites at x = i + j/2. Default arcs are AB and BC
    without the apex B, which stays on AB only.
    """
    edges = []
    for j in range(n):
        for i in range(n - j):
            site = _triangle_index(n, i, j)
            if i + 1 < n - j:
                edges.append((site, site + 1))
            if j + 1 < n:
                if i >= 1:
                    edges.append((site, _triangle_index(n, i - 1, j + 1)))
                if i < n - j - 1:
                    edges.append((site, _triangle_index(n, i, j + 1)))

    sides = triangle_sides(n)
    return Lattice(
        bond_percolation=False,
        n_sites=n * (n + 1) // 2,
        edges=_edge_array(edges),
        gamma1=sides.ab,
        gamma2=sides.bc[:-1],
        aspect_ratio=1.0,
    )


def periodic_strip(kind: str, length_sites: int, width_sites: int) -> Lattice:
    """Annulus: ``length_sites`` rows between the two edges, rows periodic
    with circumference ``width_sites``. Arcs are the bottom and top rows."""
    if width_sites < 3:
        raise DomainError(f"periodic strip needs width >= 3 sites, got {width_sites}")
    nx, ny = width_sites, length_sites

    if kind == "square_bond":
        edges = [(j * nx + i, j * nx + (i + 1) % nx) for j in range(ny) for i in range(nx)]
        edges += [(j * nx + i, (j + 1) * nx + i) for j in range(ny - 1) for i in range(nx)]
        height = ny - 1
    else:
        edges = _triangular_row_edges(nx, ny, periodic=True)
        height = (ny - 1) * ROW_SPACING

    n_sites = nx * ny
    return Lattice(
        bond_percolation=kind == "square_bond",
        n_sites=n_sites,
        edges=_edge_array(edges),
        gamma1=_index_array(range(nx), n_sites),
        gamma2=_index_array(range((ny - 1) * nx, ny * nx), n_sites),
        aspect_ratio=_ratio(nx, height),
    )


def graph_lattice(n_sites: int, bonds: Iterable[tuple[int, int]], gamma1, gamma2) -> Lattice:
    """Arbitrary bond graph (the exhaustive-enumeration graphs)."""
    return Lattice(
        bond_percolation=True,
        n_sites=n_sites,
        edges=_edge_array([tuple(b) for b in bonds]),
        gamma1=_index_array(gamma1, n_sites),
        gamma2=_index_array(gamma2, n_sites),
        aspect_ratio=math.nan,
    )
