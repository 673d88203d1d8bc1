"""
Conformal bookkeeping for crossing problems.

Cross-ratios of four boundary points, the rectangle's Schwarz-Christoffel
correspondence (aspect ratio r <-> modulus k <-> cross-ratio eta) and the
equilateral-triangle correspondence (boundary coordinate x <-> eta).
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, TypeAlias

from scipy import optimize

from crossings.errors import DegenerateQuadError, DomainError
from crossings.special_functions import (
    elliptic_k,
    incomplete_beta_13,
    theta_constants,
)

logger = logging.getLogger(__name__)

# A real number in (0, 1) encoding the conformal class of an ordered quad.
CrossRatio: TypeAlias = float

INFINITY = math.inf

_BISECT_MAXITER = 400


@dataclass(frozen=True)
class BoundaryQuad:
    """
    Four boundary points on the extended real line, in cyclic order.

    At most one point may be ``INFINITY``. Cyclic order means the sequence,
    read around the circle R u {inf}, increases with exactly one wrap.
    """

    z1: float
    z2: float
    z3: float
    z4: float

    def __post_init__(self):
        points = self.points
        if any(math.isnan(z) for z in points):
            raise DomainError(f"quad contains NaN: {points}")
        if sum(math.isinf(z) for z in points) > 1:
            raise DomainError(f"at most one point may be infinite: {points}")
        if any(z == -INFINITY for z in points):
            raise DomainError("use +inf for the point at infinity")
        if len(set(points)) < 4:
            raise DegenerateQuadError(f"quad has coinciding points: {points}")
        descents = sum(points[i] > points[(i + 1) % 4] for i in range(4))
        if descents != 1:
            raise DomainError(f"quad points are not cyclically ordered: {points}")

    @property
    def points(self) -> Tuple[float, float, float, float]:
        return (self.z1, self.z2, self.z3, self.z4)


@dataclass(frozen=True)
class RectangleGeometry:
    """Aspect ratio r = W/L, elliptic modulus k and the induced cross-ratio."""

    r: float
    k: float
    eta: CrossRatio


@dataclass(frozen=True)
class TriangleGeometry:
    """Length x of the segment XC on side BC of a unit equilateral triangle."""

    x: float
    eta: CrossRatio


def cross_ratio(quad: BoundaryQuad) -> CrossRatio:
    """
    eta = (z1-z2)(z3-z4) / ((z1-z3)(z2-z4)).

    A point at infinity appears in exactly one numerator and one denominator
    factor; their ratio tends to 1, so both are dropped.
    """
    z = quad.points
    factors = {
        "num": [(0, 1), (2, 3)],
        "den": [(0, 2), (1, 3)],
    }
    inf_slot = next((i for i, zi in enumerate(z) if math.isinf(zi)), None)

    def product(pairs):
        value = 1.0
        for i, j in pairs:
            if inf_slot in (i, j):
                continue
            value *= z[i] - z[j]
        return value

    eta = product(factors["num"]) / product(factors["den"])
    if not 0.0 < eta < 1.0:
        raise DegenerateQuadError(f"cross-ratio {eta} outside (0, 1) for {z}")
    return eta


def mobius(quad: BoundaryQuad, a: float, b: float, c: float, d: float) -> BoundaryQuad:
    """Apply z -> (az + b)/(cz + d), ad - bc > 0, to every point of a quad."""
    if not a * d - b * c > 0:
        raise DomainError(f"Mobius map needs ad - bc > 0, got {a * d - b * c}")

    def image(z: float) -> float:
        if math.isinf(z):
            return a / c if c != 0 else INFINITY
        denominator = c * z + d
        if denominator == 0:
            return INFINITY
        return (a * z + b) / denominator

    return BoundaryQuad(*(image(z) for z in quad.points))


def half_plane_eta(a: float, b: float) -> CrossRatio:
    """Cross-ratio of the intervals (-inf, -a) and (0, b): b / (a + b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"half_plane_eta requires a, b > 0, got {a}, {b}")
    return cross_ratio(BoundaryQuad(INFINITY, -a, 0.0, b))


def _rectangle_cross_ratios(r: float) -> Tuple[float, float]:
    # (eta, 1 - eta) as fourth powers of theta_2 / theta_3 and theta_4 / theta_3
    # at the nome exp(-pi r); r < 1 folds onto 1 / r so the nome stays small
    if r < 1.0:
        one_minus_eta, eta = _rectangle_cross_ratios(1.0 / r)
        return eta, one_minus_eta
    theta_2, theta_3, theta_4 = theta_constants(math.exp(-math.pi * r))
    return (theta_2 / theta_3) ** 4, (theta_4 / theta_3) ** 4


def rectangle_from_modulus(k: float) -> RectangleGeometry:
    """
    Rectangle geometry for modulus k in (0, 1).

    W = 2 K(k^2), L = K(1 - k^2), r = W/L and eta = ((1-k)/(1+k))^2.
    """
    if not 0.0 < k < 1.0:
        raise DomainError(f"modulus must lie in (0, 1), got {k}")
    r = 2.0 * elliptic_k(k * k) / elliptic_k(1.0 - k * k)
    eta = ((1.0 - k) / (1.0 + k)) ** 2
    return RectangleGeometry(r=r, k=k, eta=eta)


def rectangle_geometry(r: float) -> RectangleGeometry:
    """
    Invert the aspect ratio r(k) in closed form.

    sqrt(eta) = (1-k)/(1+k) is the Landen image of k, i.e. the modulus whose
    nome is exp(-pi r), so eta = (theta_2 / theta_3)^4 there. k is recovered
    as (1 - eta) / (1 + sqrt(eta))^2, keeping small moduli accurate.

    Defined for every r > 0. Beyond r of about 240 eta underflows to 0 and
    k rounds to 1; below 1/240 k underflows to 0 and eta rounds to 1.
    """
    if not r > 0:
        raise DomainError(f"aspect ratio must be positive, got {r}")
    eta, one_minus_eta = _rectangle_cross_ratios(r)
    k = one_minus_eta / (1.0 + math.sqrt(eta)) ** 2
    logger.debug(f"rectangle r={r}: k={k!r}, eta={eta!r}")
    return RectangleGeometry(r=r, k=k, eta=eta)


def rectangle_eta(r: float) -> CrossRatio:
    """Cross-ratio of a rectangle of aspect ratio r = W/L (crossing across W)."""
    return rectangle_geometry(r).eta


def triangle_eta(x: float) -> CrossRatio:
    """Solve incomplete_beta_13(eta) = x by bisection to 1e-11."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"triangle coordinate must lie in [0, 1], got {x}")
    if x in (0.0, 1.0):
        return x
    return optimize.bisect(
        lambda eta: incomplete_beta_13(eta) - x,
        0.0,
        1.0,
        xtol=1e-13,
        maxiter=_BISECT_MAXITER,
    )


def triangle_geometry(x: float) -> TriangleGeometry:
    return TriangleGeometry(x=x, eta=triangle_eta(x))
