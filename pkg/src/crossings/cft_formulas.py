"""
Closed-form predictions for critical percolation crossings.

Cardy's crossing probability, the mean number of crossing clusters, the
Dedekind-eta integral for rectangles, Carleson's triangle form, the
constant x'(1) and the long-strip mean-crossing law.
"""

import logging
import math
from dataclasses import dataclass

from scipy import integrate

from crossings.conformal_geometry import CrossRatio, rectangle_eta
from crossings.errors import ConvergenceError, DomainError
from crossings.special_functions import (
    HypergeometricParams,
    dedekind_eta4,
    gamma,
    gauss_2f1,
    ln_gamma,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)

# below this eta the mean-number series is replaced by its asymptote P(eta)
MEAN_NC_ACCURATE_MIN = 0.01
_MEAN_NC_TAIL_TOL = 1e-15
_MEAN_NC_TERM_CAP = 1_000_000

KLEBAN_DUALITY_BELOW = 0.2
# beyond this the integrand is q^(1/6) up to a factor 1 - O(exp(-2 pi r))
KLEBAN_TAIL_START = 6.0

_CARDY_PARAMS = HypergeometricParams(1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0)


@dataclass(frozen=True)
class UniversalConstants:
    """Constants of the crossing formulas, each with a second closed form."""

    x_prime_1: float = SQRT3 / (8.0 * math.pi)
    strip_slope: float = SQRT3 / 4.0
    cardy_prefactor: float = math.exp(
        ln_gamma(2.0 / 3.0) - ln_gamma(4.0 / 3.0) - ln_gamma(1.0 / 3.0)
    )
    kleban_prefactor: float = (
        2.0 ** (7.0 / 3.0)
        * math.pi**2
        / (SQRT3 * math.exp(3.0 * ln_gamma(1.0 / 3.0)))
    )

    def recomputed(self) -> dict[str, float]:
        """Every constant again, through an independent closed form."""
        # Gamma(1/3) Gamma(2/3) = 2 pi / sqrt(3) by reflection
        reflection = math.pi / math.sin(math.pi / 3.0)
        x_prime_gamma = -1.0 / (4.0 * gamma(4.0 / 3.0) * gamma(-1.0 / 3.0))
        cardy = 3.0 * reflection / math.exp(3.0 * ln_gamma(1.0 / 3.0))
        return {
            "x_prime_1": x_prime_gamma,
            "strip_slope": 2.0 * math.pi * x_prime_gamma,
            "cardy_prefactor": cardy,
            # small-eta matching of the eta integral with Cardy's formula
            "kleban_prefactor": math.pi * 2.0 ** (4.0 / 3.0) * cardy / 3.0,
        }

    def verify(self, rel_tol: float = 1e-14) -> bool:
        recomputed = self.recomputed()
        mismatches = {
            name: (getattr(self, name), value)
            for name, value in recomputed.items()
            if not math.isclose(
                getattr(self, name), value, rel_tol=rel_tol, abs_tol=rel_tol
            )
        }
        for name, (stored, value) in mismatches.items():
            logger.error(f"constant {name}: stored {stored!r} != recomputed {value!r}")
        return not mismatches


CONSTANTS = UniversalConstants()


@dataclass(frozen=True)
class CrossingPrediction:
    """Crossing probability and mean crossing number at one cross-ratio.

    ``asymptotic`` is set when mean_nc is the small-eta asymptote P(eta)
    rather than the converged series.
    """

    eta: CrossRatio
    p_cross: float
    mean_nc: float
    asymptotic: bool = False


def _check_unit_interval(name: str, value: float, closed: bool = True):
    inside = 0.0 <= value <= 1.0 if closed else 0.0 < value < 1.0
    if not inside:
        bounds = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"{name} must lie in {bounds}, got {value}")


def crossing_probability(eta: CrossRatio) -> float:
    """
    Cardy's crossing probability

        P = Gamma(2/3) / (Gamma(4/3) Gamma(1/3)) eta^(1/3) 2F1(1/3, 2/3; 4/3; eta)

    evaluated through the hypergeometric form for eta <= 1/2 and through
    the duality P(eta) = 1 - P(1 - eta) above. P(0) = 0 and P(1) = 1.
    """
    _check_unit_interval("eta", eta)
    if eta == 0.0:
        return 0.0
    if eta == 1.0:
        return 1.0
    if eta > 0.5:
        return 1.0 - crossing_probability(1.0 - eta)
    return CONSTANTS.cardy_prefactor * eta ** (1.0 / 3.0) * gauss_2f1(_CARDY_PARAMS, eta)


def _mean_crossing_series(x: float) -> float:
    """sum_{m>=1} c_m x^m / m with c_m = Gamma(1/3+m)Gamma(2/3) / (Gamma(2/3+m)Gamma(1/3))."""
    total = 0.0
    coefficient = 1.0
    power = 1.0
    for m in range(1, _MEAN_NC_TERM_CAP + 1):
        coefficient *= (m - 2.0 / 3.0) / (m - 1.0 / 3.0)
        power *= x
        term = coefficient * power / m
        total += term
        # c_m / m decreases, so the tail is bounded by a geometric series
        if term * x / (1.0 - x) < _MEAN_NC_TAIL_TOL:
            return total
    raise ConvergenceError(
        f"mean crossing series at 1-eta={x} exceeded {_MEAN_NC_TERM_CAP} terms",
        partial=total,
        bound=term * x / (1.0 - x),
    )


def mean_crossing_number(eta: CrossRatio) -> float:
    """
    Mean number of distinct crossing clusters,

        E[N_c] = 1/2 - (sqrt3 / 4 pi) [ln(1-eta) + 2 sum_m c_m (1-eta)^m / m].

    Accurate to 1e-8 on [0.01, 0.999]. Below eta = 0.01 the series converges
    too slowly for the eta^(1/3) behaviour to emerge and the asymptote
    E[N_c] ~ P(eta) is returned with a warning.
    """
    _check_unit_interval("eta", eta, closed=False)
    if eta < MEAN_NC_ACCURATE_MIN:
        logger.warning(
            f"mean_crossing_number: eta={eta} < {MEAN_NC_ACCURATE_MIN}, "
            "returning the small-eta asymptote P(eta)"
        )
        return crossing_probability(eta)

    x = 1.0 - eta
    series = _mean_crossing_series(x)
    return 0.5 - SQRT3 / (4.0 * math.pi) * (math.log1p(-eta) + 2.0 * series)


def crossing_prediction(eta: CrossRatio) -> CrossingPrediction:
    mean_nc = mean_crossing_number(eta)
    return CrossingPrediction(
        eta=eta,
        p_cross=crossing_probability(eta),
        mean_nc=mean_nc,
        asymptotic=eta < MEAN_NC_ACCURATE_MIN,
    )


def _kleban_integral(r: float) -> float:
    # int_r^inf eta(ir')^4 dr'
    tail_start = max(r, KLEBAN_TAIL_START)
    tail = 3.0 / math.pi * math.exp(-math.pi * tail_start / 3.0)
    if r >= tail_start:
        return tail
    body, _ = integrate.quad(
        dedekind_eta4, r, tail_start, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    return body + tail


def kleban_crossing(r: float) -> float:
    """
    Rectangle crossing probability as an integral of the Dedekind eta,

        P(r) = 2^(7/3) pi^2 / (sqrt3 Gamma(1/3)^3) int_r^inf eta(ir')^4 dr',

    with r = W/L. Small aspect ratios go through P(r) = 1 - P(1/r).
    """
    if not r > 0:
        raise DomainError(f"aspect ratio must be positive, got {r}")
    if r < KLEBAN_DUALITY_BELOW:
        return 1.0 - kleban_crossing(1.0 / r)
    return CONSTANTS.kleban_prefactor * _kleban_integral(r)


def rectangle_crossing(r: float) -> float:
    """Cardy's formula transported to a rectangle of aspect ratio r."""
    return crossing_probability(rectangle_eta(r))


def carleson_crossing(x: float) -> float:
    """Crossing probability from AB to the segment XC of length x: simply x."""
    _check_unit_interval("x", x)
    return x


def strip_mean_crossings(ratio: float) -> float:
    """Long periodic strip: E[N_c] ~ 2 pi x'(1) (W/L) = (sqrt3 / 4)(W/L)."""
    if ratio < 0:
        raise DomainError(f"strip ratio must be non-negative, got {ratio}")
    return CONSTANTS.strip_slope * ratio


def x_prime_one() -> float:
    """d x / d Q at Q = 1, sqrt(3) / (8 pi)."""
    return CONSTANTS.x_prime_1
