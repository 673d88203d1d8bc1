"""
Scalar special-function kernels.

Log-gamma, the Gauss hypergeometric series, the (1/3, 1/3) regularized
incomplete beta, the complete elliptic integral of the first kind and the
fourth power of the Dedekind eta function on the imaginary axis and the
Jacobi theta constants. Every
closed-form crossing prediction in the package is assembled from these.

All functions are pure; tolerances in the docstrings are contractual.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from scipy import integrate, special

from crossings.errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

SERIES_TERM_CAP = 100_000
_SERIES_RTOL = 1e-17
_AGM_MAX_ITER = 64
_ETA_PRODUCT_TOL = 1e-17
_THETA_TERM_TOL = 1e-17
ETA4_MIN_R = 1e-3


@dataclass(frozen=True)
class HypergeometricParams:
    """Parameters (a, b; c) of the Gauss series 2F1."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.c <= 0 and float(self.c).is_integer():
            raise DomainError(
                f"2F1 parameter c={self.c} is zero or a negative integer"
            )


def ln_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0, relative error below 1e-13."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return float(special.gammaln(x))


def gamma(x: float) -> float:
    """Gamma on the real line, including negative non-integers."""
    if x <= 0 and float(x).is_integer():
        raise DomainError(f"gamma has a pole at x={x}")
    return float(special.gamma(x))


def _gauss_series(a: float, b: float, c: float, z: float) -> float:
    total = 1.0
    term = 1.0
    small_terms = 0
    for n in range(SERIES_TERM_CAP):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if term == 0.0:
            return total
        # two consecutive negligible terms guard against a near-zero factor
        if abs(term) <= _SERIES_RTOL * abs(total):
            small_terms += 1
            if small_terms == 2:
                return total
        else:
            small_terms = 0

    bound = abs(term) * z / (1.0 - z) if z < 1.0 else math.inf
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) exceeded {SERIES_TERM_CAP} terms",
        partial=total,
        bound=bound,
    )


def _gauss_connection(a: float, b: float, c: float, z: float) -> float:
    # 2F1 at z expressed through series in 1 - z; s = c - a - b non-integer
    s = c - a - b
    w = 1.0 - z
    # rgamma vanishes at the poles, which covers terminating a or b
    direct = (
        special.gamma(c)
        * special.gamma(s)
        * special.rgamma(c - a)
        * special.rgamma(c - b)
    )
    singular = (
        special.gamma(c) * special.gamma(-s) * special.rgamma(a) * special.rgamma(b)
    )
    value = 0.0
    if direct != 0.0:
        value += direct * _gauss_series(a, b, 1.0 - s, w)
    if singular != 0.0:
        value += singular * w**s * _gauss_series(c - a, c - b, 1.0 + s, w)
    return float(value)


def gauss_2f1(params: HypergeometricParams, z: float) -> float:
    """
    Gauss hypergeometric function 2F1(a, b; c; z) for 0 <= z < 1.

    The raw series is summed for z <= 1/2. Above that the connection formula
    to argument 1 - z is used, which needs c - a - b to be a non-integer.

    Args:
        params: series parameters (a, b; c)
        z: real argument in [0, 1)

    Returns:
        2F1 value to relative tolerance 1e-13
    """
    if not 0.0 <= z < 1.0:
        raise DomainError(f"gauss_2f1 requires 0 <= z < 1, got {z}")

    a, b, c = params.a, params.b, params.c
    if z <= 0.5:
        return _gauss_series(a, b, c, z)

    s = c - a - b
    if float(s).is_integer():
        raise DomainError(
            f"connection formula needs non-integer c-a-b, got {s} (logarithmic case)"
        )
    return _gauss_connection(a, b, c, z)


def _beta13_head(x: float) -> float:
    # t = u**3 removes the t**(-2/3) endpoint singularity; x <= 1/2 keeps
    # the remaining (1 - u**3)**(-2/3) factor smooth
    value, _ = integrate.quad(
        lambda u: 3.0 * (1.0 - u**3) ** (-2.0 / 3.0),
        0.0,
        float(special.cbrt(x)),
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    return value


def incomplete_beta_13(x: float) -> float:
    """
    Regularized incomplete beta I(x; 1/3, 1/3), absolute tolerance 1e-11.

    Evaluated by quadrature of (t(1-t))^(-2/3) after the substitution
    t = u^3, folding x > 1/2 onto 1 - x through the t <-> 1-t symmetry.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete_beta_13 requires 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0

    norm = float(special.beta(1.0 / 3.0, 1.0 / 3.0))
    if x <= 0.5:
        return _beta13_head(x) / norm
    return 1.0 - _beta13_head(1.0 - x) / norm


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two non-negative numbers."""
    if a < 0 or b < 0:
        raise DomainError(f"agm requires non-negative arguments, got {a}, {b}")
    if a == 0.0 or b == 0.0:
        return 0.0
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= 4.0 * math.ulp(max(a, b)):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def elliptic_k_complementary(mc: float) -> float:
    """K as a function of the complementary parameter mc = 1 - m, 0 < mc <= 1."""
    if not 0.0 < mc <= 1.0:
        raise DomainError(f"complementary parameter must lie in (0, 1], got {mc}")
    return math.pi / (2.0 * agm(1.0, math.sqrt(mc)))


def elliptic_k(m: float) -> float:
    """
    Complete elliptic integral of the first kind K(m), parameter m = k^2.

    Computed as pi / (2 AGM(1, sqrt(1 - m))), relative error below 1e-14.
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic_k requires 0 <= m < 1, got {m}")
    return elliptic_k_complementary(1.0 - m)


def dedekind_eta4(r: float) -> float:
    """
    Fourth power of the Dedekind eta function at tau = i r.

    eta(ir)^4 = q^(1/6) prod (1 - q^n)^4 with q = exp(-2 pi r); the product
    stops once q^n drops below 1e-17. Arguments r < 1e-3 are rejected: the
    product converges too slowly there and the modular reflection belongs
    to the caller.
    """
    if not r > 0:
        raise DomainError(f"dedekind_eta4 requires r > 0, got {r}")
    if r < ETA4_MIN_R:
        raise DomainError(
            f"dedekind_eta4 rejects r={r} < {ETA4_MIN_R}; use the modular reflection"
        )

    q = math.exp(-2.0 * math.pi * r)
    log_product = 0.0
    qn = q
    while qn >= _ETA_PRODUCT_TOL:
        log_product += math.log1p(-qn)
        qn *= q
    return math.exp(-math.pi * r / 3.0 + 4.0 * log_product)


def theta_constants(q: float) -> Tuple[float, float, float]:
    """
    Jacobi theta constants (theta_2, theta_3, theta_4) at nome q in [0, 1).

        theta_2 = 2 q^(1/4) sum_{n>=0} q^(n(n+1))
        theta_3 = 1 + 2 sum_{n>=1} q^(n^2)
        theta_4 = 1 + 2 sum_{n>=1} (-1)^n q^(n^2)

    The series stop once a term falls below 1e-17 of the sum; for
    q <= exp(-pi) that takes four terms.
    """
    if not 0.0 <= q < 1.0:
        raise DomainError(f"theta_constants requires 0 <= q < 1, got {q}")

    pairs = 0.0
    squares = 0.0
    alternating = 0.0
    for n in range(SERIES_TERM_CAP):
        pair = q ** (n * (n + 1))
        square = q ** ((n + 1) ** 2)
        pairs += pair
        squares += square
        alternating += square if n % 2 else -square
        if pair <= _THETA_TERM_TOL * pairs:
            break
    else:
        raise ConvergenceError(
            f"theta constants at q={q} exceeded {SERIES_TERM_CAP} terms",
            partial=pairs,
            bound=pair / (1.0 - q),
        )
    return 2.0 * q**0.25 * pairs, 1.0 + 2.0 * squares, 1.0 + 2.0 * alternating
