"""
Hitting race of two boundary points under chordal Loewner evolution.

Only the real trajectories x- = g_t(-a) and x+ = g_t(b) are evolved,

    dx = 2 dt / (x - W_t),    dW = sqrt(kappa) dB,

until one of them is swallowed by the hull, i.e. its gap to the driving
point closes. At kappa = 6 the probability that -a goes first is the
crossing probability of the cross-ratio b / (a + b).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit
from pydantic import Field

from config.base import StrictModel
from crossings.conformal_geometry import half_plane_eta
from crossings.errors import DomainError
from crossings.parallel import run_chunked
from crossings.seeding import counter_normal, derive_key, derive_seed
from crossings.statistics import wilson_interval

logger = logging.getLogger(__name__)

KAPPA_PERCOLATION = 6.0
DT0_SCALE = 1e-3
EPS_SCALE = 1e-4
# a step of c_gap gap^2 / 2 moves the driving point by sqrt(3 c_gap) gap
C_GAP = 5e-3
# the no-swallow probability decays only like (a + b) / sqrt(t)
T_MAX_SCALE = 1e6
UNRESOLVED_WARN_FRACTION = 0.01

_LEFT, _RIGHT, _UNRESOLVED = 0, 1, 2


class Winner(str, Enum):
    left_first = "left_first"
    right_first = "right_first"
    unresolved = "unresolved"


_WINNERS = (Winner.left_first, Winner.right_first, Winner.unresolved)


class SleParams(StrictModel):
    """
    Discretisation of the race. Unset dt0, eps_swallow and t_max are scaled
    to the race: 1e-3 (a+b)^2, 1e-4 (a+b) and 1e6 (a+b)^2.

    With ``adaptive`` the step is min(dt0 (D/(a+b))^2, c_gap gap^2 / 2), D being
    the current separation x+ - x-, so steps follow the scale of the hull.
    Near a swallow each step moves the driving point by about
    sqrt(3 c_gap) gap; overshooting the gap biases the race towards the
    nearer point, roughly in proportion to that fraction. Without
    ``adaptive`` every step is dt0, which is only practical with an explicit
    short t_max.
    """

    kappa: float = Field(default=KAPPA_PERCOLATION, ge=0.0)
    dt0: Optional[float] = Field(default=None, gt=0.0)
    eps_swallow: Optional[float] = Field(default=None, gt=0.0)
    t_max: Optional[float] = Field(default=None, gt=0.0)
    adaptive: bool = True
    c_gap: float = Field(default=C_GAP, gt=0.0, le=1.0)

    def resolve(self, a: float, b: float) -> "SleParams":
        scale = a + b
        return self.model_copy(
            update={
                "dt0": self.dt0 if self.dt0 is not None else DT0_SCALE * scale**2,
                "eps_swallow": (
                    self.eps_swallow if self.eps_swallow is not None else EPS_SCALE * scale
                ),
                "t_max": self.t_max if self.t_max is not None else T_MAX_SCALE * scale**2,
            }
        )


@dataclass(frozen=True)
class HitResult:
    """Outcome of one race; a point never swallowed has swallow time inf."""

    winner: Winner
    t_left: float
    t_right: float
    x_left: float
    x_right: float
    drive: float
    n_steps: int


class SleEstimate(StrictModel):
    a: float
    b: float
    eta: float
    kappa: float
    n: int
    left_first: int
    right_first: int
    unresolved: int
    p_hat: float
    ci_low: float
    ci_high: float
    unresolved_fraction: float
    dt0: float
    eps_swallow: float
    t_max: float
    master_seed: int


@njit(cache=True, nogil=True)
def _race(a, b, kappa, dt0, eps, t_max, c_gap, adaptive, key):
    x_left = -a
    x_right = b
    drive = 0.0
    t = 0.0
    step = 0
    scale2 = (a + b) * (a + b)
    sqrt_kappa = math.sqrt(kappa)
    while t < t_max:
        gap_left = drive - x_left
        gap_right = x_right - drive
        if adaptive:
            width = x_right - x_left
            dt = min(dt0 * width * width / scale2, 0.5 * c_gap * min(gap_left, gap_right) ** 2)
        else:
            dt = dt0
        dt = min(dt, t_max - t)

        x_left += 2.0 * dt / (x_left - drive)
        x_right += 2.0 * dt / (x_right - drive)
        drive += sqrt_kappa * math.sqrt(dt) * counter_normal(key, np.uint64(step))
        t += dt
        step += 1

        # a gap that went negative crossed the driving point within the step
        gap_left = drive - x_left
        gap_right = x_right - drive
        left_hit = gap_left <= eps
        right_hit = gap_right <= eps
        if left_hit or right_hit:
            if left_hit and (not right_hit or gap_left <= gap_right):
                return _LEFT, t, math.inf, x_left, x_right, drive, step
            return _RIGHT, math.inf, t, x_left, x_right, drive, step
    return _UNRESOLVED, math.inf, math.inf, x_left, x_right, drive, step


@njit(cache=True, nogil=True)
def _race_batch(a, b, kappa, dt0, eps, t_max, c_gap, adaptive, master_seed, start, stop, out):
    for i in range(start, stop):
        key = derive_key(master_seed, np.uint64(i))
        out[i] = _race(a, b, kappa, dt0, eps, t_max, c_gap, adaptive, key)[0]


def _check_endpoints(a: float, b: float):
    if not (a > 0 and b > 0):
        raise DomainError(f"race endpoints must be positive, got a={a}, b={b}")


def simulate_race(a: float, b: float, params: SleParams, seed: int) -> HitResult:
    """Race of -a against b driven by the counter-based normals keyed by seed."""
    _check_endpoints(a, b)
    p = params.resolve(a, b)
    code, t_left, t_right, x_left, x_right, drive, n_steps = _race(
        float(a),
        float(b),
        p.kappa,
        p.dt0,
        p.eps_swallow,
        p.t_max,
        p.c_gap,
        p.adaptive,
        np.uint64(seed),
    )
    return HitResult(
        winner=_WINNERS[code],
        t_left=t_left,
        t_right=t_right,
        x_left=x_left,
        x_right=x_right,
        drive=drive,
        n_steps=int(n_steps),
    )


def estimate_left_first(
    a: float,
    b: float,
    n_traces: int,
    params: Optional[SleParams] = None,
    master_seed: int = 0,
    workers: int = 1,
    chunk_size: int = 256,
) -> SleEstimate:
    """
    Fraction of resolved races in which -a is swallowed first.

    Trace i runs with seed derive_seed(master_seed, i), so the estimate does
    not depend on the worker count. Unresolved traces are counted separately
    and excluded from the estimate; a warning is logged when they reach 1%.
    """
    _check_endpoints(a, b)
    if n_traces < 1:
        raise DomainError(f"n_traces must be >= 1, got {n_traces}")
    derive_seed(master_seed, 0)
    p = (params or SleParams()).resolve(a, b)
    logger.info(
        f"Racing {n_traces} traces for a={a}, b={b} (kappa={p.kappa}, dt0={p.dt0:.3e}, "
        f"eps={p.eps_swallow:.3e}, t_max={p.t_max:.3e}, seed={master_seed}, workers={workers})",
        extra={"master_seed": master_seed, "workers": workers, "n_trials": n_traces},
    )

    out = np.empty(n_traces, dtype=np.int8)
    seed = np.uint64(master_seed)
    run_chunked(
        lambda start, stop: _race_batch(
            float(a),
            float(b),
            p.kappa,
            p.dt0,
            p.eps_swallow,
            p.t_max,
            p.c_gap,
            p.adaptive,
            seed,
            start,
            stop,
            out,
        ),
        n_traces,
        workers=workers,
        chunk_size=chunk_size,
    )

    left = int(np.count_nonzero(out == _LEFT))
    right = int(np.count_nonzero(out == _RIGHT))
    unresolved = n_traces - left - right
    resolved = left + right
    unresolved_fraction = unresolved / n_traces
    if unresolved_fraction >= UNRESOLVED_WARN_FRACTION:
        logger.warning(
            f"{unresolved} of {n_traces} traces unresolved at t_max={p.t_max:.3e} "
            f"({unresolved_fraction:.2%})"
        )

    p_hat = left / resolved if resolved else math.nan
    low, high = wilson_interval(left, resolved)
    logger.info(f"P(left first) = {p_hat:.6f} [{low:.6f}, {high:.6f}]")
    return SleEstimate(
        a=a,
        b=b,
        eta=half_plane_eta(a, b),
        kappa=p.kappa,
        n=n_traces,
        left_first=left,
        right_first=right,
        unresolved=unresolved,
        p_hat=p_hat,
        ci_low=low,
        ci_high=high,
        unresolved_fraction=unresolved_fraction,
        dt0=p.dt0,
        eps_swallow=p.eps_swallow,
        t_max=p.t_max,
        master_seed=master_seed,
    )
