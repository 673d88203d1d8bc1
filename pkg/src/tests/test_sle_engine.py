import logging
import math

import pytest
from pydantic import ValidationError

from crossings.cft_formulas import crossing_probability
from crossings.errors import DomainError
from crossings.sle_engine import (
    C_GAP,
    DT0_SCALE,
    SleParams,
    Winner,
    estimate_left_first,
    simulate_race,
)

SEED = 77


def _combined_sigma(p1: float, n1: int, p2: float, n2: int) -> float:
    return math.sqrt(p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2)


def test_scaled_defaults():
    params = SleParams().resolve(1.0, 3.0)
    assert params.dt0 == pytest.approx(16e-3)
    assert params.eps_swallow == pytest.approx(4e-4)
    assert params.t_max == pytest.approx(16e6)
    assert params.c_gap == C_GAP
    explicit = SleParams(dt0=1e-2, t_max=5.0).resolve(1.0, 3.0)
    assert (explicit.dt0, explicit.t_max) == (1e-2, 5.0)


def test_params_validation():
    with pytest.raises(ValidationError):
        SleParams(kappa=-1.0)
    with pytest.raises(ValidationError):
        SleParams(dt0=0.0)
    with pytest.raises(DomainError):
        simulate_race(0.0, 1.0, SleParams(), SEED)


def test_frozen_driving_follows_the_closed_form():
    # with W = 0, x_t = sqrt(x_0^2 + 4 t) and nothing is ever swallowed
    t_max = 2.0
    result = simulate_race(1.0, 2.0, SleParams(kappa=0.0, t_max=t_max), SEED)
    assert result.winner == Winner.unresolved
    assert result.t_left == result.t_right == math.inf
    assert result.drive == 0.0
    assert result.x_left == pytest.approx(-math.sqrt(1.0 + 4.0 * t_max), rel=5e-3)
    assert result.x_right == pytest.approx(math.sqrt(4.0 + 4.0 * t_max), rel=5e-3)


def test_race_is_deterministic_and_consistent():
    params = SleParams()
    for seed in range(20):
        first = simulate_race(1.0, 1.0, params, seed)
        assert simulate_race(1.0, 1.0, params, seed) == first
        if first.winner == Winner.left_first:
            assert first.t_left < first.t_right == math.inf
        elif first.winner == Winner.right_first:
            assert first.t_right < first.t_left == math.inf
        assert first.n_steps > 0


def test_winner_gap_is_closed():
    params = SleParams().resolve(1.0, 1.0)
    for seed in range(10):
        result = simulate_race(1.0, 1.0, params, seed)
        if result.winner == Winner.left_first:
            assert result.drive - result.x_left <= params.eps_swallow
        elif result.winner == Winner.right_first:
            assert result.x_right - result.drive <= params.eps_swallow


def test_symmetric_race_is_fair():
    estimate = estimate_left_first(1.0, 1.0, 2000, master_seed=SEED)
    assert estimate.eta == 0.5
    assert abs(estimate.p_hat - 0.5) <= 4.0 * math.sqrt(0.25 / 2000)
    assert estimate.unresolved_fraction < 0.01


def test_estimate_does_not_depend_on_workers():
    serial = estimate_left_first(1.0, 2.0, 400, master_seed=SEED, workers=1, chunk_size=50)
    threaded = estimate_left_first(1.0, 2.0, 400, master_seed=SEED, workers=4, chunk_size=50)
    assert serial == threaded


def test_short_horizon_warns_about_unresolved_traces(caplog):
    with caplog.at_level(logging.WARNING, logger="crossings.sle_engine"):
        estimate = estimate_left_first(1.0, 1.0, 200, SleParams(t_max=1e-3), master_seed=SEED)
    assert estimate.unresolved > 0
    assert estimate.left_first + estimate.right_first + estimate.unresolved == 200
    assert "unresolved" in caplog.text


def test_estimate_rejects_empty_runs():
    with pytest.raises(DomainError):
        estimate_left_first(1.0, 1.0, 0)


@pytest.mark.slow
def test_hitting_law_reproduces_cardy_for_every_seed():
    target = crossing_probability(0.75)
    left = resolved = 0
    for offset in range(8):
        estimate = estimate_left_first(1.0, 3.0, 5000, master_seed=SEED + offset, workers=4)
        assert estimate.eta == 0.75
        assert abs(estimate.p_hat - target) <= 0.03
        assert estimate.unresolved_fraction < 0.01
        left += estimate.left_first
        resolved += estimate.left_first + estimate.right_first
    # pooled over 40 000 traces the discretisation bias stays under half the tolerance
    assert abs(left / resolved - target) <= 0.015


@pytest.mark.slow
def test_symmetric_race_at_full_size():
    estimate = estimate_left_first(1.0, 1.0, 5000, master_seed=SEED, workers=4)
    assert abs(estimate.p_hat - 0.5) <= 0.02


@pytest.mark.slow
def test_halving_the_step_stays_within_noise():
    coarse = estimate_left_first(1.0, 3.0, 5000, master_seed=SEED, workers=4)
    fine = estimate_left_first(
        1.0,
        3.0,
        5000,
        SleParams(dt0=0.5 * DT0_SCALE * 16.0, c_gap=0.5 * C_GAP),
        master_seed=SEED,
        workers=4,
    )
    assert fine.dt0 == 0.5 * coarse.dt0
    sigma = _combined_sigma(coarse.p_hat, 5000, fine.p_hat, 5000)
    assert abs(coarse.p_hat - fine.p_hat) <= 3.0 * sigma


@pytest.mark.slow
def test_scale_invariance():
    small = estimate_left_first(1.0, 2.0, 5000, master_seed=SEED, workers=4)
    large = estimate_left_first(10.0, 20.0, 5000, master_seed=SEED + 1, workers=4)
    sigma = _combined_sigma(small.p_hat, 5000, large.p_hat, 5000)
    assert abs(small.p_hat - large.p_hat) <= 3.0 * sigma


@pytest.mark.slow
def test_relabelling_symmetry():
    left = estimate_left_first(1.0, 1.0 / 3.0, 5000, master_seed=SEED, workers=4)
    right = estimate_left_first(1.0 / 3.0, 1.0, 5000, master_seed=SEED + 1, workers=4)
    sigma = _combined_sigma(left.p_hat, 5000, right.p_hat, 5000)
    assert abs(left.p_hat - (1.0 - right.p_hat)) <= 3.0 * sigma
