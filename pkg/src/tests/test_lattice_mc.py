import math

import numpy as np
import pytest
from pydantic import ValidationError

from crossings.cft_formulas import (
    crossing_probability,
    mean_crossing_number,
    strip_mean_crossings,
)
from crossings.conformal_geometry import rectangle_eta
from crossings.errors import DomainError
from crossings.exact_enumeration import SmallGraph, crossing_prob_exact, enumerate_partition_set
from crossings.lattice_mc import (
    Arcs,
    LatticeKind,
    LatticeSpec,
    Shape,
    build_lattice,
    count_crossing_clusters,
    run_experiment,
    run_graph_experiment,
    run_trial,
    sample_counts,
    smirnov_h,
    strip_crossing_count,
)
from crossings.lattices import (
    graph_lattice,
    periodic_strip,
    square_bond_rectangle,
    triangle_sides,
    triangular_site_rectangle,
    triangular_site_triangle,
)
from crossings.seeding import derive_seed

SEED = 20240611


def _square(nx, ny, **kwargs) -> LatticeSpec:
    return LatticeSpec(kind=LatticeKind.square_bond, nx=nx, ny=ny, **kwargs)


def _triangular(nx, ny, **kwargs) -> LatticeSpec:
    return LatticeSpec(kind=LatticeKind.triangular_site, nx=nx, ny=ny, **kwargs)


def _four_sigma(p: float, n: int) -> float:
    return 4.0 * math.sqrt(p * (1.0 - p) / n)


def test_lattice_builders_sizes():
    square = square_bond_rectangle(3, 3)
    assert square.n_edges == 12
    assert square.aspect_ratio == 1.0
    assert list(square.gamma1) == [0, 3, 6]
    assert list(square.gamma2) == [2, 5, 8]

    tri = triangular_site_rectangle(4, 3)
    # 3 rows of 3 horizontal bonds, 2 row gaps of 4 + 3 diagonal bonds
    assert tri.n_edges == 3 * 3 + 2 * 7
    assert tri.aspect_ratio == pytest.approx(4.0 / (2.0 * math.sqrt(3.0) / 2.0))

    triangle = triangular_site_triangle(4)
    assert triangle.n_sites == 10
    # 3 * n (n - 1) / 2 bonds in a triangle of side n
    assert triangle.n_edges == 18
    sides = triangle_sides(4)
    assert sides.ab[-1] == sides.bc[-1]
    assert sides.ca[-1] == sides.bc[0]

    strip = periodic_strip("square_bond", 5, 4)
    assert strip.n_edges == 5 * 4 + 4 * 4
    assert strip.aspect_ratio == 1.0


def test_triangle_default_arcs_are_disjoint():
    triangle = triangular_site_triangle(5)
    sides = triangle_sides(5)
    apex = sides.ab[-1]
    assert not set(triangle.gamma1.tolist()) & set(triangle.gamma2.tolist())
    assert apex in triangle.gamma1 and apex not in triangle.gamma2

    # an open apex with every other site closed is not a crossing
    parent = np.arange(triangle.n_sites, dtype=np.int64)
    occupied = np.zeros(triangle.n_sites, dtype=np.uint8)
    occupied[apex] = 1
    mark = np.zeros(triangle.n_sites, dtype=np.int64)
    assert count_crossing_clusters(parent, occupied, triangle.gamma1, triangle.gamma2, mark, 1) == 0


def test_lattice_spec_validation():
    with pytest.raises(ValidationError):
        LatticeSpec(kind=LatticeKind.square_bond, shape=Shape.equilateral_triangle, nx=5)
    with pytest.raises(ValidationError):
        _square(4, 4, arcs=Arcs(gamma1=(0, 1), gamma2=(1, 2)))
    with pytest.raises(ValidationError):
        _square(4, 4, p=1.5)
    with pytest.raises(ValidationError):
        LatticeSpec(shape=Shape.periodic_strip, nx=2, ny=5)
    with pytest.raises(ValidationError):
        _square(4, 4, unknown=1)


@pytest.mark.parametrize("spec", [_square(6, 5), _triangular(6, 7)])
def test_trivial_probabilities(spec):
    closed = run_trial(spec.model_copy(update={"p": 0.0}), 1)
    assert (closed.crossed, closed.n_crossing_clusters) == (False, 0)
    open_ = run_trial(spec.model_copy(update={"p": 1.0}), 1)
    assert (open_.crossed, open_.n_crossing_clusters) == (True, 1)


def test_single_trial_experiment_reduces_to_run_trial():
    spec = _triangular(12, 14)
    for master in (0, 1, SEED):
        stats = run_experiment(spec, 1, master)
        trial = run_trial(spec, derive_seed(master, 0))
        assert stats.crossings == int(trial.crossed)
        assert stats.mean_nc == trial.n_crossing_clusters


def test_results_do_not_depend_on_workers():
    spec = _triangular(20, 23)
    reference = run_experiment(spec, 3000, SEED, workers=1, chunk_size=128)
    for workers in (4, 16):
        assert run_experiment(spec, 3000, SEED, workers=workers, chunk_size=128) == reference
    # chunking is a scheduling detail only
    assert run_experiment(spec, 3000, SEED, workers=3, chunk_size=1000) == reference


def test_crossed_iff_some_crossing_cluster():
    lattice = build_lattice(_square(8, 8))
    counts = sample_counts(lattice, 0.5, 2000, SEED)
    stats = run_experiment(_square(8, 8), 2000, SEED)
    assert stats.crossings == int(np.count_nonzero(counts))
    assert stats.mean_nc == pytest.approx(counts.mean())
    assert 0.0 <= stats.p_ci_low <= stats.p_hat <= stats.p_ci_high <= 1.0
    assert stats.mean_nc >= stats.p_hat


def test_coupled_sampling_is_monotone_in_p():
    lattice = build_lattice(_triangular(15, 17))
    low = sample_counts(lattice, 0.45, 1000, SEED) > 0
    high = sample_counts(lattice, 0.55, 1000, SEED) > 0
    assert np.all(high[low])
    assert high.sum() > low.sum()


def test_square_bond_self_duality():
    # (n + 1) x n sites crosses horizontally with probability exactly 1/2,
    # and so does its rotation n x (n + 1) vertically
    n, trials = 8, 4000
    horizontal = run_experiment(_square(n + 1, n), trials, SEED)
    vertical = run_experiment(_square(n, n + 1, crossing="vertical"), trials, SEED + 1)
    total = horizontal.p_hat + (1.0 - vertical.p_hat)
    assert abs(total - 1.0) <= 4.0 * math.sqrt(2 * 0.25 / trials)


def test_strip_trivial_probabilities():
    assert strip_crossing_count(6, 12, 0.0, 50, SEED).mean_nc == 0.0
    stats = strip_crossing_count(6, 12, 1.0, 50, SEED)
    assert stats.mean_nc == 1.0
    assert stats.effective_aspect_ratio == pytest.approx(12 / 5)


def test_explicit_arcs_override_the_edges():
    # two neighbouring sites as the arcs
    spec = _triangular(5, 5, arcs=Arcs(gamma1=(0,), gamma2=(1,)))
    lattice = build_lattice(spec)
    assert list(lattice.gamma1) == [0] and list(lattice.gamma2) == [1]
    stats = run_experiment(spec, 4000, SEED)
    # crossing iff both are open
    assert abs(stats.p_hat - 0.25) <= _four_sigma(0.25, 4000)


def test_graph_experiment_single_bond():
    lattice = graph_lattice(2, [(0, 1)], [0], [1])
    stats = run_graph_experiment(lattice, 0.37, 20_000, SEED)
    assert abs(stats.p_hat - 0.37) <= _four_sigma(0.37, 20_000)
    assert stats.mean_nc == stats.p_hat
    assert math.isnan(stats.effective_aspect_ratio)


def test_graph_experiment_rejects_site_lattices():
    with pytest.raises(DomainError):
        run_graph_experiment(triangular_site_triangle(4), 0.5, 10, SEED)


def test_mc_matches_enumeration_on_small_rectangle():
    graph = SmallGraph.from_lattice(square_bond_rectangle(3, 3))
    exact = crossing_prob_exact(enumerate_partition_set(graph, 0.5))
    stats = run_graph_experiment(graph.to_lattice(), 0.5, 20_000, SEED)
    assert abs(stats.p_hat - exact) <= _four_sigma(exact, 20_000)


def test_smirnov_empty_segment_and_validation():
    spec = LatticeSpec(shape=Shape.equilateral_triangle, nx=20)
    estimate = smirnov_h(spec, 0.0, 100, SEED)
    assert estimate.hits == 0 and estimate.h_hat == 0.0
    with pytest.raises(DomainError):
        smirnov_h(_triangular(10, 10), 0.5, 10, SEED)
    with pytest.raises(DomainError):
        smirnov_h(spec, 1.5, 10, SEED)


def test_smirnov_snaps_and_sees_exactly_one_crossing():
    spec = LatticeSpec(shape=Shape.equilateral_triangle, nx=24)
    estimate = smirnov_h(spec, 0.4, 2000, SEED)
    assert estimate.snapped_x == pytest.approx(10 / 24)
    # either an open AB-XC crossing or a closed CA-BX crossing, never both
    assert estimate.hits + estimate.dual_hits == estimate.trials


def test_seed_range_is_checked():
    with pytest.raises(ValueError):
        run_experiment(_square(4, 4), 10, -1)
    with pytest.raises(ValueError):
        run_experiment(_square(4, 4), 10, 2**64)
    with pytest.raises(DomainError):
        run_experiment(_square(4, 4), 0, SEED)


@pytest.mark.slow
def test_mc_oracle_at_a_million_trials():
    graph = SmallGraph.from_lattice(square_bond_rectangle(3, 3))
    exact = crossing_prob_exact(enumerate_partition_set(graph, 0.5))
    stats = run_graph_experiment(graph.to_lattice(), 0.5, 1_000_000, SEED, workers=4)
    assert abs(stats.p_hat - exact) <= _four_sigma(exact, 1_000_000)


@pytest.mark.slow
def test_cardy_square_and_mean_clusters():
    stats = run_experiment(_triangular(129, 150), 20_000, SEED, workers=4)
    assert stats.effective_aspect_ratio == pytest.approx(1.0, abs=1e-3)
    assert abs(stats.p_hat - 0.5) <= 0.02
    assert abs(stats.mean_nc - mean_crossing_number(0.5)) <= 0.05


@pytest.mark.slow
def test_cardy_aspect_ratio_two():
    stats = run_experiment(_triangular(129, 75), 20_000, SEED, workers=4)
    target = crossing_probability(rectangle_eta(stats.effective_aspect_ratio))
    assert stats.effective_aspect_ratio == pytest.approx(2.0, abs=0.02)
    assert abs(stats.p_hat - target) <= 0.02
    assert abs(crossing_probability(17.0 - 12.0 * math.sqrt(2.0)) - target) <= 0.01


@pytest.mark.slow
def test_strip_law():
    stats = strip_crossing_count(33, 192, 0.5, 20_000, SEED, workers=4)
    expected = strip_mean_crossings(stats.effective_aspect_ratio)
    assert stats.effective_aspect_ratio == 6.0
    assert abs(stats.mean_nc - expected) <= 0.1 * expected


@pytest.mark.slow
@pytest.mark.parametrize("x", [0.25, 0.5, 0.75])
def test_carleson_on_the_triangle(x):
    spec = LatticeSpec(shape=Shape.equilateral_triangle, nx=120)
    estimate = smirnov_h(spec, x, 20_000, SEED, workers=4)
    assert estimate.snapped_x == x
    assert abs(estimate.h_hat - x) <= 0.03


@pytest.mark.slow
def test_desk_scale_runs_are_reproducible_across_workers():
    spec = _triangular(129, 150)
    assert run_experiment(spec, 5000, SEED, workers=1) == run_experiment(
        spec, 5000, SEED, workers=8
    )
