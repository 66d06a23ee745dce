import os
import time

import numpy as np
import pytest

from conftest import chain_graph, random_graph
from core.affinity_graph import graph_from_affinity
from core.diffusion import (
    BeliefState, closed_form_solve, diffuse, propagate, smoothness_energy, warm_start_diffuse,
)
from core.error_handler import ConfigError, InvalidInjection, ShapeError, TooLargeForDense


def pair_graph():
    return graph_from_affinity(np.array([[0.0, 1.0], [1.0, 0.0]]), 1)


def test_two_node_case_converges_to_hand_solution():
    graph = pair_graph()
    np.testing.assert_allclose(diffuse(graph, [1.0, 0.0], beta=0.6, tol=1e-12), [0.625, 0.375], atol=1e-9)
    np.testing.assert_allclose(closed_form_solve(graph, [1.0, 0.0], beta=0.6), [0.625, 0.375], atol=1e-12)


def test_zero_injection_stays_zero():
    graph = chain_graph(4)
    assert np.all(diffuse(graph, np.zeros(4)) == 0)
    assert np.all(closed_form_solve(graph, np.zeros(4)) == 0)


def test_isolated_nodes_keep_scaled_injection():
    graph = graph_from_affinity(np.zeros((3, 3)), 2)
    y = np.array([0.2, 0.0, 1.0])
    belief, _ = propagate(graph, y, beta=0.6, max_iters=1, tol=None)
    np.testing.assert_allclose(belief, 0.4 * y)
    np.testing.assert_allclose(diffuse(graph, y, beta=0.6), 0.4 * y)


def test_vanishing_beta_returns_injection():
    y = np.array([0.3, 0.9, 0.1])
    np.testing.assert_allclose(closed_form_solve(chain_graph(3), y, beta=1e-9), y, atol=1e-8)


def test_iteration_matches_closed_form_on_random_graphs():
    rng = np.random.default_rng(17)
    for _ in range(100):
        k = int(rng.integers(2, 51))
        graph = random_graph(rng, k, int(rng.integers(1, 9)))
        y = rng.random(k) * (rng.random(k) < 0.3)
        iterative = diffuse(graph, y, beta=0.6, tol=1e-7, max_iters=5000)
        exact = closed_form_solve(graph, y, beta=0.6)
        assert np.max(np.abs(iterative - exact)) < 1e-6


def test_warm_start_after_one_injection_change_matches_cold_start():
    rng = np.random.default_rng(4)
    for _ in range(100):
        k = int(rng.integers(2, 21))
        graph = random_graph(rng, k, 4)
        y = rng.random(k)
        converged = diffuse(graph, y, tol=1e-10, max_iters=5000)
        changed = y.copy()
        changed[int(rng.integers(k))] = rng.random()
        warm = warm_start_diffuse(graph, converged, changed, tol=1e-8, max_iters=5000)
        cold = diffuse(graph, changed, tol=1e-8, max_iters=5000)
        assert np.max(np.abs(warm - cold)) < 1e-5


def test_warm_start_from_fixed_point_returns_at_once():
    graph = chain_graph(5)
    y = np.array([1.0, 0.0, 0.0, 0.5, 0.0])
    fixed = closed_form_solve(graph, y)
    belief, iterations = propagate(graph, y, tol=1e-6, initial=fixed)
    assert iterations == 1
    np.testing.assert_allclose(belief, fixed, atol=1e-6)


def test_production_mode_runs_exact_iteration_count():
    _, iterations = propagate(chain_graph(5), np.ones(5), max_iters=7, tol=None)
    assert iterations == 7


def test_error_decays_geometrically():
    rng = np.random.default_rng(9)
    graph = random_graph(rng, 30, 6)
    y = rng.random(30)
    exact = closed_form_solve(graph, y)
    errors = [np.linalg.norm(propagate(graph, y, max_iters=t, tol=None)[0] - exact) for t in range(1, 12)]
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    assert errors[-1] < errors[0] * 0.6 ** 5


def test_fixed_point_minimizes_energy():
    rng = np.random.default_rng(1)
    graph = random_graph(rng, 12, 4)
    y = rng.random(12)
    best = closed_form_solve(graph, y)
    base = smoothness_energy(graph, best, y)
    for _ in range(20):
        assert smoothness_energy(graph, best + 1e-3 * rng.standard_normal(12), y) >= base - 1e-12


def test_belief_norm_bounds():
    rng = np.random.default_rng(12)
    for _ in range(50):
        k = int(rng.integers(2, 30))
        graph = random_graph(rng, k, 5)
        y = rng.random(k)
        f = closed_form_solve(graph, y)
        assert np.linalg.norm(f) <= np.linalg.norm(y) + 1e-9
        assert np.max(np.abs(f)) <= np.max(np.abs(y)) / (1 - 0.6) + 1e-9


def test_raising_one_injection_never_lowers_belief():
    rng = np.random.default_rng(21)
    for _ in range(20):
        graph = random_graph(rng, 15, 4)
        y = rng.random(15)
        bumped = y.copy()
        bumped[int(rng.integers(0, 15))] += 0.5
        assert np.all(closed_form_solve(graph, bumped) >= closed_form_solve(graph, y) - 1e-12)


def test_input_errors():
    graph = chain_graph(3)
    with pytest.raises(ShapeError):
        diffuse(graph, np.zeros(4))
    with pytest.raises(InvalidInjection):
        diffuse(graph, [0.0, np.nan, 0.0])
    with pytest.raises(ConfigError):
        diffuse(graph, np.zeros(3), beta=1.0)
    with pytest.raises(TooLargeForDense):
        closed_form_solve(graph, np.zeros(3), dense_cap=2)


def test_belief_state_top_breaks_ties_by_node():
    state = BeliefState.initial(4, seed_belief=[0.5, 0.9, 0.5, 0.1], facets=2)
    assert state.top(3) == [(1, 0.9), (0, 0.5), (2, 0.5)]
    assert state.unresolved_facets == {0, 1}
    assert not state.visited.any()


@pytest.mark.bench
@pytest.mark.skipif(not os.environ.get("DETECTIVE_RUN_BENCH"), reason="set DETECTIVE_RUN_BENCH=1")
def test_iteration_cost_scales_linearly():
    rng = np.random.default_rng(0)

    def per_iteration(k):
        graph = random_graph(rng, k, 8)
        y = rng.random(k)
        start = time.perf_counter()
        propagate(graph, y, max_iters=200, tol=None)
        return (time.perf_counter() - start) / 200

    small, large = per_iteration(2000), per_iteration(4000)
    assert large / small < 3.0
