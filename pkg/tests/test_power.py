import numpy as np
import pytest

from lte_appsched.channel import RbGrid
from lte_appsched.power import (
    AggregatedGains,
    PowerAllocation,
    aggregate_gains,
    all_cell_sinr,
    cell_sinr,
    default_alpha,
    gradient_Y,
    iterate_power,
    objective_Y,
    power_update,
    ue_rates,
)
from lte_appsched.utility import Logarithmic, Sigmoidal


def random_instance(rng, n_cells=2, n_rbs=4, n_ues=3):
    """Small multi-cell instance whose implied rates are comfortably positive."""
    g = rng.uniform(0.05, 0.5, size=(n_cells, n_cells, n_rbs))
    for b in range(n_cells):
        g[b, b] = rng.uniform(1.0, 3.0, size=n_rbs)
    gains = AggregatedGains(g, rng.uniform(0.05, 0.2, size=(n_cells, n_rbs)))
    serving = np.arange(n_ues) % n_cells
    phi = np.zeros((n_ues, n_rbs))
    for b in range(n_cells):
        members = np.flatnonzero(serving == b)
        phi[members] = rng.dirichlet(np.ones(len(members)), size=n_rbs).T
    utilities = [Sigmoidal(rng.uniform(0.5, 2), rng.uniform(0.5, 2)) if i % 2 == 0
                 else Logarithmic(rng.uniform(0.5, 5), 10.0) for i in range(n_ues)]
    P = rng.uniform(0.2, 1.0, size=(n_cells, n_rbs))
    return P, phi, gains, utilities, serving


# ------------------------------------------------------------------- SINR

def test_sinr_single_cell_unit():
    gains = AggregatedGains(np.ones((1, 1, 1)), np.full((1, 1), 2.0))
    assert cell_sinr(np.full((1, 1), 2.0), gains, 0, 0) == 1.0
    assert cell_sinr(np.zeros((1, 1)), gains, 0, 0) == 0.0


def test_sinr_two_cells():
    g = np.array([[[1.0], [0.5]], [[0.5], [1.0]]])
    gains = AggregatedGains(g, np.ones((2, 1)))
    P = np.full((2, 1), 2.0)
    assert cell_sinr(P, gains, 0, 0) == 1.0
    np.testing.assert_allclose(all_cell_sinr(P, gains), [[1.0], [1.0]])


def test_aggregated_gains_must_be_positive():
    with pytest.raises(ValueError):
        AggregatedGains(np.zeros((1, 1, 1)), np.ones((1, 1)))


def test_aggregate_mean_and_median():
    gain = np.array([[[1.0], [0.1]], [[3.0], [0.3]], [[0.2], [2.0]]])
    noise = np.array([[1.0], [3.0], [5.0]])
    serving = np.array([0, 0, 1])
    agg = aggregate_gains(gain, noise, serving, 2)
    np.testing.assert_allclose(agg.g[0], [[2.0], [0.2]])
    np.testing.assert_allclose(agg.n[0], [2.0])
    np.testing.assert_allclose(agg.g[1], [[0.2], [2.0]])
    med = aggregate_gains(gain, noise, np.array([0, 0, 0]), 1, "median")
    np.testing.assert_allclose(med.g[0], [[1.0], [0.3]])


# -------------------------------------------------------------- objective

def test_objective_single_ue_collapses():
    gains = AggregatedGains(np.full((1, 1, 1), 3.0), np.ones((1, 1)))
    u = Logarithmic(2.0, 10.0)
    y = objective_Y(np.ones((1, 1)), np.ones((1, 1)), gains, [u], np.array([0]), 1.5)
    assert y == pytest.approx(np.log(u.value(1.5 * np.log2(4.0))), rel=1e-14)


def test_objective_minus_inf_when_a_rate_is_zero():
    gains = AggregatedGains(np.ones((1, 1, 2)), np.ones((1, 2)))
    phi = np.array([[1.0, 1.0], [0.0, 0.0]])
    y = objective_Y(np.ones((1, 2)), phi, gains, [Logarithmic(1), Logarithmic(1)], np.array([0, 0]))
    assert y == -np.inf


def test_objective_approaches_zero_from_below():
    # each UE gets 4 * 0.5 * log2(1 + 1023) = 20 rate units, far above b
    gains = AggregatedGains(np.full((1, 1, 4), 1023.0), np.ones((1, 4)))
    phi = np.full((2, 4), 0.5)
    y = objective_Y(np.ones((1, 4)), phi, gains, [Sigmoidal(1, 3), Sigmoidal(0.8, 2)], np.array([0, 0]), 1.0)
    assert -1e-6 < y < 0


def test_raising_other_cell_power_hurts_the_other_cell():
    rng = np.random.default_rng(3)
    P, phi, gains, us, serving = random_instance(rng)
    members = serving == 1
    before = ue_rates(P, phi, gains, serving, 1.0)[members]
    P2 = P.copy()
    P2[0] *= 2
    after = ue_rates(P2, phi, gains, serving, 1.0)[members]
    assert np.all(after <= before)


# --------------------------------------------------------------- gradient

def finite_difference(P, phi, gains, us, serving, W, budget=1.0):
    h = 1e-7 * budget
    fd = np.empty_like(P)
    for idx in np.ndindex(P.shape):
        up, dn = P.copy(), P.copy()
        up[idx] += h
        dn[idx] -= h
        fd[idx] = (objective_Y(up, phi, gains, us, serving, W) - objective_Y(dn, phi, gains, us, serving, W)) / (2 * h)
    return fd


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    P, phi, gains, us, serving = random_instance(rng)
    W = rng.uniform(0.5, 2.0)
    analytic = gradient_Y(P, phi, gains, us, serving, W)
    fd = finite_difference(P, phi, gains, us, serving, W)
    rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-12)
    assert rel.max() < 1e-5
    assert gradient_Y(P, phi, gains, us, serving, W, b=1, rb=2) == analytic[1, 2]


def test_gradient_single_cell_positive():
    rng = np.random.default_rng(5)
    P, phi, gains, us, serving = random_instance(rng, n_cells=1)
    assert np.all(gradient_Y(P, phi, gains, us, serving) > 0)


def test_gradient_zero_on_unused_rb():
    rng = np.random.default_rng(6)
    P, phi, gains, us, serving = random_instance(rng, n_cells=1)
    phi[:, 2] = 0.0
    assert gradient_Y(P, phi, gains, us, serving)[0, 2] == 0.0


# ------------------------------------------------------------- projection

def test_update_zero_gradient_is_identity():
    P = np.array([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(power_update(P, np.zeros(3), 0.5, 1.0), P)


def test_update_rescales_to_budget():
    out = power_update(np.array([0.5, 1.0, 0.5]), np.array([0.5, 1.0, 0.5]), 1.0, 2.0)
    np.testing.assert_allclose(out, [0.5, 1.0, 0.5])
    assert out.sum() == pytest.approx(2.0, abs=1e-15)


def test_update_small_step_keeps_sum():
    W = 3.0
    out = power_update(np.array([0.4, 0.4]) * W, np.array([1.0, -1.0]), 1e-2, W)
    assert out[0] > 0.4 * W > out[1]
    assert out.sum() <= W


def test_update_clamps_negative():
    out = power_update(np.array([0.1, 0.5]), np.array([-10.0, 0.0]), 1.0, 1.0)
    np.testing.assert_array_equal(out, [0.0, 0.5])


def test_update_rejects_bad_parameters():
    with pytest.raises(ValueError):
        power_update(np.ones(2), np.ones(2), -1.0, 1.0)
    with pytest.raises(ValueError):
        power_update(np.ones(2), np.ones(2), 1.0, 0.0)


def test_randomized_projection_suite():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = rng.integers(1, 12)
        W = rng.uniform(0.1, 50)
        P = rng.dirichlet(np.ones(n)) * W * rng.uniform(0, 1)
        out = power_update(P, rng.normal(0, W, n), rng.uniform(0, 2), W)
        assert out.min() >= 0
        assert out.sum() <= W + 1e-12


def test_allocation_feasibility_helper():
    grid = RbGrid(2, 2)
    alloc = PowerAllocation(np.array([[0.5, 0.5, 1.0, 0.1]]), 1.0, grid)
    np.testing.assert_allclose(alloc.slot_sums(), [[1.0, 1.1]])
    assert not alloc.is_feasible()


# ---------------------------------------------------------------- iteration

def test_local_ascent_with_safe_step():
    rng = np.random.default_rng(8)
    P, phi, gains, us, serving = random_instance(rng, n_rbs=4)
    grid = RbGrid(2, 2)
    budget = 2.0
    P = P / P.reshape(2, 2, 2).sum(axis=-1).max() * budget * 0.9
    grad = gradient_Y(P, phi, gains, us, serving)
    alpha = 1e-4 * budget / np.abs(grad).max()
    res = iterate_power(P, phi, gains, us, serving, grid, 1.0, budget, alpha=alpha, max_iters=2000, tol=1e-12)
    trace = np.array(res.trace)
    assert np.all(np.diff(trace) >= -1e-9)
    assert trace[-1] > trace[0]
    assert np.all(res.p >= 0)
    assert np.all(res.p.reshape(2, 2, 2).sum(axis=-1) <= budget + 1e-12)


def test_single_cell_spends_full_budget():
    grid = RbGrid(3, 1)
    gains = AggregatedGains(np.array([[[1.0, 0.5, 2.0]]]), np.full((1, 3), 0.1))
    phi = np.ones((1, 3))
    P0 = np.full((1, 3), 0.1)
    res = iterate_power(P0, phi, gains, [Logarithmic(1.0, 10.0)], np.array([0]), grid, 1.0, 1.0,
                        alpha=default_alpha(np.ones(3), 1.0, 0.05), max_iters=20_000, tol=1e-14)
    assert res.p.sum() == pytest.approx(1.0, rel=1e-9)


def test_alpha_zero_keeps_powers():
    rng = np.random.default_rng(9)
    P, phi, gains, us, serving = random_instance(rng)
    res = iterate_power(P, phi, gains, us, serving, RbGrid(4, 1), 1.0, 10.0, alpha=0.0, max_iters=5)
    np.testing.assert_array_equal(res.p, P)
    assert len(set(res.trace)) == 1


def test_iterate_rejects_infeasible_start():
    rng = np.random.default_rng(10)
    P, phi, gains, us, serving = random_instance(rng)
    with pytest.raises(ValueError):
        iterate_power(P * 100, phi, gains, us, serving, RbGrid(4, 1), 1.0, 1.0)
    phi[:] = 0.0
    with pytest.raises(ValueError):
        iterate_power(P, phi, gains, us, serving, RbGrid(4, 1), 1.0, 10.0)
