import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baxterfbm.errors import DomainError, IllConditionedError
from baxterfbm.fbm_simulation import (
    SampleGrid,
    fbm_cov,
    gram_optimal_predictor,
    kernel_predictor_mse,
    kernel_weights,
    mc_verify,
    predictor_mse,
    simulate_paths,
    weight_distance,
)

H = 0.25


def test_covariance_values():
    assert fbm_cov(1.0, 1.0, H) == 1.0
    assert abs(fbm_cov(1.0, -1.0, H) - (1 - 2**-0.5)) < 1e-15
    assert abs(fbm_cov(4.0, 4.0, H) - 2.0) < 1e-15
    assert fbm_cov(0.0, 3.0, H) == 0.0


def test_midpoint_grid():
    g = SampleGrid.midpoints(-4.0, 0.0, 4)
    assert np.allclose(g.points, [-3.5, -2.5, -1.5, -0.5])
    assert np.all(g.widths == 1.0)
    with pytest.raises(DomainError):
        SampleGrid.midpoints(-4.0, 0.0, 0)
    with pytest.raises(DomainError):
        SampleGrid(np.array([0.0, 0.0]), np.ones(2), -1.0, 1.0)
    with pytest.raises(DomainError, match="window"):
        SampleGrid(np.array([-2.0]), np.ones(1), -1.0, 1.0)


def test_zero_paths():
    ens = simulate_paths(SampleGrid.midpoints(-1.0, 0.0, 3), 1.0, H, 0, seed=1)
    assert ens.values.shape == (0, 4)
    km = kernel_predictor_mse(ens, SampleGrid.midpoints(-1.0, 0.0, 3), 1.0, H, np.zeros(3))
    assert math.isnan(km.empirical)


def test_simulation_deterministic_across_workers():
    grid = SampleGrid.midpoints(-2.0, 0.0, 8)
    a = simulate_paths(grid, 1.0, H, 2500, seed=7, workers=1)
    b = simulate_paths(grid, 1.0, H, 2500, seed=7, workers=4)
    assert np.array_equal(a.values, b.values)
    assert a.to_csv() == b.to_csv()


def test_simulated_variance():
    grid = SampleGrid.midpoints(-2.0, 0.0, 4)
    ens = simulate_paths(grid, 1.0, H, 20_000, seed=11)
    sq = ens.target**2
    # Var(B_H(1)) = 1
    assert abs(sq.mean() - 1.0) < 3 * sq.std(ddof=1) / math.sqrt(len(sq))


def test_point_at_origin_is_rejected():
    grid = SampleGrid(np.array([-1.0, 0.0]), np.ones(2), -1.0, 0.0)
    with pytest.raises(DomainError, match="positive definite"):
        simulate_paths(grid, 1.0, H, 10, seed=0)


def test_gram_degenerate_target_in_grid():
    grid = SampleGrid(np.array([-1.0, 1.0]), np.ones(2), -1.0, 1.0)
    pred = gram_optimal_predictor(grid, 1.0, H)
    assert np.allclose(pred.weights, [0.0, 1.0], atol=1e-12)
    assert pred.mse < 1e-12


def test_gram_mse_nonincreasing_under_refinement():
    coarse = gram_optimal_predictor(SampleGrid.midpoints(-4.0, 0.0, 8), 1.0, H).mse
    # midpoints of 24 cells contain those of 8 cells
    fine = gram_optimal_predictor(SampleGrid.midpoints(-4.0, 0.0, 24), 1.0, H).mse
    assert fine <= coarse


@settings(max_examples=40, deadline=None)
@given(w=st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_gram_is_optimal(w):
    grid = SampleGrid.midpoints(-3.0, 0.0, 6)
    pred = gram_optimal_predictor(grid, 1.0, H)
    assert pred.mse <= predictor_mse(grid, 1.0, H, np.array(w)) + 1e-12


def test_gram_orthogonality():
    grid = SampleGrid.midpoints(-4.0, 0.0, 32)
    pred = gram_optimal_predictor(grid, 1.0, H)
    G = fbm_cov(grid.points[:, None], grid.points[None, :], H)
    resid = fbm_cov(grid.points, 1.0, H) - G @ pred.weights
    assert np.max(np.abs(resid)) < 1e-10
    assert abs(predictor_mse(grid, 1.0, H, pred.weights) - pred.mse) < 1e-12


def test_zero_predictor_mse():
    grid = SampleGrid.midpoints(-1.0, 0.0, 4)
    assert abs(predictor_mse(grid, 2.0, H, np.zeros(4)) - 2.0**0.5) < 1e-15


def test_ill_conditioned_gram():
    # near-coincident points: |s - u|**2H is only ~3e-7 apart, so cond ~ 1e7
    grid = SampleGrid(np.array([-1.0, -1.0 + 1e-13]), np.ones(2), -1.0, 0.0)
    with pytest.raises(IllConditionedError) as info:
        gram_optimal_predictor(grid, 1.0, H, cond_max=1e6)
    assert info.value.condition > 1e6


def test_kernel_weights_custom_kernel():
    grid = SampleGrid.midpoints(-2.0, 0.0, 4)
    w = kernel_weights(grid, 1.0, H, kernel=lambda s: np.ones_like(s))
    assert np.allclose(w, grid.widths)
    assert np.all(kernel_weights(grid, 1.0, H) > 0)


def test_weight_distance():
    a = np.arange(1.0, 9.0)
    assert weight_distance(a, a) == 0.0
    b = a.copy()
    b[0] = 100.0
    assert weight_distance(a, b) == 0.0
    with pytest.raises(DomainError):
        weight_distance(a[:4], a[:4])


def test_mc_verify_small():
    rep = mc_verify(n=64, n_paths=2000, distance_sizes=(32, 64), seed=3)
    assert rep.gram_mse <= rep.kernel_mse
    assert rep.checks["gram_mse_le_kernel_mse"]
    payload = json.loads(rep.to_json())
    assert payload["passed"] == rep.passed
    assert set(payload["distances"]) == {"32", "64"}
    again = mc_verify(n=64, n_paths=2000, distance_sizes=(32, 64), seed=3, workers=2)
    assert again.to_json() == rep.to_json()


def test_mc_verify_geometry():
    with pytest.raises(DomainError):
        mc_verify(t0=1.0, n=8, n_paths=10)
