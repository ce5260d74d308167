from concurrent.futures import ThreadPoolExecutor
import logging

import numpy as np
import pytest
from scipy import stats

from comonotone_mc.errors import DomainError, SimulationError, StructuralError
from comonotone_mc.models.estimate import sample_covariance
from comonotone_mc.models.grid import Interpretation, TimeGrid
from comonotone_mc.models.rng import RngStream, stream_range
from comonotone_mc.models.simulation import evaluate_functionals, run_paths, simulate_paths
from comonotone_mc.models.functionals import running_max, terminal
from comonotone_mc.processes.diffusion import DiffusionSpec, GBMSpec, euler_preserves_monotony
from comonotone_mc.processes.gaussian import (BrownianBridge, BrownianMotion, BrownianSeries, FractionalBM,
                                              GaussianVector, Liouville, ParamWiener, bm_series_covariance,
                                              fbm_covariance, power_kernel)
from comonotone_mc.processes.pii import (ConstantJump, ExponentialJump, ExpPII, FixedJump, NormalJump,
                                         PIISpec)


def test_brownian_terminal_variance(seed):
    grid = TimeGrid(2.0, 16)
    values = simulate_paths(BrownianMotion(), grid, 20000, seed)
    assert np.all(values[:, 0] == 0.0)
    terminal_values = values[:, -1]
    var = terminal_values.var(ddof=1)
    se = np.std((terminal_values - terminal_values.mean()) ** 2, ddof=1) / np.sqrt(terminal_values.size)
    assert abs(var - 2.0) < 4 * se


def test_paths_do_not_depend_on_workers_or_chunks(seed, small_grid):
    base = simulate_paths(BrownianMotion(), small_grid, 1000, seed, workers=1, chunk_size=4096)
    split = simulate_paths(BrownianMotion(), small_grid, 1000, seed, workers=4, chunk_size=97)
    np.testing.assert_array_equal(base, split)


def test_functionals_do_not_depend_on_workers(seed, small_grid):
    fs = [terminal(), running_max()]
    a = evaluate_functionals(FractionalBM(0.75), small_grid, fs, 2000, seed, workers=1)
    b = evaluate_functionals(FractionalBM(0.75), small_grid, fs, 2000, seed, workers=3, chunk_size=300)
    np.testing.assert_array_equal(a, b)


def test_stream_offset_selects_paths(seed, small_grid):
    full = simulate_paths(BrownianMotion(), small_grid, 20, seed)
    tail = simulate_paths(BrownianMotion(), small_grid, 10, seed, stream_offset=10)
    np.testing.assert_array_equal(full[10:], tail)


def test_run_paths_rejects_bad_input(small_grid):
    with pytest.raises(DomainError):
        simulate_paths(BrownianMotion(), small_grid, 0, 1)
    with pytest.raises(StructuralError):
        run_paths(PIISpec(), small_grid, 10, 1, lambda p, r: p, coupled=True)


def test_reflection_negates_gaussian_paths(seed, small_grid):
    values = simulate_paths(BrownianMotion(), small_grid, 50, seed)
    reflected = simulate_paths(BrownianMotion(), small_grid, 50, seed, reflect=True)
    np.testing.assert_array_equal(reflected, -values)


def test_series_covariance_matches_partial_sum():
    grid = TimeGrid(1.0, 4)
    n_terms = 50
    cov = BrownianSeries(n_terms).covariance(grid)
    for i, s in enumerate(grid.points):
        for j, t in enumerate(grid.points):
            assert cov[i, j] == pytest.approx(bm_series_covariance(s, t, 1.0, n_terms), abs=1e-12)


def test_series_covariance_converges_to_min():
    assert bm_series_covariance(0.3, 0.7, 1.0, 20000) == pytest.approx(0.3, abs=1e-4)
    assert bm_series_covariance(0.5, 0.5, 1.0, 1) < 0.5


def test_series_rejects_zero_terms():
    with pytest.raises(DomainError):
        BrownianSeries(0)


def test_bridge_is_pinned(seed):
    grid = TimeGrid(1.0, 8)
    values = simulate_paths(BrownianBridge(), grid, 500, seed)
    assert np.all(values[:, 0] == 0.0)
    assert np.all(values[:, -1] == 0.0)


def test_bridge_midpoint_variance(seed):
    grid = TimeGrid(1.0, 2)
    assert BrownianBridge().covariance(grid)[1, 1] == pytest.approx(0.25)
    mid = simulate_paths(BrownianBridge(), grid, 40000, seed)[:, 1]
    se = np.std(mid ** 2, ddof=1) / np.sqrt(mid.size)
    assert abs(mid.var(ddof=1) - 0.25) < 4 * se


def test_fbm_covariance_hand_values():
    assert fbm_covariance(1.0, 2.0, 0.5) == pytest.approx(1.0)
    assert fbm_covariance(0.5, 2.0, 1.0) == pytest.approx(1.0)
    assert fbm_covariance(1.0, 1.0, 0.75) == pytest.approx(1.0)
    assert fbm_covariance(0.0, 1.0, 0.3) == 0.0


@pytest.mark.parametrize("hurst", [0.0, 1.5, -0.1])
def test_fbm_rejects_hurst_out_of_range(hurst):
    with pytest.raises(DomainError):
        fbm_covariance(1.0, 1.0, hurst)


def test_fbm_mvn_rejects_hurst_one():
    with pytest.raises(DomainError):
        FractionalBM(1.0, method="mvn")


def test_fbm_cholesky_terminal_variance(seed):
    grid = TimeGrid(2.0, 8)
    x = simulate_paths(FractionalBM(0.75), grid, 30000, seed)[:, -1]
    se = np.std(x ** 2, ddof=1) / np.sqrt(x.size)
    assert abs(x.var(ddof=1) - 2.0 ** 1.5) < 4 * se


def test_fbm_mvn_terminal_variance(seed):
    grid = TimeGrid(1.0, 8)
    x = simulate_paths(FractionalBM(0.75, method="mvn", quad_steps=256), grid, 20000, seed)[:, -1]
    se = np.std(x ** 2, ddof=1) / np.sqrt(x.size)
    assert abs(x.var(ddof=1) - 1.0) < 4 * se + 0.05


@pytest.mark.parametrize("hurst", [0.25, 0.75])
def test_fbm_mvn_marginals_match_cholesky(seed, hurst):
    grid = TimeGrid(1.0, 8)
    mvn = simulate_paths(FractionalBM(hurst, method="mvn", quad_steps=512), grid, 10000, seed)
    exact = simulate_paths(FractionalBM(hurst), grid, 10000, seed + 1)
    for k in (4, 8):
        assert stats.ks_2samp(mvn[:, k], exact[:, k]).pvalue > 0.01


def test_liouville_with_unit_kernel_is_brownian(seed):
    grid = TimeGrid(1.0, 8)
    process = Liouville(lambda u: 1.0, quad_steps=grid.n_steps, rule="left")
    np.testing.assert_allclose(simulate_paths(process, grid, 100, seed),
                               simulate_paths(BrownianMotion(), grid, 100, seed), atol=1e-12)
    np.testing.assert_allclose(process.covariance(grid), BrownianMotion().covariance(grid), atol=1e-10)


def test_liouville_power_kernel_variance():
    grid = TimeGrid(1.0, 4)
    hurst = 0.75
    cov = Liouville(power_kernel(hurst)).covariance(grid)
    assert cov[-1, -1] == pytest.approx(1.0 / (2 * hurst))


def test_liouville_empirical_covariance_matches_quadrature(seed):
    grid = TimeGrid(1.0, 4)
    process = Liouville(power_kernel(0.75), quad_steps=256)
    paths = simulate_paths(process, grid, 20000, seed)
    oracle = process.covariance(grid)
    for i in range(1, grid.size):
        for j in range(i, grid.size):
            cov, se = sample_covariance(paths[:, i], paths[:, j])
            assert abs(cov - oracle[i, j]) <= 4 * se


def test_param_wiener_indicator_kernel_is_brownian():
    grid = TimeGrid(1.0, 4)
    process = ParamWiener(lambda t, s: 1.0 * (s <= t), tail_cutoff=2.0, quad_steps=64)
    np.testing.assert_allclose(process.covariance(grid), BrownianMotion().covariance(grid), atol=1e-6)


def test_gaussian_vector_needs_matching_grid():
    vector = GaussianVector(np.eye(3))
    assert vector.grid() == TimeGrid(1.0, 2)
    with pytest.raises(StructuralError):
        vector.sample(TimeGrid(1.0, 5), stream_range(1, 0, 2))


def test_euler_without_noise_is_constant(seed, small_grid):
    spec = DiffusionSpec(drift=lambda t, x: 0.0 * x, vol=lambda t, x: 0.0 * x, x0=1.5, drift_lipschitz=0.0)
    values = simulate_paths(spec, small_grid, 20, seed)
    assert np.all(values == 1.5)


def test_euler_antithetic_average_is_x0(seed, small_grid):
    spec = DiffusionSpec(x0=0.7, drift_lipschitz=0.0, deterministic_vol=True)
    plain = simulate_paths(spec, small_grid, 100, seed)
    reflected = simulate_paths(spec, small_grid, 100, seed, reflect=True)
    np.testing.assert_allclose((plain[:, -1] + reflected[:, -1]) / 2, 0.7, atol=1e-12)


def test_euler_step_check():
    grid = TimeGrid(1.0, 4)
    assert euler_preserves_monotony(DiffusionSpec(drift_lipschitz=2.0), grid)
    assert not euler_preserves_monotony(DiffusionSpec(drift_lipschitz=8.0), grid)
    assert euler_preserves_monotony(DiffusionSpec(), grid) is None


def test_step_warning_is_logged_once_across_threads(caplog):
    grid = TimeGrid(1.0, 4)
    spec = DiffusionSpec(label="threaded-step-check")
    with caplog.at_level(logging.WARNING, logger="comonotone_mc.processes.diffusion"):
        with ThreadPoolExecutor(max_workers=8) as pool:
            outcomes = list(pool.map(lambda _: spec.check_step(grid), range(64)))
    assert outcomes == [None] * 64
    assert sum("threaded-step-check" in r.getMessage() for r in caplog.records) == 1


def test_euler_blowup_is_reported(small_grid):
    spec = DiffusionSpec(drift=lambda t, x: 1e200 * (1.0 + x * x), x0=1.0)
    with pytest.raises(SimulationError):
        simulate_paths(spec, small_grid, 4, 1)


def test_euler_negative_volatility_is_rejected(small_grid):
    spec = DiffusionSpec(vol=lambda t, x: -1.0 + 0.0 * x, drift_lipschitz=0.0)
    with pytest.raises(DomainError):
        simulate_paths(spec, small_grid, 4, 1)


def test_gbm_mean(seed):
    grid = TimeGrid(1.0, 4)
    spec = GBMSpec(100.0, 0.05, 0.2)
    x = simulate_paths(spec, grid, 40000, seed)[:, -1]
    se = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - 100.0 * np.exp(0.05)) < 4 * se


def test_pii_without_jumps_is_brownian(seed, small_grid):
    np.testing.assert_allclose(simulate_paths(PIISpec(), small_grid, 50, seed),
                               simulate_paths(BrownianMotion(), small_grid, 50, seed), atol=1e-12)
    assert PIISpec.interpretation is Interpretation.CADLAG


def test_fixed_jump_lands_on_next_node(seed):
    grid = TimeGrid(1.0, 4)
    spec = PIISpec(time_change=lambda t: 0.0 * t, fixed_jumps=(FixedJump(0.3, ConstantJump(2.0)),))
    values = simulate_paths(spec, grid, 3, seed)
    np.testing.assert_array_equal(values, np.tile([0.0, 0.0, 2.0, 2.0, 2.0], (3, 1)))
    assert spec.fixed_jump_at(0.5, grid)
    assert not spec.fixed_jump_at(0.25, grid)


@pytest.mark.parametrize("u", [-1.0, 0.5, 2.0])
def test_exponential_martingale_has_unit_mean(seed, u):
    grid = TimeGrid(1.0, 8)
    spec = PIISpec(time_change=lambda t: 0.2 * t, intensity=1.0, jump_law=NormalJump(-0.1, 0.2),
                   fixed_jumps=(FixedJump(0.5, NormalJump(0.0, 0.2)), FixedJump(0.3, ConstantJump(0.2))))
    assert spec.fixed_jump_at(0.5, grid)
    x = simulate_paths(spec, grid, 40000, seed)
    ratio = np.exp(u * x - spec.log_laplace(u, grid.points))
    mean = ratio.mean(axis=0)
    se = ratio.std(axis=0, ddof=1) / np.sqrt(x.shape[0])
    assert np.all(np.abs(mean - 1.0) <= 4 * se + 1e-12)


def test_pii_log_laplace_closed_forms():
    bm = PIISpec()
    assert bm.log_laplace(1.0, 2.0) == pytest.approx(1.0)
    poisson = PIISpec(time_change=lambda t: 0.0 * t, intensity=3.0, jump_law=ConstantJump(1.0))
    assert poisson.log_laplace(1.0, 1.0) == pytest.approx(3.0 * (np.e - 1.0))
    shifted = PIISpec(drift=lambda t: 2.0 * t, fixed_jumps=(FixedJump(0.5, NormalJump(0.0, 1.0)),))
    assert shifted.log_laplace(1.0, 0.25) == pytest.approx(0.5 + 0.125)
    assert shifted.log_laplace(1.0, 1.0) == pytest.approx(2.0 + 0.5 + 0.5)


def test_infinite_laplace_transform_is_rejected():
    spec = PIISpec(intensity=1.0, jump_law=ExponentialJump(rate=1.0))
    with pytest.raises(DomainError):
        spec.log_laplace(1.0, 1.0)


def test_compound_poisson_mean(seed):
    grid = TimeGrid(2.0, 8)
    spec = PIISpec(intensity=1.5, jump_law=ExponentialJump(rate=2.0))
    x = simulate_paths(spec, grid, 40000, seed)[:, -1]
    se = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - 1.5 * 2.0 * 0.5) < 4 * se
    assert spec.mean(grid)[-1] == pytest.approx(1.5)


def test_pii_rejects_bad_time_change(small_grid):
    with pytest.raises(DomainError):
        simulate_paths(PIISpec(time_change=lambda t: 1.0 + t), small_grid, 2, 1)
    with pytest.raises(DomainError):
        simulate_paths(PIISpec(time_change=lambda t: -t), small_grid, 2, 1)


def test_exp_pii_is_normalized(seed):
    grid = TimeGrid(1.0, 8)
    spec = ExpPII(PIISpec(intensity=1.0, jump_law=NormalJump(-0.1, 0.2)), s0=100.0)
    x = simulate_paths(spec, grid, 40000, seed)[:, -1]
    se = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - 100.0) < 4 * se


def test_single_stream_reproducible(small_grid):
    a = BrownianMotion().sample(small_grid, [RngStream(3, 9)])
    b = BrownianMotion().sample(small_grid, [RngStream(3, 9)])
    np.testing.assert_array_equal(a, b)
