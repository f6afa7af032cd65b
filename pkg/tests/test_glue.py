import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.special import exp1

from renyi.glue import (AlignmentError, ChainConfig, KdeTable, WindowScheme, align_offsets,
                        glue, glue_error_vs_analytic, kde_log_density, run_glue,
                        sample_restricted, silverman_bandwidth, window_rng)
from renyi.measure import RenyiState
from renyi.windows import BaseMeasure

HALF = BaseMeasure.half_line()


def _poisson0(shift=0.0):
    return RenyiState(HALF, lambda lam: -lam - np.log(lam) + shift)


def _table(grid, logd, weight=1e6):
    grid = np.asarray(grid, dtype=float)
    return KdeTable(grid, np.asarray(logd, dtype=float), np.full(grid.size, float(weight)),
                    (grid[0], grid[-1]), 0.1, 10_000)


# -- schemes and configs ------------------------------------------------------------


def test_scheme_spacing():
    s = WindowScheme.spaced(0.0, 10.0, 4, 0.5)
    assert s.windows[0][0] == 0.0 and s.windows[-1][1] == 10.0
    w = [hi - lo for lo, hi in s.windows]
    np.testing.assert_allclose(w, w[0])
    ov = s.windows[0][1] - s.windows[1][0]
    assert ov == pytest.approx(0.5 * w[0])
    ls = WindowScheme.log_spaced(1e-3, 10, 6)
    assert ls.coordinate == "log"
    assert ls.windows[0][0] == pytest.approx(math.log(1e-3))
    np.testing.assert_allclose(ls.to_param(ls.windows[-1][1]), 10.0)


@pytest.mark.parametrize("bad", [((0, 1), (2, 3)), ((0, 1), (0, 2)), ((1, 0),), ((0, np.inf),), ()])
def test_scheme_rejects(bad):
    with pytest.raises(ValueError):
        WindowScheme(bad)


def test_scheme_rejects_bad_overlap_and_coordinate():
    with pytest.raises(ValueError):
        WindowScheme.spaced(0, 1, 3, 1.0)
    with pytest.raises(ValueError):
        WindowScheme(((0, 1),), coordinate="sqrt")
    with pytest.raises(ValueError):
        WindowScheme.log_spaced(0.0, 1.0)


@pytest.mark.parametrize("kw", [dict(burn_in=10, chain_length=10), dict(proposal_scale=0.0),
                                dict(master_seed=-1), dict(master_seed=2 ** 64)])
def test_chain_config_rejects(kw):
    with pytest.raises(ValueError):
        ChainConfig(**kw)


# -- sampling -------------------------------------------------------------------------------


def test_uniform_target_mean():
    flat = RenyiState(BaseMeasure.line(), lambda x: np.zeros(np.shape(x)))
    r = sample_restricted(flat, (2.0, 5.0), ChainConfig(60_000, 5_000, master_seed=3))
    # standard error inflated by the chain's integrated autocorrelation
    x = r.samples
    lag = np.corrcoef(x[:-1], x[1:])[0, 1]
    se = x.std() / math.sqrt(x.size) * math.sqrt((1 + lag) / (1 - lag))
    assert abs(x.mean() - 3.5) < 3 * se
    assert x.min() >= 2.0 and x.max() <= 5.0
    assert 0.1 <= r.acceptance <= 0.7 and r.warning == ""


def test_restricted_sample_matches_analytic_cdf():
    target = RenyiState(HALF, lambda lam: -2 * lam - np.log(lam))
    r = sample_restricted(target, (0.5, 2.0), ChainConfig(200_000, 20_000, master_seed=11))
    assert r.samples.size == 180_000
    x = np.sort(r.samples)
    cdf = (exp1(1.0) - exp1(2 * x)) / (exp1(1.0) - exp1(4.0))
    ecdf_hi = np.arange(1, x.size + 1) / x.size
    gap = max(np.max(ecdf_hi - cdf), np.max(cdf - (ecdf_hi - 1 / x.size)))
    assert gap < 0.02


def test_fixed_seed_is_bit_identical():
    cfg = ChainConfig(5_000, 1_000, master_seed=123)
    a = sample_restricted(_poisson0(), (0.1, 1.0), cfg, window_index=2)
    b = sample_restricted(_poisson0(), (0.1, 1.0), cfg, window_index=2)
    c = sample_restricted(_poisson0(), (0.1, 1.0), cfg, window_index=3)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_window_streams_depend_only_on_seed_and_index():
    a = window_rng(7, 1).random(5)
    assert np.array_equal(a, window_rng(7, 1).random(5))
    assert not np.array_equal(a, window_rng(7, 2).random(5))
    assert not np.array_equal(a, window_rng(8, 1).random(5))


def test_poor_acceptance_warns_but_runs():
    cfg = ChainConfig(3_000, 500, proposal_scale=1e-6, master_seed=1)
    r = sample_restricted(_poisson0(), (0.1, 1.0), cfg)
    assert r.warning and r.samples.size == 2_500


def test_vanishing_target_refused():
    empty = RenyiState(HALF, lambda lam: np.full(np.shape(lam), -np.inf))
    with pytest.raises(ValueError):
        sample_restricted(empty, (0.1, 1.0), ChainConfig(2_000, 100))


# -- kernel density estimates --------------------------------------------------------------


def test_kde_flat_on_uniform():
    x = np.random.default_rng(0).uniform(0, 1, 100_000)
    t = kde_log_density(x, (0.0, 1.0))
    assert t.grid.size == 512
    assert np.ptp(t.log_density) < 0.05 * 2
    assert np.max(np.abs(t.log_density - np.mean(t.log_density))) < 0.05


def test_kde_normal_shape():
    x = np.random.default_rng(1).standard_normal(200_000)
    t = kde_log_density(x, (-6.0, 6.0))
    inner = np.abs(t.grid) < 2
    d = t.log_density[inner] + 0.5 * t.grid[inner] ** 2
    # Gaussian smoothing of width h inflates the variance to 1 + h^2
    h = t.bandwidth
    d_smoothed = t.log_density[inner] + 0.5 * t.grid[inner] ** 2 / (1 + h * h)
    assert np.max(np.abs(d_smoothed - d_smoothed.mean())) < 0.05
    assert np.max(np.abs(d - d.mean())) < 0.05


def test_kde_refuses_bad_samples():
    with pytest.raises(ValueError, match="degenerate"):
        kde_log_density(np.full(2_000, 0.3), (0.0, 1.0))
    with pytest.raises(ValueError, match="1000"):
        kde_log_density(np.linspace(0, 1, 999), (0.0, 1.0))


def test_silverman_reference():
    x = np.random.default_rng(2).standard_normal(10_000)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    expect = 0.9 * min(x.std(ddof=1), iqr / 1.34) * 10_000 ** -0.2
    assert silverman_bandwidth(x) == pytest.approx(expect, rel=1e-14)


def test_kde_weight_is_local_sample_count():
    x = np.random.default_rng(4).uniform(0, 1, 50_000)
    t = kde_log_density(x, (0.0, 1.0))
    mid = t.weight[200:300]
    np.testing.assert_allclose(mid, 50_000 * t.bandwidth, rtol=0.05)


# -- alignment and gluing ---------------------------------------------------------------------


def test_constant_shift_recovered():
    f = lambda g: -0.3 * g ** 2
    a, b = np.linspace(0, 2, 100), np.linspace(1, 3, 100)
    offs = align_offsets([_table(a, f(a)), _table(b, f(b) + 1.7)])
    assert offs[0] == 0.0 and offs[1] == pytest.approx(-1.7, abs=1e-12)


def test_offsets_telescope():
    f = np.sin
    grids = [np.linspace(i, i + 2, 120) for i in range(3)]
    shifts = [0.0, 0.8, 0.8 - 2.5]
    tabs = [_table(g, f(g) + s) for g, s in zip(grids, shifts)]
    np.testing.assert_allclose(align_offsets(tabs), [0.0, -0.8, -0.8 + 2.5], atol=1e-12)


def test_noise_propagation_bound():
    rng = np.random.default_rng(5)
    a, b = np.linspace(0, 2, 400), np.linspace(1, 3, 400)
    f = lambda g: np.cos(g)
    sigma = 0.05
    tb = _table(b, f(b) + 3.0 + rng.normal(0, sigma, b.size))
    prev = _table(a, f(a))
    # prev is noise-free and interpolation on its grid is exact up to O(dx^2)
    offs = align_offsets([prev, tb])
    shared = np.union1d(a, b)
    points = np.count_nonzero((shared >= 1) & (shared <= 2))
    assert abs(offs[1] + 3.0) < 3 * sigma / math.sqrt(points / 2)


def test_thin_overlap_refused():
    a, b = np.linspace(0, 2, 100), np.linspace(1, 3, 100)
    ta = _table(a, -a)
    tb = KdeTable(b, -b, np.where(b < 1.05, 1e6, 1.0), (1.0, 3.0), 0.1, 10_000)
    with pytest.raises(AlignmentError) as exc:
        align_offsets([ta, tb])
    assert exc.value.pair == (0, 1)


def test_alignment_antisymmetric():
    x = np.random.default_rng(6).standard_normal(40_000)
    windows = [(-3.0, -0.5), (-1.5, 1.0), (0.0, 2.5)]
    tabs = [kde_log_density(x[(x > lo) & (x < hi)], (lo, hi)) for lo, hi in windows]
    fwd = align_offsets(tabs, floor=100)
    rev = align_offsets(tabs[::-1], floor=100)[::-1]
    # each pairwise offset flips sign, so after re-anchoring on window 0
    # the reversed alignment reproduces the forward one
    np.testing.assert_allclose(np.diff(align_offsets(tabs[::-1], floor=100)), -np.diff(fwd)[::-1],
                               atol=1e-12)
    np.testing.assert_allclose(rev - rev[0], fwd, atol=1e-12)


def test_single_window_glue_is_identity():
    g = np.linspace(0, 1, 50)
    t = _table(g, np.sin(g))
    r = glue([t], [0.0])
    np.testing.assert_array_equal(r.grid, g)
    np.testing.assert_array_equal(r.log_density, np.sin(g))
    np.testing.assert_array_equal(r.window_id, 0)


def test_consistent_tables_glue_exactly():
    f = lambda g: -0.5 * g ** 2 + np.sin(3 * g)
    grids = [np.linspace(i, i + 2, 101) for i in range(4)]
    tabs = [_table(g, f(g) + 7.0 * i) for i, g in enumerate(grids)]
    r = glue(tabs, align_offsets(tabs))
    d = r.log_density - f(r.grid)
    assert np.ptp(d) < 1e-12


def test_glue_log_coordinate_removes_jacobian():
    u = np.linspace(-2, 2, 200)
    # sampler density in u of theta^-1 on theta is constant
    t = _table(u, np.zeros_like(u))
    r = glue([t], [0.0], WindowScheme(((-2.0, 2.0),), "log"))
    np.testing.assert_allclose(r.grid, np.exp(u))
    np.testing.assert_allclose(r.log_density, -u)


def test_error_vs_truth_trivial_cases():
    g = np.linspace(0.1, 3, 80)
    r = glue([_table(g, -g - np.log(g))], [0.0])
    assert glue_error_vs_analytic(r, _poisson0()) == pytest.approx(0.0, abs=1e-14)
    assert glue_error_vs_analytic(r, _poisson0(42.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        glue_error_vs_analytic(r, _poisson0(), floor=1e9)


def test_offset_count_must_match():
    g = np.linspace(0, 1, 30)
    with pytest.raises(ValueError):
        glue([_table(g, g)], [0.0, 1.0])


# -- pipeline ------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_run():
    scheme = WindowScheme.log_spaced(1e-2, 5, 4)
    cfg = ChainConfig(40_000, 4_000, master_seed=2024)
    return scheme, cfg, run_glue(_poisson0(), scheme, cfg)


def test_pipeline_small(small_run):
    scheme, cfg, r = small_run
    assert r.offsets[0] == 0.0
    assert glue_error_vs_analytic(r, _poisson0(), floor=200) < 0.3
    assert r.diagnostics["window_seeds"] == [[2024, i] for i in range(4)]
    assert len(r.diagnostics["acceptance"]) == 4


def test_pipeline_concurrent_matches_serial(small_run):
    scheme, cfg, r = small_run
    with ThreadPoolExecutor(4) as ex:
        rc = run_glue(_poisson0(), scheme, cfg, executor=ex)
    assert np.array_equal(r.log_density, rc.log_density)
    assert np.array_equal(r.offsets, rc.offsets)


def test_pipeline_scale_invariant(small_run):
    scheme, cfg, r = small_run
    rs = run_glue(_poisson0(math.log(8.0)), scheme, cfg)
    np.testing.assert_allclose(rs.log_density, r.log_density, rtol=0, atol=1e-9)


@pytest.mark.slow
def test_window_refinement_stability():
    cfg = ChainConfig(200_000, 20_000, master_seed=0)
    errs = [glue_error_vs_analytic(run_glue(_poisson0(), WindowScheme.log_spaced(1e-3, 10, n), cfg),
                                   _poisson0()) for n in (6, 12)]
    assert abs(errs[0] - errs[1]) < 0.1
