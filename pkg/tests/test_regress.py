"""Within transformation, pivoted-QR OLS, classical and DK covariance."""
import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from climpanel import (
    HACSpec,
    PanelDataset,
    QuarterIndex,
    RegressionSpec,
    build_design,
    confidence_band,
    default_bandwidth,
    ols,
    quarter_range,
    significance_stars,
    vcov_classical,
    vcov_driscoll_kraay,
    with_driscoll_kraay,
    within_transform,
)
from climpanel.regress import design_from_matrices
from climpanel.simulate import fe_panel
from climpanel.errors import (
    BandwidthError,
    DegreesOfFreedomError,
    RankDeficiencyError,
    SampleError,
)
from oracles import (
    dk_direct_sum_lag0,
    dummy_ols_slopes,
    newey_west_double_loop,
)


def grid(n):
    return quarter_range(QuarterIndex(2000, 1), QuarterIndex(2000, 1).offset(n - 1))


def simple_design(y, x, fixed_effects=(), n_regions=1, add_constant=None):
    """Single-region helper: y, x are 1-D arrays."""
    T = len(y) // n_regions
    time = grid(T)
    regions = [f"r{i}" for i in range(n_regions)]
    return design_from_matrices(
        np.asarray(y, float).reshape(n_regions, T),
        [("x", np.asarray(x, float).reshape(n_regions, T))],
        regions, time, fixed_effects=fixed_effects,
        add_constant=add_constant,
    )


# ---------------------------------------------------------------------------
# within transformation
# ---------------------------------------------------------------------------

def test_region_constant_regressor_demeans_to_zero():
    ds = fe_panel(n_regions=4, n_quarters=10, seed=1)
    per_region = np.tile(np.array([[1.0], [2.0], [3.0], [4.0]]), (1, 10))
    ds = ds.with_series("rc", per_region)
    design = build_design(ds, RegressionSpec("y", ("x1", "rc"),
                                             fixed_effects=("region",)))
    within = within_transform(design)
    rc_col = within.X[:, within.names.index("rc")]
    assert np.all(rc_col == 0.0)


def test_one_region_time_fe_demeans_to_zero():
    rng = np.random.default_rng(2)
    design = simple_design(rng.normal(size=12), rng.normal(size=12),
                           fixed_effects=("time",))
    within = within_transform(design, drop_singletons=False)
    assert np.all(within.y == 0.0)
    assert np.all(within.X == 0.0)


def test_singleton_groups_dropped_with_warning():
    rng = np.random.default_rng(3)
    design = simple_design(rng.normal(size=12), rng.normal(size=12),
                           fixed_effects=("time",))
    with pytest.warns(UserWarning, match="singleton"):
        with pytest.raises(SampleError):
            within_transform(design)


def test_two_way_demeaning_zero_means():
    ds = fe_panel(n_regions=6, n_quarters=14, seed=4)
    design = build_design(ds, RegressionSpec("y", ("x1",),
                                             fixed_effects=("region", "time")))
    within = within_transform(design)
    Z = np.column_stack([within.y, within.X])
    for codes in (within.region_codes, within.time_codes):
        for val in np.unique(codes):
            means = Z[codes == val].mean(axis=0)
            assert np.abs(means).max() < 1e-12


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------

def test_exact_fit():
    x = np.arange(1.0, 13.0)
    design = simple_design(2.0 * x, x, add_constant=False)
    fit = ols(design)
    assert fit.coef[0] == pytest.approx(2.0, rel=1e-14)
    np.testing.assert_allclose(fit.resid_vec, 0.0, atol=1e-12)
    assert vcov_classical(fit)[0, 0] == pytest.approx(0.0, abs=1e-24)


def test_duplicated_column_rank_error_names_both():
    rng = np.random.default_rng(5)
    x = rng.normal(size=20)
    time = grid(20)
    design = design_from_matrices(
        rng.normal(size=(1, 20)),
        [("x_first", x.reshape(1, 20)), ("x_second", x.reshape(1, 20))],
        ["a"], time, add_constant=False,
    )
    with pytest.raises(RankDeficiencyError) as err:
        ols(design)
    assert "x_first" in err.value.columns
    assert "x_second" in err.value.columns


def test_zero_column_reported_as_degenerate():
    rng = np.random.default_rng(6)
    time = grid(15)
    design = design_from_matrices(
        rng.normal(size=(1, 15)),
        [("live", rng.normal(size=(1, 15))), ("dead", np.zeros((1, 15)))],
        ["a"], time, add_constant=False,
    )
    with pytest.raises(RankDeficiencyError, match="no variation"):
        ols(design)


def test_slope_recovery_monte_carlo():
    # y = 1.5 x + e on a 7 x 100 panel; mean estimate over seeded reps
    reps = 60
    estimates = []
    for seed in range(reps):
        ds = fe_panel(n_regions=7, n_quarters=100, betas=(1.5,),
                      region_sd=0.5, time_sd=0.5, seed=seed)
        fit = ols(build_design(ds, RegressionSpec(
            "y", ("x1",), fixed_effects=("region", "time"))))
        estimates.append(fit.coef_for("x1"))
    mean = float(np.mean(estimates))
    mc_se = float(np.std(estimates, ddof=1) / math.sqrt(reps))
    assert abs(mean - 1.5) < 3 * mc_se


def test_residuals_orthogonal_to_design():
    ds = fe_panel(n_regions=5, n_quarters=30, betas=(1.0, -2.0), seed=7)
    fit = ols(build_design(ds, RegressionSpec(
        "y", ("x1", "x2"), fixed_effects=("region", "time"))))
    cross = fit.within_x.T @ fit.resid_vec
    scale = np.linalg.norm(fit.within_x, axis=0) * np.linalg.norm(fit.resid_vec)
    assert np.all(np.abs(cross) / scale < 1e-8)


def test_lsdv_equivalence_sample():
    rng = np.random.default_rng(8)
    for rep in range(25):
        R = int(rng.integers(3, 11))
        T = int(rng.integers(8, 51))
        fe = [("region",), ("time",), ("region", "time")][rep % 3]
        ds = fe_panel(n_regions=R, n_quarters=T, betas=(1.2, -0.4),
                      seed=1000 + rep)
        design = build_design(ds, RegressionSpec("y", ("x1", "x2"),
                                                 fixed_effects=fe))
        fit = ols(design)
        oracle = dummy_ols_slopes(design.y, design.X, design.region_codes,
                                  design.time_codes, fe)
        np.testing.assert_allclose(fit.coef, oracle, rtol=1e-8)


def test_frisch_waugh_partialling():
    ds = fe_panel(n_regions=6, n_quarters=25, betas=(0.8, -1.1), seed=9)
    fe = ("region", "time")
    full = ols(build_design(ds, RegressionSpec("y", ("x1", "x2"),
                                               fixed_effects=fe)))
    resid_y = ols(build_design(ds, RegressionSpec("y", ("x2",),
                                                  fixed_effects=fe))).residuals
    resid_x1 = ols(build_design(ds, RegressionSpec("x1", ("x2",),
                                                   fixed_effects=fe))).residuals
    partial = ols(design_from_matrices(
        resid_y, [("x1", resid_x1)], ds.regions, ds.time,
        add_constant=False))
    assert partial.coef[0] == pytest.approx(full.coef_for("x1"), abs=1e-10)


def test_fe_estimates_reproduce_fit():
    ds = fe_panel(n_regions=4, n_quarters=12, betas=(1.0,), seed=10)
    design = build_design(ds, RegressionSpec("y", ("x1",),
                                             fixed_effects=("region", "time")))
    fit = ols(design, recover_fe=True)
    assert set(fit.fe_estimates) == {"region", "time"}
    assert len(fit.fe_estimates["region"]) == 4
    # fitted = X b + alpha_r + theta_t reproduces y up to the residual
    within = within_transform(design)
    alphas = fit.fe_estimates["region"]
    thetas = fit.fe_estimates["time"]
    t0 = QuarterIndex(2000, 1)
    for row in range(within.nobs):
        r = within.regions[within.region_codes[row]]
        q = str(t0.offset(int(within.time_codes[row]) - (t0.year * 4)))
        pred = within.orig_X[row] @ fit.coef + alphas[r] + thetas[q]
        resid = fit.residuals[within.region_codes[row],
                              within.time_codes[row] - t0.year * 4]
        assert within.orig_y[row] - pred == pytest.approx(resid, abs=1e-8)


# ---------------------------------------------------------------------------
# classical covariance
# ---------------------------------------------------------------------------

def test_classical_single_regressor_closed_form():
    rng = np.random.default_rng(11)
    x = rng.normal(size=40)
    y = 0.5 * x + rng.normal(size=40)
    fit = ols(simple_design(y, x, add_constant=False))
    sigma2 = fit.resid_vec @ fit.resid_vec / (40 - 1)
    assert fit.vcov[0, 0] == pytest.approx(sigma2 / (x @ x), rel=1e-12)


def test_classical_scaling_homogeneity():
    rng = np.random.default_rng(12)
    x = rng.normal(size=30)
    y = x + rng.normal(size=30)
    fit = ols(simple_design(y, x, add_constant=False))
    base = vcov_classical(fit)
    doubled = dataclasses.replace(fit, resid_vec=2.0 * fit.resid_vec)
    np.testing.assert_allclose(vcov_classical(doubled), 4.0 * base, rtol=1e-14)


def test_classical_dof_error():
    rng = np.random.default_rng(13)
    # two observations, x plus const: rank 2 leaves zero residual dof
    design = simple_design(rng.normal(size=2), rng.normal(size=2),
                           add_constant=True)
    with pytest.raises(DegreesOfFreedomError):
        ols(design)


# ---------------------------------------------------------------------------
# Driscoll-Kraay covariance
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("bandwidth", [0, 1, 4])
@pytest.mark.parametrize("small_sample", [True, False])
def test_dk_single_unit_equals_newey_west(bandwidth, small_sample):
    rng = np.random.default_rng(14 + bandwidth)
    n = 60
    x = rng.normal(size=n)
    y = 1.0 + 0.5 * x + rng.normal(size=n)
    fit = ols(simple_design(y, x, add_constant=True))
    got = vcov_driscoll_kraay(fit, HACSpec(bandwidth, small_sample))
    X = np.column_stack([x, np.ones(n)])
    want = newey_west_double_loop(X, fit.resid_vec, bandwidth, small_sample)
    np.testing.assert_allclose(got, want, rtol=1e-10)


def test_dk_lag0_constant_residuals_proportional_to_classical():
    rng = np.random.default_rng(15)
    n = 50
    x = rng.normal(size=n)
    fit = ols(simple_design(x + rng.normal(size=n), x, add_constant=False))
    const_resid = dataclasses.replace(fit, resid_vec=np.full(n, 0.7))
    dk = vcov_driscoll_kraay(const_resid, HACSpec(0, small_sample=False))
    classical = vcov_classical(const_resid)
    ratio = dk[0, 0] / classical[0, 0]
    # dk = c^2 (X'X)^-1, classical = (n c^2 / dof) (X'X)^-1
    assert ratio == pytest.approx(fit.dof / n, rel=1e-12)


def test_dk_lag0_equals_direct_sum():
    ds = fe_panel(n_regions=5, n_quarters=20, betas=(0.9,), seed=16)
    fit = ols(build_design(ds, RegressionSpec("y", ("x1",),
                                              fixed_effects=("region",))))
    raw = vcov_driscoll_kraay(fit, HACSpec(0, small_sample=False))
    want = dk_direct_sum_lag0(fit.within_x, fit.resid_vec, fit.time_codes)
    np.testing.assert_allclose(raw, want, rtol=1e-10)
    # the small-sample flag applies the dof-aware factor nobs/dof
    adj = vcov_driscoll_kraay(fit, HACSpec(0, small_sample=True))
    np.testing.assert_allclose(adj, raw * fit.nobs / fit.dof, rtol=1e-12)


def test_dk_bandwidth_error():
    ds = fe_panel(n_regions=3, n_quarters=10, seed=17)
    fit = ols(build_design(ds, RegressionSpec("y", ("x1",),
                                              fixed_effects=("region",))))
    with pytest.raises(BandwidthError):
        vcov_driscoll_kraay(fit, HACSpec(10))


def test_dk_psd_on_random_panels():
    rng = np.random.default_rng(18)
    for rep in range(1000):
        R = int(rng.integers(2, 8))
        T = int(rng.integers(10, 30))
        L = int(rng.integers(0, 6))
        ds = fe_panel(n_regions=R, n_quarters=T, betas=(1.0, 0.3),
                      seed=5000 + rep)
        fe = [(), ("region",), ("region", "time")][rep % 3]
        fit = ols(build_design(ds, RegressionSpec("y", ("x1", "x2"),
                                                  fixed_effects=fe)))
        V = vcov_driscoll_kraay(fit, HACSpec(L))
        np.testing.assert_allclose(V, V.T, atol=1e-14)
        eig = np.linalg.eigvalsh(V)
        assert eig.min() >= -1e-10 * np.trace(V)


# ---------------------------------------------------------------------------
# bands, stars, bandwidth rule
# ---------------------------------------------------------------------------

def test_confidence_band_multiplier():
    ds = fe_panel(n_regions=4, n_quarters=20, seed=19)
    fit = ols(build_design(ds, RegressionSpec("y", ("x1",),
                                              fixed_effects=("region",))))
    lo, hi = confidence_band(fit, 0.90)
    mult = (hi[0] - fit.coef[0]) / fit.se[0]
    assert abs(mult - 1.6449) < 5e-5


def test_confidence_band_degenerate_cases():
    ds = fe_panel(n_regions=4, n_quarters=20, seed=20)
    fit = ols(build_design(ds, RegressionSpec("y", ("x1",),
                                              fixed_effects=("region",))))
    zero_se = dataclasses.replace(fit, se=np.zeros_like(fit.se))
    lo, hi = confidence_band(zero_se, 0.90)
    np.testing.assert_array_equal(lo, fit.coef)
    np.testing.assert_array_equal(hi, fit.coef)
    lo, hi = confidence_band(fit, 0.0)
    np.testing.assert_array_equal(lo, fit.coef)
    np.testing.assert_array_equal(hi, fit.coef)
    with pytest.raises(ValueError):
        confidence_band(fit, 1.0)


def test_confidence_band_t_flag():
    ds = fe_panel(n_regions=4, n_quarters=20, seed=21)
    fit = ols(build_design(ds, RegressionSpec("y", ("x1",),
                                              fixed_effects=("region",))))
    lo_t, _ = confidence_band(fit, 0.90, use_t=True)
    mult = (fit.coef[0] - lo_t[0]) / fit.se[0]
    assert mult == pytest.approx(stats.t.ppf(0.95, fit.dof), rel=1e-12)


def test_default_bandwidth_rule():
    assert default_bandwidth(100) == 4
    assert default_bandwidth(88) == 3
    assert default_bandwidth(25) == math.floor(4 * (25 / 100) ** (2 / 9))


def test_significance_stars_convention():
    assert significance_stars(0.012, 0.1046) == ""
    assert significance_stars(2.58 * 0.1, 0.1) == "***"
    assert significance_stars(1.97 * 0.1, 0.1) == "**"
    assert significance_stars(1.65 * 0.1, 0.1) == "*"
    assert significance_stars(1.0, 0.0) == "***"
    assert significance_stars(0.0, 0.0) == ""


def test_vcov_se_consistency():
    ds = fe_panel(n_regions=5, n_quarters=16, betas=(1.0, 2.0), seed=22)
    fit = with_driscoll_kraay(
        ols(build_design(ds, RegressionSpec("y", ("x1", "x2"),
                                            fixed_effects=("region",)))),
        HACSpec(2),
    )
    np.testing.assert_allclose(fit.se, np.sqrt(np.diag(fit.vcov)), rtol=1e-14)
