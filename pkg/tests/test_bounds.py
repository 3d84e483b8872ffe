import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import norm

from noncross.bounds import (
    Status,
    alpha_from_p0,
    check_theorem1_conditions,
    ld_slope,
    li_kuelbs_delta,
    mixed_axis_functions,
    sandwich_bounds,
    stieltjes_1d,
    stieltjes_2d,
    theorem1_exponent_terms,
    theorem1_upper_bound,
)
from noncross.catalog import builtin_boundary, builtin_trend
from noncross.cones import project_v2plus
from noncross.field_sim import _draw_increments, block_rng, estimate_plain, paley_wiener, FieldSample
from noncross.grid import DomainError, GridField, make_grid
from noncross.rkhs import AdditiveRkhsFn, H1Fn, H2Fn

vals = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def test_li_kuelbs_and_alpha():
    g = make_grid(1, 4)
    assert li_kuelbs_delta(builtin_trend("product", g)) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert alpha_from_p0(0.5) == 0.0
    assert alpha_from_p0(norm.cdf(1.3)) == pytest.approx(1.3)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            alpha_from_p0(bad)


def test_sandwich_requires_domination():
    g = make_grid(1, 8)
    f = builtin_trend("tsquared", g)
    fbar = project_v2plus(f).projection
    lo, hi = sandwich_bounds(0.2, f, fbar)
    assert lo == pytest.approx(norm.cdf(0.2 - 1.0)) and hi == pytest.approx(norm.cdf(0.2 + f.norm()))
    with pytest.raises(DomainError):
        sandwich_bounds(0.2, fbar, f)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(*(arrays(np.float64, n + 1, elements=vals) for _ in range(3)))), vals)
def test_stieltjes_1d_bilinear(arrs, a):
    u, v, m = arrs
    for rule in ("left", "right"):
        lhs = stieltjes_1d(a * u + v, m, rule)
        assert lhs == pytest.approx(a * stieltjes_1d(u, m, rule) + stieltjes_1d(v, m, rule), abs=1e-9)
        assert stieltjes_1d(u, a * m, rule) == pytest.approx(a * stieltjes_1d(u, m, rule), abs=1e-9)


def test_stieltjes_rules_differ_by_endpoint():
    u = np.array([0.0, 1.0, 4.0])
    m = np.array([3.0, 2.0, 0.0])
    assert stieltjes_1d(u, m, "left") == 0 * -1 + 1 * -2
    assert stieltjes_1d(u, m, "right") == 1 * -1 + 4 * -2


def test_stieltjes_2d_constant_u_reads_corner():
    # padded increments of c telescope to c[0, 0]
    g = make_grid(1, 5)
    rng = np.random.default_rng(0)
    c = H2Fn(rng.normal(size=(5, 5)), g)
    for rule in ("left", "right"):
        assert stieltjes_2d(GridField.constant(2.0, g), c, rule) == pytest.approx(2.0 * c.c[0, 0])


def test_tsquared_conditions_and_factor():
    g = make_grid(1, 16)
    f, u = builtin_trend("tsquared", g), builtin_boundary("constant", g)
    rep = theorem1_upper_bound(f, u)
    assert rep.status is Status.OK and rep.conditions.applicable
    # fbar = t on the first axis: exponent u(T) * 1 - 1/2
    assert rep.theorem1_factor == pytest.approx(math.exp(0.5), rel=1e-12)
    assert rep.theorem1_bound == rep.theorem1_factor


@pytest.mark.parametrize(
    "name, scale, expected",
    [("linear", 3.0, -3.0), ("linear+product", 2.0, -4.0), ("linear", 1.0, 1.0)],
)
def test_factor_closed_forms(name, scale, expected):
    g = make_grid(1, 8)
    rep = theorem1_upper_bound(builtin_trend(name, g, scale), builtin_boundary("constant", g))
    assert math.log(rep.theorem1_factor) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name", ["product", "tsquared+product"])
def test_inapplicable_trends_are_flagged(name):
    g = make_grid(1, 8)
    rep = theorem1_upper_bound(builtin_trend(name, g), builtin_boundary("constant", g))
    assert rep.status is Status.NOT_APPLICABLE
    assert rep.theorem1_bound is None and rep.theorem1_factor is None
    assert rep.to_json_dict()["status"] == "NOT-APPLICABLE"


def test_mixed_axis_functions_of_linear_plus_product():
    g = make_grid(1, 4)
    f13, f23 = mixed_axis_functions(builtin_trend("linear+product", g))
    np.testing.assert_allclose(f13, 0.0, atol=1e-12)
    np.testing.assert_allclose(f23, 0.0, atol=1e-12)


@pytest.mark.parametrize("gamma", [0.5, 2.0, 7.0])
def test_exponent_terms_homogeneous(gamma):
    g = make_grid(1, 8)
    u = builtin_boundary("linear", g, 1.0, 0.7)
    fbar = project_v2plus(builtin_trend("tsquared+linear", g)).projection
    base = theorem1_exponent_terms(fbar, u)
    scaled = theorem1_exponent_terms(gamma * fbar, u)
    for k in ("s13", "s23", "s3"):
        assert scaled[k] == pytest.approx(gamma * base[k], rel=1e-12, abs=1e-12)
    assert scaled["half_norm_sq"] == pytest.approx(gamma**2 * base["half_norm_sq"], rel=1e-12)


@pytest.mark.parametrize("name, scale", [("tsquared", 1.0), ("linear+product", 2.0), ("tsquared+product", 1.0)])
def test_summation_by_parts_identity(name, scale):
    # <fbar, W> = -S13(W) - S23(W) + S3(W) for every realization
    g = make_grid(1, 8)
    fbar = project_v2plus(builtin_trend(name, g, scale)).projection
    z = _draw_increments(g, block_rng(0, 0), 50)
    pw = paley_wiener(fbar, *z)
    for k in range(50):
        W = FieldSample(z[0][k], z[1][k], z[2][k], g).W
        t = theorem1_exponent_terms(fbar, GridField(W, g))
        assert pw[k] == pytest.approx(-t["s13"] - t["s23"] + t["s3"], abs=1e-10)


def test_mc_dominance_on_applicable_trend():
    g = make_grid(1, 8)
    f, u = builtin_trend("linear", g, 3.0), builtin_boundary("constant", g)
    rep = theorem1_upper_bound(f, u, residual_mode="MC", n_samples=20_000, seed=3)
    pf = estimate_plain(f, u, 20_000, seed=4)
    assert rep.residual_estimate is not None
    assert rep.theorem1_bound >= pf.p_hat - 3 * pf.std_err


def test_sandwich_brackets_in_report():
    g = make_grid(1, 8)
    f, u = builtin_trend("tsquared", g), builtin_boundary("constant", g)
    rep = theorem1_upper_bound(f, u, p0_samples=10_000, seed=0)
    assert rep.sandwich_lower_ci <= rep.sandwich_lower <= rep.sandwich_upper <= rep.sandwich_upper_ci
    assert "sandwich" in rep.to_json_dict()


def test_bad_residual_mode():
    g = make_grid(1, 4)
    with pytest.raises(ValueError):
        theorem1_upper_bound(builtin_trend("zero", g), builtin_boundary("constant", g), residual_mode="BOTH")


def test_conditions_report_json():
    g = make_grid(1, 4)
    fbar = project_v2plus(builtin_trend("product", g))
    rep = check_theorem1_conditions(fbar, builtin_boundary("constant", g))
    d = rep.to_json_dict()
    assert d["applicable"] is False and d["f13_nonneg"] is False and d["f13_nonincreasing"] is True


def test_ld_slope_argument_checks():
    g = make_grid(1, 4)
    u = builtin_boundary("constant", g)
    with pytest.raises(DomainError):
        ld_slope(-1.0 * builtin_trend("linear", g), u, [1, 2], n_samples=100)
    with pytest.raises(ValueError):
        ld_slope(builtin_trend("linear", g), u, [2, 1], n_samples=100)
    with pytest.raises(RuntimeError):
        ld_slope(builtin_trend("linear", g), u, [1, 30], n_samples=200, method="PLAIN")


def test_ld_slope_small_run():
    g = make_grid(1, 4)
    res = ld_slope(builtin_trend("linear", g), builtin_boundary("constant", g), [1, 2, 3], n_samples=4000, seed=1)
    assert res.target == pytest.approx(-2.0)
    assert len(res.rows) == 3 and all(r.projected is not None for r in res.rows)
    assert res.slope < 0
    s = res.summary()
    assert set(s) >= {"slope", "target", "ratio"}


def test_stieltjes_small_examples():
    m = np.linspace(0, 1, 101)
    assert stieltjes_1d(np.linspace(0, 3, 101), np.full(101, 2.0)) == 0.0
    assert stieltjes_1d(np.ones(101), m ** 2) == pytest.approx(1.0)
    assert stieltjes_1d(m, -m) == pytest.approx(-0.5, abs=1e-2)
    g = make_grid(1, 4)
    # constant c: with zero padding its only increment sits in the upper-right cell
    u = GridField.from_function(lambda s, t: s * t, g)
    assert stieltjes_2d(u, H2Fn(np.full((4, 4), 3.0), g), "left") == pytest.approx(3.0 * 0.75**2)
    assert stieltjes_2d(u, H2Fn(np.full((4, 4), 3.0), g), "right") == pytest.approx(3.0)


def test_stieltjes_2d_single_atom():
    from noncross.cones import survival_sum

    g = make_grid(1, 4)
    E = np.zeros((4, 4))
    E[2, 1] = 1.0
    c = H2Fn(survival_sum(E), g)
    u = GridField.from_function(lambda s, t: s * t, g)
    S, T = g.mesh()
    assert stieltjes_2d(u, c, "left") == pytest.approx(S[2, 1] * T[2, 1])
    assert stieltjes_2d(u, c, "right") == pytest.approx(S[3, 2] * T[3, 2])


def test_li_kuelbs_unit_components():
    g = make_grid(1, 4)
    h = AdditiveRkhsFn(H1Fn(np.ones(4), g), H1Fn(np.ones(4), g), H2Fn(np.ones((4, 4)), g))
    assert li_kuelbs_delta(h) == pytest.approx(0.690988, abs=1e-6)
    assert li_kuelbs_delta(AdditiveRkhsFn.zeros(g)) == 0.0


def test_sandwich_degenerate_cases():
    g = make_grid(1, 4)
    zero = AdditiveRkhsFn.zeros(g)
    assert sandwich_bounds(0.3, zero, zero) == (pytest.approx(norm.cdf(0.3)), pytest.approx(norm.cdf(0.3)))
    neg = -1.0 * builtin_trend("linear", g)
    lo, hi = sandwich_bounds(0.3, neg, zero)
    assert lo == pytest.approx(norm.cdf(0.3)) and hi > lo


def test_conditions_sign_logic():
    g = make_grid(1, 4)
    c = np.zeros((4, 4))
    c[0, :] = 1.0
    fbar = AdditiveRkhsFn(H1Fn.zeros(g), H1Fn.zeros(g), H2Fn(c, g))
    rep = check_theorem1_conditions(fbar, builtin_boundary("constant", g))
    assert not rep.f13_nonneg and not rep.applicable
    ok = check_theorem1_conditions(project_v2plus(builtin_trend("tsquared", g)), builtin_boundary("constant", g))
    assert ok.applicable and ok.max_violation == 0.0


def test_zero_trend_and_cone_members():
    g = make_grid(1, 8)
    u = builtin_boundary("constant", g)
    rep = theorem1_upper_bound(AdditiveRkhsFn.zeros(g), u)
    assert rep.theorem1_factor == 1.0 and rep.theorem1_bound == 1.0
    f = builtin_trend("linear+product", g, 2.0)
    mc = theorem1_upper_bound(f, u, residual_mode="MC", n_samples=5000, seed=2)
    p0 = estimate_plain(AdditiveRkhsFn.zeros(g), u, 5000, seed=2)
    assert mc.residual_estimate.p_hat == p0.p_hat  # polar part vanishes, so the residual is P_0
    assert mc.theorem1_bound <= mc.theorem1_factor
