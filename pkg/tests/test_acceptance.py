"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (about five minutes on
one core). All seeds are fixed; nothing here is tuned per run.
"""

import math
import time

import numpy as np
import pytest

from oracles import brute_force_projection, v1_constraints, v2_constraints

from noncross.bounds import Status, ld_slope, theorem1_upper_bound
from noncross.catalog import builtin_boundary, builtin_trend
from noncross.cli import main
from noncross.cones import ConeId, check_cone_membership, project_v1, project_v2, project_v2plus, random_cone_member
from noncross.field_sim import estimate_axis, estimate_plain, oracle_1d
from noncross.grid import GridSpec, make_grid
from noncross.rkhs import AdditiveRkhsFn, H1Fn, H2Fn, additive_inner, h1_inner, h2_inner
from noncross.verify import corpus, covariance_suite, ibp_suite

GRID = make_grid(1.0, 16)
N_MC = 100_000


def report(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n[{label}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def combined(*estimates):
    return math.sqrt(sum(e.std_err**2 for e in estimates))


# 1 ---------------------------------------------------------------------------------


def test_criterion_1_covariance(capsys):
    t0 = time.perf_counter()
    res = covariance_suite(GRID, N_MC, seed=0, pairs=10, z=4.0)
    elapsed = time.perf_counter() - t0
    worst = max(abs(c["empirical"] - c["exact"]) / c["std_err"] for c in res.checks)
    var = res.checks[-1]
    ok = res.passed and elapsed <= 60
    report(
        capsys,
        "criterion 1 covariance",
        ok,
        f"10 node pairs + Var W(1,1) = {var['empirical']:.4f} (exact 3); worst |z| = {worst:.2f} <= 4; {elapsed:.1f}s",
    )


# 2 ---------------------------------------------------------------------------------


def _moreau_ok(r, inner, x_norm_sq, node_values):
    scale = max(1.0, x_norm_sq)
    return abs(inner(r.projection, r.polar_part)) <= 1e-8 * scale and float(np.max(node_values)) <= 1e-8 * scale


def test_criterion_2_projection_oracles(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    err1 = err2 = 0.0
    moreau_fail = 0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        g = make_grid(1, n)
        d = rng.normal(size=n) * rng.exponential(2)
        r = project_v1(H1Fn(d, g))
        err1 = max(err1, float(np.max(np.abs(r.projection.d - brute_force_projection(d, v1_constraints(n))))))
        split = float(np.max(np.abs(r.projection.d + r.polar_part.d - d)))
        moreau_fail += split > 1e-12 or not _moreau_ok(r, h1_inner, h1_inner(H1Fn(d, g), H1Fn(d, g)), r.polar_part.values())
    g3 = make_grid(1, 3)
    for _ in range(200):
        c = rng.normal(size=(3, 3)) * rng.exponential(2)
        r = project_v2(H2Fn(c, g3))
        ref = brute_force_projection(c, v2_constraints(3)).reshape(3, 3)
        err2 = max(err2, float(np.max(np.abs(r.projection.c - ref))))
        split = float(np.max(np.abs(r.projection.c + r.polar_part.c - c)))
        moreau_fail += split > 1e-12 or not _moreau_ok(r, h2_inner, h2_inner(H2Fn(c, g3), H2Fn(c, g3)), r.polar_part.values())
    elapsed = time.perf_counter() - t0
    ok = err1 <= 1e-6 and err2 <= 1e-6 and moreau_fail == 0 and elapsed <= 60
    report(
        capsys,
        "criterion 2 projection",
        ok,
        f"max |V1 - oracle| = {err1:.1e}, max |V2 - oracle| = {err2:.1e} over 200+200; "
        f"Moreau failures {moreau_fail}; {elapsed:.1f}s",
    )


# 3 ---------------------------------------------------------------------------------


def _random_trend(rng, grid, scale=1.0):
    n = grid.n
    return AdditiveRkhsFn(
        H1Fn(scale * rng.normal(size=n), grid),
        H1Fn(scale * rng.normal(size=n), grid),
        H2Fn(scale * rng.normal(size=(n, n)), grid),
    )


def _lift_to_majorant(m, f, e):
    """m + k e with the smallest k >= 0 such that the sum dominates f off the origin."""
    gap = f.values() - m.values()
    ev = e.values()
    mask = ev > 0
    k = max(0.0, float(np.max(gap[mask] / ev[mask])))
    return m + k * e


def test_criterion_3_minimal_majorant(capsys):
    rng = np.random.default_rng(3)
    grid = make_grid(1, 8)
    e = builtin_trend("linear", grid)  # positive away from the origin, inside the cone
    trends = {
        "tsquared": builtin_trend("tsquared", grid),
        "product": builtin_trend("product", grid),
        "tsquared+product": builtin_trend("tsquared+product", grid),
        "random-a": _random_trend(rng, grid),
        "random-b": _random_trend(rng, grid, 3.0),
    }
    worst = math.inf
    infeasible = 0
    for name, f in trends.items():
        fbar = project_v2plus(f).projection
        for k in range(100):
            m = random_cone_member(f, rng)
            g = fbar + m if k % 2 == 0 else _lift_to_majorant(m, f, e)
            feasible = np.all(g.values() >= f.values() - 1e-12) and check_cone_membership(g, ConeId.V2PLUS) <= 1e-10 * (1 + g.norm_sq())
            infeasible += not feasible
            worst = min(worst, g.norm() - fbar.norm())
    ok = infeasible == 0 and worst >= -1e-10
    report(capsys, "criterion 3 minimization", ok, f"500 feasible majorants; min(|g| - |fbar|) = {worst:.3e}; infeasible {infeasible}")


# 4 ---------------------------------------------------------------------------------


def test_criterion_4_li_kuelbs(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    u = builtin_boundary("constant", GRID)
    p0 = estimate_plain(AdditiveRkhsFn.zeros(GRID), u, N_MC, seed=400)
    worst_slack = math.inf
    fails = 0
    for k in range(20):
        f = _random_trend(rng, GRID)
        f = (rng.uniform(0.05, 0.5) / f.norm()) * f
        pf = estimate_plain(f, u, N_MC, seed=401 + k)
        slack = f.norm() / math.sqrt(2 * math.pi) + 3 * combined(pf, p0) - abs(pf.p_hat - p0.p_hat)
        worst_slack = min(worst_slack, slack)
        fails += slack < 0
    elapsed = time.perf_counter() - t0
    ok = fails == 0 and elapsed <= 600
    report(capsys, "criterion 4 Li-Kuelbs", ok, f"20 trends, P0 = {p0.p_hat:.4f}; min slack {worst_slack:.4f}; {elapsed:.1f}s")


# 5 and 6 ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus_runs():
    runs = []
    for label, f, u in corpus(GRID):
        fbar = project_v2plus(f).projection
        rep = theorem1_upper_bound(f, u, residual_mode="ONE", seed=500, p0_samples=N_MC)
        pf = estimate_plain(f, u, N_MC, seed=600)
        pbar = estimate_plain(fbar, u, N_MC, seed=600)
        runs.append((label, rep, pf, pbar))
    return runs


def test_criterion_5_sandwich(capsys, corpus_runs):
    lines, fails = [], 0
    for label, rep, pf, pbar in corpus_runs:
        lower_ok = rep.sandwich_lower_ci <= pbar.p_hat + 3 * pbar.std_err
        middle_ok = pbar.p_hat <= pf.p_hat + 3 * combined(pf, pbar)
        upper_ok = pf.p_hat - 3 * pf.std_err <= rep.sandwich_upper_ci
        fails += not (lower_ok and middle_ok and upper_ok)
        lines.append(f"{label}: {rep.sandwich_lower_ci:.4f} <= {pbar.p_hat:.4f} <= {pf.p_hat:.4f} <= {rep.sandwich_upper_ci:.4f}")
    report(capsys, "criterion 5 sandwich", fails == 0, f"{len(lines)} instances, {fails} violations\n  " + "\n  ".join(lines))


def test_criterion_6_dominance(capsys, corpus_runs):
    lines, fails, applicable = [], 0, 0
    for label, rep, pf, _ in corpus_runs:
        if rep.conditions.applicable:
            applicable += 1
            ok = rep.status is Status.OK and rep.theorem1_bound >= pf.p_hat - 3 * pf.std_err
            lines.append(f"{label}: bound {rep.theorem1_bound:.4g} >= P_f {pf.p_hat:.4g}")
        else:
            ok = rep.status is Status.NOT_APPLICABLE and rep.theorem1_bound is None
            lines.append(f"{label}: NOT-APPLICABLE")
        fails += not ok
    report(
        capsys,
        "criterion 6 dominance",
        fails == 0 and applicable > 0,
        f"{applicable} applicable, {len(lines) - applicable} flagged, {fails} failures\n  " + "\n  ".join(lines),
    )


def test_criterion_6_dominance_mc_residual(capsys):
    fails, n = 0, 0
    for label, f, u in corpus(GRID):
        rep = theorem1_upper_bound(f, u, residual_mode="MC", n_samples=N_MC, seed=700)
        if rep.status is not Status.OK:
            continue
        n += 1
        pf = estimate_plain(f, u, N_MC, seed=701)
        se = math.hypot(pf.std_err, rep.theorem1_factor * rep.residual_estimate.std_err)
        fails += rep.theorem1_bound < pf.p_hat - 3 * se
    report(capsys, "criterion 6 dominance (MC residual)", fails == 0, f"{n} applicable instances, {fails} failures")


# 7 ---------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def ld_run():
    f = builtin_trend("tsquared+product", GRID)
    u = builtin_boundary("constant", GRID)
    return ld_slope(f, u, [1, 2, 3, 4], n_samples=N_MC, seed=0, method="IMPORTANCE", paired=True)


def _ln_ci(est, z=3.0):
    lo, hi = est.ci(z)
    return (math.log(lo) if lo > 0 else -math.inf), math.log(hi)


def test_criterion_7a_projected_trend_agrees(capsys, ld_run):
    lines, fails = [], 0
    for r in ld_run.rows:
        a, b = _ln_ci(r.estimate), _ln_ci(r.projected)
        overlap = a[0] <= b[1] and b[0] <= a[1]
        fails += not overlap
        lines.append(
            f"gamma={r.gamma:g}: ln P_gf = {r.ln_p:.3f} [{a[0]:.3f}, {a[1]:.3f}]  "
            f"ln P_gfbar = {math.log(r.projected.p_hat):.3f} [{b[0]:.3f}, {b[1]:.3f}]  "
            f"ratio {r.ln_p / math.log(r.projected.p_hat):.3f}"
        )
    report(capsys, "criterion 7a ln P agreement", fails == 0, f"{fails}/4 gammas disjoint\n  " + "\n  ".join(lines))


def test_criterion_7b_slope_within_30pct(capsys, ld_run):
    ok = ld_run.relative_gap <= 0.30
    report(
        capsys,
        "criterion 7b slope",
        ok,
        f"slope {ld_run.slope:.4f} vs target {ld_run.target:.4f}: ratio {ld_run.ratio:.3f}, gap {ld_run.relative_gap:.1%}",
    )


def test_criterion_7b_ratio_improves_monotonically(capsys, ld_run):
    ratios = ld_run.pointwise_ratios()
    dist = [abs(1.0 - r) for r in ratios]
    ok = all(b < a for a, b in zip(dist, dist[1:]))
    report(
        capsys,
        "criterion 7b monotone",
        ok,
        "ln P_gf / (-gamma^2 |fbar|^2 / 2) = " + ", ".join(f"{r:.3f}" for r in ratios),
    )


# 8 ---------------------------------------------------------------------------------


def test_criterion_8_ibp_refinement(capsys):
    res = ibp_suite(seed=0, n_samples=100, levels=(8, 16, 32, 64), min_factor=1.5)
    factors = [c["factor"] for c in res.checks if "factor" in c]
    report(capsys, "criterion 8 IBP", res.passed, "median residual factors per doubling " + ", ".join(f"{x:.3f}" for x in factors))


# 9 ---------------------------------------------------------------------------------


def test_criterion_9_one_dimensional_oracle(capsys):
    exact = oracle_1d(0.0, 1.0, 1.0)
    gaps, ests = [], []
    for n in (256, 1024, 4096):
        est = estimate_axis(np.ones(n + 1), GridSpec(1.0, n), 1_000_000, seed=9)
        ests.append(est)
        gaps.append(est.p_hat - exact)
    last = ests[-1]
    ok = last.p_hat > exact and gaps[-1] <= 0.01 and gaps[0] > gaps[1] > gaps[2]
    report(
        capsys,
        "criterion 9 1D oracle",
        ok,
        f"exact {exact:.6f}; p_hat(4096) = {last.p_hat:.6f} +- {last.std_err:.6f}; "
        "gaps " + ", ".join(f"n={n}: {g:.5f}" for n, g in zip((256, 1024, 4096), gaps)),
    )


# 10 --------------------------------------------------------------------------------


def test_criterion_10_verify_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    t0 = time.perf_counter()
    code_a = main(["verify", "--seed", "10", "--out", str(a)])
    code_b = main(["verify", "--seed", "10", "--out", str(b)])
    elapsed = time.perf_counter() - t0
    ok = code_a == 0 and code_b == 0 and a.read_bytes() == b.read_bytes()
    report(capsys, "criterion 10 determinism", ok, f"exit codes {code_a}, {code_b}; identical bytes: {a.read_bytes() == b.read_bytes()}; {elapsed:.1f}s for two runs")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
