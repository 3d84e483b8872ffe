"""Deterministic invariant suites bundled behind ``noncross verify``.

Each suite returns a :class:`SuiteResult`; the report contains no timings so
that two runs with the same configuration are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import Status, theorem1_exponent_terms, theorem1_upper_bound
from .catalog import builtin_boundary, builtin_trend
from .cones import ConeId, check_cone_membership, polar_verify, project_v2plus
from .field_sim import (
    FieldSample,
    _draw_increments,
    additive_covariance,
    block_rng,
    estimate_axis,
    estimate_plain,
    oracle_1d,
    paley_wiener,
    restrict,
    sample_fields,
    verify_ibp,
)
from .grid import GridField, GridSpec
from .rkhs import AdditiveRkhsFn, H1Fn, H2Fn

# (trend, scale, boundary kind, boundary value, boundary slope)
CORPUS = (
    ("zero", 1.0, "constant", 1.0, 0.0),
    ("linear", 1.0, "constant", 1.5, 0.0),
    ("linear", 3.0, "constant", 1.0, 0.0),
    ("tsquared", 1.0, "constant", 1.0, 0.0),
    ("product", 1.0, "constant", 1.0, 0.0),
    ("tsquared+product", 1.0, "constant", 1.0, 0.0),
    ("linear+product", 2.0, "constant", 1.0, 0.0),
    ("tsquared", 1.0, "linear", 1.0, 0.5),
    ("linear", 1.0, "linear", 0.5, 1.0),
)


def corpus(grid: GridSpec):
    """Builtin (name, f, u) instances on ``grid``."""
    out = []
    for name, scale, kind, value, slope in CORPUS:
        label = f"{name}*{scale:g}|{kind}({value:g},{slope:g})"
        out.append((label, builtin_trend(name, grid, scale), builtin_boundary(kind, grid, value, slope)))
    return out


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    checks: list = field(default_factory=list)

    def check(self, label: str, ok: bool, **values):
        ok = bool(ok)
        self.checks.append({"check": label, "passed": ok, **{k: _plain(v) for k, v in values.items()}})
        self.passed = self.passed and ok

    def failures(self) -> list[str]:
        return [c["check"] for c in self.checks if not c["passed"]]

    def to_json_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks}


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    return v


# --- suites --------------------------------------------------------------------------


def covariance_suite(grid: GridSpec, n_samples: int, seed: int, pairs: int = 10, z: float = 4.0) -> SuiteResult:
    res = SuiteResult("covariance")
    W = sample_fields(grid, n_samples, seed)
    rng = np.random.default_rng([seed, 17])
    n = grid.n
    idx = [tuple(rng.integers(1, n + 1, size=4)) for _ in range(pairs)] + [(n, n, n, n)]
    x = grid.nodes
    for i, j, k, l in idx:
        a, b = W[:, i, j], W[:, k, l]
        prod = (a - a.mean()) * (b - b.mean())
        emp = prod.sum() / (n_samples - 1)
        se = prod.std(ddof=1) / math.sqrt(n_samples)
        exact = additive_covariance((x[i], x[j]), (x[k], x[l]))
        res.check(f"cov[{i},{j}|{k},{l}]", abs(emp - exact) <= z * se, empirical=emp, exact=exact, std_err=se)
    return res


def _random_trend(grid: GridSpec, rng: np.random.Generator, scale: float = 1.0) -> AdditiveRkhsFn:
    n = grid.n
    return AdditiveRkhsFn(
        H1Fn(scale * rng.normal(size=n), grid),
        H1Fn(scale * rng.normal(size=n), grid),
        H2Fn(scale * rng.normal(size=(n, n)), grid),
    )


def moreau_suite(grid: GridSpec, seed: int, n_random: int = 5, trials: int = 20) -> SuiteResult:
    res = SuiteResult("moreau")
    rng = np.random.default_rng([seed, 23])
    cases = [(label, f) for label, f, _ in corpus(grid)]
    cases += [(f"random{k}", _random_trend(grid, rng)) for k in range(n_random)]
    for label, f in cases:
        r = project_v2plus(f)
        p, q = r.projection, r.polar_part
        scale = 1.0 + f.norm_sq()
        split = float(np.max(np.abs((p + q - f).values())))
        res.check(f"{label}: x = p + q", split <= 1e-10 * scale, defect=split)
        res.check(f"{label}: <p,q> ~ 0", abs(r.orthogonality_defect) <= 1e-8 * scale, defect=r.orthogonality_defect)
        res.check(f"{label}: p in cone", check_cone_membership(p, ConeId.V2PLUS) <= 1e-8 * scale)
        res.check(f"{label}: q <= 0 at nodes", check_cone_membership(q, ConeId.V2PLUS_POLAR) <= 1e-8 * scale)
        rep = polar_verify(r, trials=trials, seed=seed)
        res.check(f"{label}: polar pairing", rep.passed, max_inner=rep.max_inner)
    return res


def _ibp_integrand(grid: GridSpec) -> np.ndarray:
    S, T = grid.mesh()
    return np.exp(-S - T) + (2.0 - S) * (2.0 - T)


def ibp_suite(seed: int, n_samples: int = 50, levels=(8, 16, 32, 64), min_factor: float = 1.5) -> SuiteResult:
    res = SuiteResult("integration_by_parts")
    fine = GridSpec(1.0, levels[-1])
    z1, z2, z3 = _draw_increments(fine, block_rng(seed, 0), n_samples)
    resid = np.zeros((len(levels), n_samples))
    exact = np.zeros(n_samples)
    for k in range(n_samples):
        s = FieldSample(z1[k], z2[k], z3[k], fine)
        for i, n in enumerate(levels):
            sub = restrict(s, levels[-1] // n)
            resid[i, k] = verify_ibp(_ibp_integrand(sub.grid), sub, "left")
        exact[k] = verify_ibp(_ibp_integrand(fine), s, "right")
    med = np.median(resid, axis=1)
    for i in range(1, len(levels)):
        factor = med[i - 1] / med[i]
        res.check(f"left rule {levels[i - 1]}->{levels[i]}", factor >= min_factor, factor=factor)
    res.check("right rule exact", float(exact.max()) <= 1e-9, max_residual=float(exact.max()))
    return res


def exponent_identity_suite(grid: GridSpec, seed: int, n_samples: int = 200) -> SuiteResult:
    """<fbar, W> equals -S13(W) - S23(W) + S3(W) sample by sample."""
    res = SuiteResult("exponent_identity")
    z1, z2, z3 = _draw_increments(grid, block_rng(seed, 0), n_samples)
    for label, f, _ in corpus(grid):
        fbar = project_v2plus(f).projection
        pw = paley_wiener(fbar, z1, z2, z3)
        worst = 0.0
        for k in range(n_samples):
            W = FieldSample(z1[k], z2[k], z3[k], grid).W
            t = theorem1_exponent_terms(fbar, GridField(W, grid))
            worst = max(worst, abs(pw[k] - (-t["s13"] - t["s23"] + t["s3"])))
        res.check(f"{label}", worst <= 1e-9 * (1.0 + fbar.norm_sq()), max_defect=worst)
    return res


def _combined(*estimates) -> float:
    return math.sqrt(sum(e.std_err**2 for e in estimates))


def sandwich_suite(grid: GridSpec, n_samples: int, seed: int) -> SuiteResult:
    """Monotone sandwich and dominance of the exponential bound on the builtin corpus."""
    res = SuiteResult("sandwich_dominance")
    for label, f, u in corpus(grid):
        rep = theorem1_upper_bound(f, u, residual_mode="MC", n_samples=n_samples, seed=seed, p0_samples=n_samples)
        fbar = project_v2plus(f).projection
        pf = estimate_plain(f, u, n_samples, seed)
        pbar = estimate_plain(fbar, u, n_samples, seed)
        se = _combined(pf, pbar, rep.p0_estimate)
        res.check(
            f"{label}: sandwich",
            rep.sandwich_lower_ci - 3 * se <= pbar.p_hat <= pf.p_hat + 3 * _combined(pf, pbar)
            and pf.p_hat <= rep.sandwich_upper_ci + 3 * se,
            lower=rep.sandwich_lower_ci,
            p_fbar=pbar.p_hat,
            p_f=pf.p_hat,
            upper=rep.sandwich_upper_ci,
        )
        if rep.status is Status.OK:
            one = theorem1_upper_bound(f, u, residual_mode="ONE")
            mc_se = math.sqrt(pf.std_err**2 + (rep.theorem1_factor * rep.residual_estimate.std_err) ** 2)
            res.check(f"{label}: dominance (ONE)", one.theorem1_bound >= pf.p_hat - 3 * pf.std_err, bound=one.theorem1_bound, p_f=pf.p_hat)
            res.check(f"{label}: dominance (MC)", rep.theorem1_bound >= pf.p_hat - 3 * mc_se, bound=rep.theorem1_bound, p_f=pf.p_hat)
        else:
            res.check(f"{label}: flagged", rep.theorem1_bound is None, status=rep.status.value)
    return res


def oracle_suite(steps: int, n_samples: int, seed: int) -> SuiteResult:
    """Axis-mode hitting probability against the reflection formula (approached from above)."""
    res = SuiteResult("oracle_1d")
    grid = GridSpec(1.0, steps)
    exact = oracle_1d(0.0, 1.0, 1.0)
    est = estimate_axis(np.ones(steps + 1), grid, n_samples, seed)
    res.check("from above", est.p_hat >= exact - 3 * est.std_err, p_hat=est.p_hat, exact=exact, std_err=est.std_err)
    res.check("gap <= 0.05", est.p_hat - exact <= 0.05, gap=est.p_hat - exact)
    return res


def run_suites(cfg) -> list[SuiteResult]:
    v = cfg.verify
    seed = cfg.estimator.seed
    grid = GridSpec(cfg.grid.T, v.n)
    return [
        covariance_suite(grid, v.n_samples, seed, v.node_pairs),
        moreau_suite(grid, seed),
        ibp_suite(seed, v.ibp_samples),
        exponent_identity_suite(grid, seed),
        sandwich_suite(grid, v.n_samples, seed),
        oracle_suite(v.oracle_steps, v.n_samples, seed),
    ]


__all__ = [
    "CORPUS",
    "SuiteResult",
    "corpus",
    "covariance_suite",
    "moreau_suite",
    "ibp_suite",
    "exponent_identity_suite",
    "sandwich_suite",
    "oracle_suite",
    "run_suites",
]
