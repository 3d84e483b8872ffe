"""Bounds and asymptotics for the non-crossing probability P_f.

Everything here is exact arithmetic on the discrete model except where a
Monte Carlo estimate is fed in explicitly (P_0 for the Gaussian sandwich, the
residual probability P_{f - fbar} for the exponential bound, and the
probabilities entering the large-deviation fit).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .cones import ProjectionResult, padded_increments, project_v2plus
from .field_sim import CrossingEstimate, Method, estimate_importance, estimate_plain
from .grid import DomainError, GridError, GridField, check_same_grid
from .rkhs import AdditiveRkhsFn, H2Fn, to_rkhs

SQRT_2PI = math.sqrt(2.0 * math.pi)


def li_kuelbs_delta(f: AdditiveRkhsFn) -> float:
    """Upper bound ||f|| / sqrt(2 pi) on |P_f - P_0|."""
    return f.norm() / SQRT_2PI


def alpha_from_p0(p0: float) -> float:
    if not 0.0 < p0 < 1.0:
        raise DomainError(f"P_0 estimate must lie strictly in (0, 1), got {p0}")
    return float(norm.ppf(p0))


def sandwich_bounds(alpha: float, f: AdditiveRkhsFn, g: AdditiveRkhsFn, tol: float = 1e-12) -> tuple[float, float]:
    """(Phi(alpha - |g|), Phi(alpha + |f|)) for a dominating g >= f."""
    check_same_grid(f.grid, g.grid)
    if not math.isfinite(alpha):
        raise DomainError("alpha must be finite")
    gap = g.values() - f.values()
    if np.min(gap) < -tol * (1.0 + np.max(np.abs(f.values()))):
        raise DomainError(f"g must dominate f at every node (min gap {np.min(gap):.3e})")
    return float(norm.cdf(alpha - g.norm())), float(norm.cdf(alpha + f.norm()))


def stieltjes_1d(u_trace, m, rule: str = "left") -> float:
    """Sum over k of u * (m[k] - m[k-1]).

    ``rule="left"`` evaluates u at index k-1; ``rule="right"`` at index k, which
    is where a step integrator indexed by cells actually jumps.
    """
    u = np.asarray(u_trace, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if u.shape != m.shape or u.ndim != 1:
        raise GridError(f"length mismatch: u {u.shape} vs m {m.shape}")
    if rule not in ("left", "right"):
        raise ValueError(f"unknown rule {rule!r}")
    dm = np.diff(m)
    return math.fsum((u[:-1] if rule == "left" else u[1:]) * dm)


def stieltjes_2d(u: GridField, c: H2Fn, rule: str = "left") -> float:
    """Sum over cells of u times the adjacent 2D increment of c (c padded with zeros beyond T).

    Cell (i, j) of the increment array pairs with node (i, j) under ``"left"`` and
    with node (i+1, j+1) under ``"right"``.
    """
    if isinstance(u, GridField):
        check_same_grid(u.grid, c.grid)
        uv = u.values
    else:
        uv = np.asarray(u, dtype=np.float64)
    n = c.grid.n
    if uv.shape != (n + 1, n + 1):
        raise GridError(f"shape mismatch: u {uv.shape} vs grid n={n}")
    if rule not in ("left", "right"):
        raise ValueError(f"unknown rule {rule!r}")
    D = padded_increments(c.c)
    return math.fsum(((uv[:-1, :-1] if rule == "left" else uv[1:, 1:]) * D).ravel())


# --- exponential upper bound --------------------------------------------------------------------


def mixed_axis_functions(fbar: AdditiveRkhsFn) -> tuple[np.ndarray, np.ndarray]:
    """fbar_1' - fbar_3''(., 0) and fbar_2' - fbar_3''(0, .), one value per cell."""
    c = fbar.h3.c
    return fbar.h1.d - c[:, 0], fbar.h2.d - c[0, :]


def _with_tail(x: np.ndarray) -> np.ndarray:
    return np.concatenate((x, [0.0]))


@dataclass(frozen=True)
class ConditionReport:
    f13_nonneg: bool
    f13_nonincreasing: bool
    f23_nonneg: bool
    f23_nonincreasing: bool
    limits_ok: bool
    max_violation: float
    tol: float
    limits_policy: str = "bounded u, derivatives supported in [0, T]"

    @property
    def applicable(self) -> bool:
        return self.f13_nonneg and self.f13_nonincreasing and self.f23_nonneg and self.f23_nonincreasing and self.limits_ok

    def to_json_dict(self) -> dict:
        return {
            "f13_nonneg": self.f13_nonneg,
            "f13_nonincreasing": self.f13_nonincreasing,
            "f23_nonneg": self.f23_nonneg,
            "f23_nonincreasing": self.f23_nonincreasing,
            "limits_ok": self.limits_ok,
            "limits_policy": self.limits_policy,
            "max_violation": self.max_violation,
            "applicable": self.applicable,
        }


def check_theorem1_conditions(fbar: ProjectionResult | AdditiveRkhsFn, u: GridField, tol: float = 1e-10) -> ConditionReport:
    p = fbar.projection if isinstance(fbar, ProjectionResult) else fbar
    check_same_grid(p.grid, u.grid)
    f13, f23 = mixed_axis_functions(p)
    scale = tol * (1.0 + max(float(np.max(np.abs(f13))), float(np.max(np.abs(f23)))))

    def neg(x):
        return max(0.0, -float(np.min(x)))

    def rise(x):
        return max(0.0, float(np.max(np.diff(x)))) if x.size > 1 else 0.0

    v = [neg(f13), rise(f13), neg(f23), rise(f23)]
    limits_ok = bool(np.all(np.isfinite(u.values)))
    return ConditionReport(
        f13_nonneg=bool(v[0] <= scale),
        f13_nonincreasing=bool(v[1] <= scale),
        f23_nonneg=bool(v[2] <= scale),
        f23_nonincreasing=bool(v[3] <= scale),
        limits_ok=limits_ok,
        max_violation=max(v),
        tol=scale,
    )


def theorem1_exponent_terms(fbar: AdditiveRkhsFn, u) -> dict:
    """The three Stieltjes terms and the quadratic term of the exponential factor.

    The integrators are step functions on cells with the zero tail beyond T
    appended; ``u`` is taken at the node where each step occurs. With ``u``
    replaced by a field realization W these terms reproduce the discrete
    stochastic integral <fbar, W> exactly.
    """
    uv = u.values if isinstance(u, GridField) else np.asarray(u, dtype=np.float64)
    f13, f23 = mixed_axis_functions(fbar)
    s1 = stieltjes_1d(uv[:, 0], _with_tail(f13), rule="right")
    s2 = stieltjes_1d(uv[0, :], _with_tail(f23), rule="right")
    s3 = stieltjes_2d(uv, fbar.h3, rule="right")
    return {"s13": s1, "s23": s2, "s3": s3, "half_norm_sq": 0.5 * fbar.norm_sq()}


class Status(str, enum.Enum):
    OK = "OK"
    NOT_APPLICABLE = "NOT-APPLICABLE"


@dataclass(frozen=True)
class BoundReport:
    status: Status
    norm_f: float
    norm_fbar: float
    li_kuelbs_delta: float
    conditions: ConditionReport
    theorem1_factor: float | None = None
    theorem1_bound: float | None = None
    residual_mode: str = "ONE"
    residual_estimate: CrossingEstimate | None = None
    exponent_terms: dict = field(default_factory=dict)
    p0_estimate: CrossingEstimate | None = None
    sandwich_lower: float | None = None
    sandwich_upper: float | None = None
    sandwich_lower_ci: float | None = None
    sandwich_upper_ci: float | None = None

    def to_json_dict(self) -> dict:
        d = {
            "status": Status(self.status).value,
            "norm_f": self.norm_f,
            "norm_fbar": self.norm_fbar,
            "li_kuelbs_delta": self.li_kuelbs_delta,
            "conditions": self.conditions.to_json_dict(),
            "theorem1_factor": self.theorem1_factor,
            "theorem1_bound": self.theorem1_bound,
            "residual_mode": self.residual_mode,
            "residual_estimate": self.residual_estimate.to_json_dict() if self.residual_estimate else 1.0,
            "exponent_terms": self.exponent_terms,
        }
        if self.p0_estimate is not None:
            d["p0_estimate"] = self.p0_estimate.to_json_dict()
            d["sandwich"] = {
                "lower": self.sandwich_lower,
                "upper": self.sandwich_upper,
                "lower_ci": self.sandwich_lower_ci,
                "upper_ci": self.sandwich_upper_ci,
            }
        return d


def theorem1_upper_bound(
    f,
    u: GridField,
    residual_mode: str = "ONE",
    n_samples: int = 100_000,
    seed: int = 0,
    p0_samples: int = 0,
    threads: int = 1,
    tol: float = 1e-10,
) -> BoundReport:
    """P_f <= P_{f - fbar} exp(-S13 - S23 + S3 - |fbar|^2 / 2) when the conditions hold.

    ``residual_mode="ONE"`` bounds P_{f - fbar} by 1 (a certified bound);
    ``"MC"`` replaces it by a plain Monte Carlo estimate. With ``p0_samples > 0``
    the report also carries the Gaussian sandwich around P_f built from an
    estimate of P_0, with the estimate's 3-sigma interval pushed through.
    """
    f = f if isinstance(f, AdditiveRkhsFn) else to_rkhs(f)
    check_same_grid(f.grid, u.grid)
    if residual_mode not in ("ONE", "MC"):
        raise ValueError(f"residual_mode must be ONE or MC, got {residual_mode!r}")
    proj = project_v2plus(f)
    fbar = proj.projection
    cond = check_theorem1_conditions(proj, u, tol)
    base = dict(
        norm_f=f.norm(),
        norm_fbar=fbar.norm(),
        li_kuelbs_delta=li_kuelbs_delta(f),
        conditions=cond,
        residual_mode=residual_mode,
    )
    if p0_samples:
        p0 = estimate_plain(AdditiveRkhsFn.zeros(f.grid), u, p0_samples, seed + 1, threads=threads)
        lo, hi = p0.ci(3.0)
        eps = 1e-300
        a, a_lo, a_hi = (float(norm.ppf(min(max(x, eps), 1 - 1e-16))) for x in (p0.p_hat, lo, hi))
        base.update(
            p0_estimate=p0,
            sandwich_lower=float(norm.cdf(a - fbar.norm())),
            sandwich_upper=float(norm.cdf(a + f.norm())),
            sandwich_lower_ci=float(norm.cdf(a_lo - fbar.norm())),
            sandwich_upper_ci=float(norm.cdf(a_hi + f.norm())),
        )
    if not cond.applicable:
        return BoundReport(status=Status.NOT_APPLICABLE, **base)
    terms = theorem1_exponent_terms(fbar, u)
    factor = math.exp(-terms["s13"] - terms["s23"] + terms["s3"] - terms["half_norm_sq"])
    residual = None
    bound = factor
    if residual_mode == "MC":
        residual = estimate_plain(proj.polar_part, u, n_samples, seed, threads=threads)
        bound = factor * residual.p_hat
    return BoundReport(
        status=Status.OK,
        theorem1_factor=factor,
        theorem1_bound=bound,
        residual_estimate=residual,
        exponent_terms=terms,
        **base,
    )


# --- large deviations --------------------------------------------------------------


@dataclass(frozen=True)
class LDRow:
    gamma: float
    estimate: CrossingEstimate
    projected: CrossingEstimate | None

    @property
    def ln_p(self) -> float:
        return math.log(self.estimate.p_hat) if self.estimate.p_hat > 0 else -math.inf

    def ln_ci(self, z: float = 3.0) -> tuple[float, float]:
        return _log_ci(self.estimate, z)


def _log_ci(est: CrossingEstimate, z: float) -> tuple[float, float]:
    lo, hi = est.ci(z)
    return (math.log(lo) if lo > 0 else -math.inf), (math.log(hi) if hi > 0 else -math.inf)


@dataclass(frozen=True)
class LDResult:
    rows: tuple
    slope: float
    intercept: float
    target: float
    norm_fbar_sq: float

    @property
    def ratio(self) -> float:
        return self.slope / self.target

    @property
    def relative_gap(self) -> float:
        return abs(self.slope - self.target) / abs(self.target)

    def pointwise_ratios(self) -> list[float]:
        """ln P_{gamma f} / (-gamma^2 |fbar|^2 / 2) for each gamma."""
        return [r.ln_p / (0.5 * r.gamma**2 * self.target) for r in self.rows]

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "target": self.target,
            "ratio": self.ratio,
            "relative_gap": self.relative_gap,
            "pointwise_ratios": self.pointwise_ratios(),
        }


def ld_slope(
    f,
    u: GridField,
    gammas,
    n_samples: int = 100_000,
    seed: int = 0,
    method: str = "IMPORTANCE",
    paired: bool = True,
    threads: int = 1,
) -> LDResult:
    """Fit ln P_{gamma f} against gamma^2 / 2; the limiting slope is -|fbar|^2.

    With importance sampling the shift for each gamma is gamma * fbar. When
    ``paired`` is set, P_{gamma fbar} is estimated as well (same seed).
    """
    f = f if isinstance(f, AdditiveRkhsFn) else to_rkhs(f)
    if not np.max(f.values()) > 0:
        raise DomainError("trend is nowhere positive; the large-deviation statement does not apply")
    gammas = [float(g) for g in gammas]
    if any(g <= 0 for g in gammas) or any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gammas must be positive and increasing")
    method = Method(method)
    fbar = project_v2plus(f).projection
    rows = []
    for k, gamma in enumerate(gammas):
        s = seed + 1000 * k
        if method is Method.IMPORTANCE:
            est = estimate_importance(gamma * f, u, n_samples, s, shift=gamma * fbar, threads=threads)
            proj = estimate_importance(gamma * fbar, u, n_samples, s, shift=gamma * fbar, threads=threads) if paired else None
        else:
            est = estimate_plain(gamma * f, u, n_samples, s, threads=threads)
            proj = estimate_plain(gamma * fbar, u, n_samples, s, threads=threads) if paired else None
            if est.p_hat == 0 or (proj is not None and proj.p_hat == 0):
                raise RuntimeError(
                    f"plain Monte Carlo returned P = 0 at gamma = {gamma}; use method='IMPORTANCE'"
                )
        rows.append(LDRow(gamma, est, proj))
    x = np.array([0.5 * g * g for g in gammas])
    y = np.array([r.ln_p for r in rows])
    if len(gammas) >= 2:
        slope, intercept = np.polyfit(x, y, 1)
    else:
        slope, intercept = y[0] / x[0], 0.0
    nsq = fbar.norm_sq()
    return LDResult(tuple(rows), float(slope), float(intercept), -nsq, nsq)
