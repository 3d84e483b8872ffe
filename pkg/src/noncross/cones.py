"""Metric projections onto the monotone cones V1, V2 and V2+ and their polars.

Derivatives are implicitly zero beyond T, so the cones are the infinite-horizon
ones restricted to trends supported on [0, T]:

* V1: h' non-increasing and h' >= 0 (the zero tail beyond T forces the sign).
* V2: every adjacent 2D increment of h'' is non-negative once h'' is padded
  with zeros beyond T. This covers row/column monotonicity, supermodularity
  of interior cells and h'' >= 0 at the far corner.
* V2+: componentwise (V1, V1, V2).

Both V1 and V2 are simplicial: h lies in the cone iff it is a non-negative
combination of the "survival" generators 1{cells <= k} (1D) or 1{cells <= (a, b)}
(2D). Pairing with a generator reads off a node value of the reconstructed
function, so the polar cones are exactly the functions that are <= 0 at every node.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .rkhs import AdditiveRkhsFn, H1Fn, H2Fn, additive_inner, h1_inner, h2_inner


class ConeId(enum.Enum):
    V1 = "V1"
    V2 = "V2"
    V2PLUS = "V2PLUS"
    V1_POLAR = "V1_POLAR"
    V2_POLAR = "V2_POLAR"
    V2PLUS_POLAR = "V2PLUS_POLAR"


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ProjectionResult:
    projection: object
    polar_part: object
    iterations: int
    residual: float
    orthogonality_defect: float

    @property
    def input(self):
        return self.projection + self.polar_part

    def norm_sq(self) -> float:
        return _inner(self.projection, self.projection)


def _inner(a, b) -> float:
    if isinstance(a, H1Fn):
        return h1_inner(a, b)
    if isinstance(a, H2Fn):
        return h2_inner(a, b)
    return additive_inner(a, b)


def default_tol(x) -> float:
    return 1e-8 * (1.0 + _inner(x, x))


# --- V1 -----------------------------------------------------------------------


def pava_nonincreasing(y) -> tuple[np.ndarray, int]:
    """Least-squares non-increasing fit with uniform weights (pool adjacent violators).

    Blocks are merged left to right. Returns the fit and the number of merges.
    """
    y = np.asarray(y, dtype=np.float64)
    sums: list[float] = []
    counts: list[int] = []
    merges = 0
    for v in y:
        sums.append(float(v))
        counts.append(1)
        while len(sums) > 1 and sums[-2] * counts[-1] < sums[-1] * counts[-2]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
            merges += 1
    out = np.repeat([s / c for s, c in zip(sums, counts)], counts)
    return out, merges


def project_v1(h: H1Fn) -> ProjectionResult:
    d = h.d
    if not np.all(np.isfinite(d)):
        raise ValueError("project_v1: non-finite derivative samples")
    fit, merges = pava_nonincreasing(d)
    # clipping the antitonic fit solves the problem with the extra bound d >= 0
    p = H1Fn(np.maximum(fit, 0.0), h.grid)
    q = H1Fn(d - p.d, h.grid)
    return ProjectionResult(p, q, merges, cone_violation_v1(p.d), h1_inner(p, q))


def cone_violation_v1(d) -> float:
    d = np.asarray(d)
    viol = max(0.0, -float(d[-1]))
    if d.size > 1:
        viol = max(viol, float(np.max(d[1:] - d[:-1])))
    return viol


# --- V2 -----------------------------------------------------------------------


def padded_increments(c) -> np.ndarray:
    """D[i, j] = c[i,j] - c[i+1,j] - c[i,j+1] + c[i+1,j+1] with c zero beyond the grid."""
    c = np.asarray(c)
    n = c.shape[0]
    P = np.zeros((n + 1, n + 1))
    P[:n, :n] = c
    return P[:-1, :-1] - P[1:, :-1] - P[:-1, 1:] + P[1:, 1:]


def survival_sum(D) -> np.ndarray:
    """Inverse of :func:`padded_increments`: c[i, j] = sum_{a >= i, b >= j} D[a, b]."""
    D = np.asarray(D, dtype=np.float64)
    return np.cumsum(np.cumsum(D[::-1, ::-1], axis=0), axis=1)[::-1, ::-1]


def cone_violation_v2(c) -> float:
    c = np.asarray(c)
    viol = max(0.0, -float(np.min(padded_increments(c))))
    if c.shape[0] > 1:
        viol = max(viol, float(np.max(c[:, 1:] - c[:, :-1])), float(np.max(c[1:, :] - c[:-1, :])))
    return viol


def _stencil_weights(n: int) -> np.ndarray:
    """Number of in-grid cells touched by each padded increment stencil."""
    w = np.full((n, n), 4.0)
    w[-1, :] = 2.0
    w[:, -1] = 2.0
    w[-1, -1] = 1.0
    return w


@dataclass
class _Dykstra:
    """Cyclic half-space projections with Dykstra corrections.

    The n^2 increment constraints are split into four parity classes
    (i mod 2, j mod 2); stencils inside a class touch disjoint cells, so each
    class is projected onto in one vectorized step.
    """

    c: np.ndarray
    x: np.ndarray = field(init=False)
    corrections: list = field(init=False)

    def __post_init__(self):
        n = self.c.shape[0]
        self.n = n
        self.x = np.zeros((n + 1, n + 1))
        self.x[:n, :n] = self.c
        self.w = _stencil_weights(n)
        self.classes = [(p, q) for p in (0, 1) for q in (0, 1) if p < n and q < n]
        self.corrections = [np.zeros((n + 1, n + 1)) for _ in self.classes]

    def _project_class(self, z: np.ndarray, p: int, q: int) -> np.ndarray:
        out = z.copy()
        I = slice(p, self.n, 2)
        J = slice(q, self.n, 2)
        I1 = slice(p + 1, self.n + 1, 2)
        J1 = slice(q + 1, self.n + 1, 2)
        D = z[I, J] - z[I1, J] - z[I, J1] + z[I1, J1]
        t = np.maximum(-D, 0.0) / self.w[I, J]
        out[I, J] += t
        out[I1, J] -= t
        out[I, J1] -= t
        out[I1, J1] += t
        out[self.n, :] = 0.0
        out[:, self.n] = 0.0
        return out

    def cycle(self) -> float:
        change = 0.0
        for k, (p, q) in enumerate(self.classes):
            z = self.x + self.corrections[k]
            x_new = self._project_class(z, p, q)
            y_new = z - x_new
            change = max(change, float(np.max(np.abs(y_new - self.corrections[k]))))
            self.corrections[k] = y_new
            self.x = x_new
        return change

    @property
    def solution(self) -> np.ndarray:
        return self.x[: self.n, : self.n].copy()


def _stencil_matrix(n: int) -> np.ndarray:
    """Matrix G with (G @ vec(c)) = vec(padded_increments(c))."""
    G = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            for di, dj, s in ((0, 0, 1.0), (1, 0, -1.0), (0, 1, -1.0), (1, 1, 1.0)):
                a, b = i + di, j + dj
                if a < n and b < n:
                    G[i * n + j, a * n + b] = s
    return G


def _active_set_finish(c: np.ndarray, x: np.ndarray, tol: float, max_steps: int = 50):
    """Primal-dual active-set refinement warm-started from the Dykstra iterate ``x``.

    Each step solves the equality-constrained problem x = c + G_S^T mu, G_S x = 0,
    then re-selects S = {mu > 0} union {violated}. Returns the exact solution once
    the KKT conditions hold to ``tol``, or None if the active set does not settle.
    """
    n = c.shape[0]
    G = _stencil_matrix(n)
    cv = c.ravel()
    scale = 1.0 + float(np.max(np.abs(c)))
    S = padded_increments(x).ravel() <= 1e-6 * scale
    for _ in range(max_steps):
        mu = np.zeros(n * n)
        if S.any():
            A = G[S]
            mu[S] = np.linalg.solve(A @ A.T, -(A @ cv))
            xs = cv + A.T @ mu[S]
        else:
            xs = cv.copy()
        Dx = G @ xs
        if np.min(mu) >= -tol * scale and np.min(Dx) >= -tol * scale:
            return xs.reshape(n, n)
        S_new = (mu - Dx) > 0
        if np.array_equal(S_new, S):
            return None
        S = S_new
    return None


def project_v2(
    h: H2Fn,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    finish_every: int = 25,
) -> ProjectionResult:
    """Projection of ``h`` onto V2.

    Runs Dykstra cycles until the largest correction change over a cycle is
    below ``tol * (1 + ||c||)``; every ``finish_every`` cycles the current
    active set is tried in an exact equality-constrained solve, which ends the
    iteration as soon as it passes the KKT check.
    """
    c = h.c
    if not np.all(np.isfinite(c)):
        raise ValueError("project_v2: non-finite input")
    stop = tol * (1.0 + float(np.linalg.norm(c)))
    if cone_violation_v2(c) <= 1e-14 * (1.0 + float(np.max(np.abs(c)))):  # member up to round-off
        sol, it = c.copy(), 0
    else:
        solver = _Dykstra(c)
        sol = None
        it = 0
        while it < max_iter:
            change = solver.cycle()
            it += 1
            converged = change <= stop
            if converged or it % finish_every == 0:
                sol = _active_set_finish(c, solver.solution, 1e-9)
                if sol is None and converged:
                    sol = solver.solution
                if sol is not None:
                    break
        if sol is None:
            raise ConvergenceError("project_v2 did not converge", cone_violation_v2(solver.solution), it)
    p = H2Fn(sol, h.grid)
    q = H2Fn(c - sol, h.grid)
    return ProjectionResult(p, q, it, cone_violation_v2(sol), h2_inner(p, q))


def project_v2plus(f: AdditiveRkhsFn, **v2_options) -> ProjectionResult:
    r1 = project_v1(f.h1)
    r2 = project_v1(f.h2)
    r3 = project_v2(f.h3, **v2_options)
    p = AdditiveRkhsFn(r1.projection, r2.projection, r3.projection)
    q = AdditiveRkhsFn(r1.polar_part, r2.polar_part, r3.polar_part)
    return ProjectionResult(
        p,
        q,
        r1.iterations + r2.iterations + r3.iterations,
        max(r1.residual, r2.residual, r3.residual),
        additive_inner(p, q),
    )


def project(x, **options) -> ProjectionResult:
    if isinstance(x, H1Fn):
        return project_v1(x)
    if isinstance(x, H2Fn):
        return project_v2(x, **options)
    if isinstance(x, AdditiveRkhsFn):
        return project_v2plus(x, **options)
    raise TypeError(f"no cone for {type(x).__name__}")


# --- membership -----------------------------------------------------------------

_CONE_TYPES = {
    ConeId.V1: H1Fn,
    ConeId.V1_POLAR: H1Fn,
    ConeId.V2: H2Fn,
    ConeId.V2_POLAR: H2Fn,
    ConeId.V2PLUS: AdditiveRkhsFn,
    ConeId.V2PLUS_POLAR: AdditiveRkhsFn,
}


def check_cone_membership(x, cone: ConeId) -> float:
    """Largest violated constraint margin; 0 for members."""
    cone = ConeId(cone)
    if not isinstance(x, _CONE_TYPES[cone]):
        raise TypeError(f"{type(x).__name__} cannot be tested against {cone.value}")
    if cone is ConeId.V1:
        return cone_violation_v1(x.d)
    if cone is ConeId.V2:
        return cone_violation_v2(x.c)
    if cone is ConeId.V2PLUS:
        return max(cone_violation_v1(x.h1.d), cone_violation_v1(x.h2.d), cone_violation_v2(x.h3.c))
    # polar cones: non-positive at every node
    return max(0.0, float(np.max(x.values())))


# --- random cone members and polar verification ------------------------------


def random_v1(grid, rng: np.random.Generator, sparsity: float = 0.5) -> H1Fn:
    e = rng.exponential(size=grid.n) * (rng.random(grid.n) < sparsity)
    return H1Fn(np.cumsum(e[::-1])[::-1], grid)


def random_v2(grid, rng: np.random.Generator, sparsity: float = 0.5) -> H2Fn:
    n = grid.n
    E = rng.exponential(size=(n, n)) * (rng.random((n, n)) < sparsity)
    return H2Fn(survival_sum(E), grid)


def random_cone_member(x, rng: np.random.Generator):
    """Random element of the cone matching the type of ``x``."""
    g = x.grid
    if isinstance(x, H1Fn):
        return random_v1(g, rng)
    if isinstance(x, H2Fn):
        return random_v2(g, rng)
    return AdditiveRkhsFn(random_v1(g, rng), random_v1(g, rng), random_v2(g, rng))


@dataclass(frozen=True)
class PolarReport:
    passed: bool
    trials: int
    max_inner: float
    max_node_value: float
    tol: float
    failures: tuple = ()


def polar_verify(r: ProjectionResult, trials: int = 100, seed: int = 0, tol: float | None = None) -> PolarReport:
    q = r.polar_part
    if tol is None:
        tol = default_tol(r.input)
    rng = np.random.default_rng(seed)
    max_inner = -np.inf
    failures = []
    for k in range(trials):
        v = random_cone_member(q, rng)
        nv = np.sqrt(_inner(v, v))
        if nv == 0.0:
            continue
        ip = _inner(q, v) / nv
        max_inner = max(max_inner, ip)
        if ip > tol:
            failures.append(f"trial {k}: <polar, v>/|v| = {ip:.3e} > {tol:.1e}")
    node_max = float(np.max(q.values()))
    if node_max > tol:
        failures.append(f"polar part positive at a node: {node_max:.3e}")
    return PolarReport(not failures, trials, float(max_inner), node_max, tol, tuple(failures))
