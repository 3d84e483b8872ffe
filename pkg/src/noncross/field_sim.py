"""Monte Carlo for the additive Wiener field W = W1(s) + W2(t) + W3(s, t) on a grid.

RNG convention (pinned): samples are grouped in blocks of ``BLOCK_SIZE``; block
``b`` of a run with seed ``seed`` draws from ``Generator(PCG64(SeedSequence(seed,
spawn_key=(b,))))`` using numpy's ziggurat ``standard_normal``. Inside a block
the increments of the active components are drawn in the order W1, W2, W3.
Results therefore do not depend on the number of worker threads.

The boundary is only checked at grid nodes, so estimates of the continuous
non-crossing probability are biased upwards; refining the grid can only lower
a pathwise indicator.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .grid import DomainError, GridError, GridField, GridSpec, check_same_grid
from .rkhs import AdditiveRkhsFn, H2Fn, to_rkhs

BLOCK_SIZE = 4096
ALL_COMPONENTS = ("w1", "w2", "w3")


class Method(str, enum.Enum):
    PLAIN = "PLAIN"
    IMPORTANCE = "IMPORTANCE"


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def _blocks(n_samples: int):
    for b, start in enumerate(range(0, n_samples, BLOCK_SIZE)):
        yield b, min(BLOCK_SIZE, n_samples - start)


def _check_components(components) -> tuple:
    comps = tuple(components)
    bad = set(comps) - set(ALL_COMPONENTS)
    if bad or not comps:
        raise ValueError(f"components must be a non-empty subset of {ALL_COMPONENTS}, got {comps}")
    return tuple(c for c in ALL_COMPONENTS if c in comps)


@dataclass(frozen=True)
class FieldSample:
    """Increments of one realization; node values are cumulative sums."""

    dW1: np.ndarray
    dW2: np.ndarray
    dW3: np.ndarray
    grid: GridSpec

    @property
    def W1(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.dW1)))

    @property
    def W2(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.dW2)))

    @property
    def W3(self) -> np.ndarray:
        n = self.grid.n
        out = np.zeros((n + 1, n + 1))
        out[1:, 1:] = np.cumsum(np.cumsum(self.dW3, axis=0), axis=1)
        return out

    @property
    def W(self) -> np.ndarray:
        return self.W1[:, None] + self.W2[None, :] + self.W3


def _draw_increments(grid: GridSpec, rng: np.random.Generator, size: int, components=ALL_COMPONENTS):
    n, delta = grid.n, grid.delta
    z1 = rng.standard_normal((size, n)) * math.sqrt(delta) if "w1" in components else None
    z2 = rng.standard_normal((size, n)) * math.sqrt(delta) if "w2" in components else None
    z3 = rng.standard_normal((size, n, n)) * delta if "w3" in components else None
    return z1, z2, z3


def _node_values(grid: GridSpec, z1, z2, z3, size: int) -> np.ndarray:
    n = grid.n
    W = np.zeros((size, n + 1, n + 1))
    if z3 is not None:
        W[:, 1:, 1:] = np.cumsum(np.cumsum(z3, axis=1), axis=2)
    if z1 is not None:
        W[:, 1:, :] += np.cumsum(z1, axis=1)[:, :, None]
    if z2 is not None:
        W[:, :, 1:] += np.cumsum(z2, axis=1)[:, None, :]
    return W


def sample_field(grid: GridSpec, rng: np.random.Generator) -> FieldSample:
    z1, z2, z3 = _draw_increments(grid, rng, 1)
    return FieldSample(z1[0], z2[0], z3[0], grid)


def sample_fields(grid: GridSpec, n_samples: int, seed: int) -> np.ndarray:
    """Node values of ``n_samples`` realizations, shape (n_samples, n+1, n+1)."""
    out = []
    for b, size in _blocks(n_samples):
        z = _draw_increments(grid, block_rng(seed, b), size)
        out.append(_node_values(grid, *z, size))
    return np.concatenate(out)


def restrict(sample: FieldSample, factor: int) -> FieldSample:
    """The same realization observed on the sub-grid with ``n / factor`` steps."""
    n = sample.grid.n
    if factor < 1 or n % factor:
        raise GridError(f"factor {factor} does not divide n = {n}")
    m = n // factor
    coarse = GridSpec(sample.grid.T, m)
    d1 = sample.dW1.reshape(m, factor).sum(axis=1)
    d2 = sample.dW2.reshape(m, factor).sum(axis=1)
    d3 = sample.dW3.reshape(m, factor, m, factor).sum(axis=(1, 3))
    return FieldSample(d1, d2, d3, coarse)


def additive_covariance(s, t) -> float:
    """E[W(s) W(t)] = s1^t1 + s2^t2 + (s1^t1)(s2^t2)."""
    a = min(s[0], t[0])
    b = min(s[1], t[1])
    return a + b + a * b


# --- estimators -----------------------------------------------------------------


@dataclass(frozen=True)
class CrossingEstimate:
    p_hat: float
    std_err: float
    n_samples: int
    method: Method
    seed: int
    grid: GridSpec
    rejected: int = 0
    components: tuple = ALL_COMPONENTS

    def to_json_dict(self) -> dict:
        d = {
            "p_hat": self.p_hat,
            "std_err": self.std_err,
            "n": self.n_samples,
            "method": Method(self.method).value,
            "seed": self.seed,
            "grid": self.grid.to_dict(),
        }
        if self.rejected:
            d["rejected"] = self.rejected
        if tuple(self.components) != ALL_COMPONENTS:
            d["components"] = list(self.components)
        return d

    def ci(self, z: float = 3.0) -> tuple[float, float]:
        return self.p_hat - z * self.std_err, self.p_hat + z * self.std_err


@dataclass
class _Accumulator:
    total: list = field(default_factory=list)
    total_sq: list = field(default_factory=list)
    count: int = 0
    rejected: int = 0

    def add(self, values: np.ndarray, rejected: int = 0):
        self.total.append(math.fsum(values))
        self.total_sq.append(math.fsum(values * values))
        self.count += values.size
        self.rejected += rejected

    def finish(self) -> tuple[float, float]:
        N = self.count
        if N == 0:
            return float("nan"), float("nan")
        mean = math.fsum(self.total) / N
        if N == 1:
            return mean, 0.0
        var = max(math.fsum(self.total_sq) - N * mean * mean, 0.0) / (N - 1)
        return mean, math.sqrt(var / N)


def _run_blocks(fn, n_samples: int, threads: int):
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    blocks = list(_blocks(n_samples))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda bs: fn(*bs), blocks))
    else:
        results = [fn(b, size) for b, size in blocks]
    acc = _Accumulator()
    for values, rejected in results:
        acc.add(values, rejected)
    return acc


def _trend_values(f, grid: GridSpec) -> np.ndarray:
    if isinstance(f, AdditiveRkhsFn):
        check_same_grid(f.grid, grid)
        return f.values()
    if isinstance(f, GridField):
        check_same_grid(f.grid, grid)
        return f.values
    raise TypeError(f"trend must be AdditiveRkhsFn or GridField, got {type(f).__name__}")


def estimate_axis(threshold, grid: GridSpec, n_samples: int, seed: int, threads: int = 1) -> CrossingEstimate:
    """P(W1(t_k) <= threshold[k] for all k) with only the first Wiener process simulated."""
    b = np.asarray(threshold, dtype=np.float64)
    if b.shape != (grid.n + 1,):
        raise GridError(f"threshold must have {grid.n + 1} entries")
    sd = math.sqrt(grid.delta)

    def block(k, size):
        rng = block_rng(seed, k)
        ok = np.zeros(size)
        if b[0] >= 0.0:
            # in chunks so that n = 4096 paths stay small in memory
            step = max(1, min(size, (1 << 22) // grid.n))
            for s in range(0, size, step):
                m = min(step, size - s)
                W = np.cumsum(rng.standard_normal((m, grid.n)), axis=1) * sd
                ok[s : s + m] = np.all(W <= b[1:], axis=1)
        return ok, 0

    acc = _run_blocks(block, n_samples, threads)
    p, se = acc.finish()
    return CrossingEstimate(p, se, n_samples, Method.PLAIN, seed, grid, 0, ("w1",))


def estimate_plain(
    f,
    u: GridField,
    n_samples: int,
    seed: int,
    components=ALL_COMPONENTS,
    threads: int = 1,
) -> CrossingEstimate:
    """Fraction of samples with f + W <= u at every node.

    ``components`` switches off parts of the field for diagnostics; with only
    ``"w1"`` the node constraints reduce to one threshold per first coordinate.
    """
    grid = u.grid
    comps = _check_components(components)
    slack = u.values - _trend_values(f, grid)
    if comps == ("w1",):
        est = estimate_axis(slack.min(axis=1), grid, n_samples, seed, threads)
        return est
    if comps == ("w2",):
        est = estimate_axis(slack.min(axis=0), grid, n_samples, seed, threads)
        return CrossingEstimate(est.p_hat, est.std_err, n_samples, Method.PLAIN, seed, grid, 0, ("w2",))

    def block(k, size):
        z = _draw_increments(grid, block_rng(seed, k), size, comps)
        W = _node_values(grid, *z, size)
        return np.all(W <= slack, axis=(1, 2)).astype(np.float64), 0

    acc = _run_blocks(block, n_samples, threads)
    p, se = acc.finish()
    return CrossingEstimate(p, se, n_samples, Method.PLAIN, seed, grid, 0, comps)


def paley_wiener(g: AdditiveRkhsFn, z1, z2, z3) -> np.ndarray:
    """Discrete stochastic integral <g, W> from increments, one value per sample."""
    return z1 @ g.h1.d + z2 @ g.h2.d + np.einsum("kij,ij->k", z3, g.h3.c)


def estimate_importance(
    f,
    u: GridField,
    n_samples: int,
    seed: int,
    shift: AdditiveRkhsFn | None = None,
    threads: int = 1,
) -> CrossingEstimate:
    """Cameron-Martin reweighted estimator of P_f.

    Averages exp(<g, W> - |g|^2 / 2) * 1{f - g + W <= u}. The default shift g
    is the projection of f onto V2+.
    """
    grid = u.grid
    if shift is None:
        from .cones import project_v2plus

        f_rkhs = f if isinstance(f, AdditiveRkhsFn) else to_rkhs(f)
        shift = project_v2plus(f_rkhs).projection
    check_same_grid(shift.grid, grid)
    slack = u.values - _trend_values(f, grid) + shift.values()
    half_norm = 0.5 * shift.norm_sq()

    def block(k, size):
        z = _draw_increments(grid, block_rng(seed, k), size)
        W = _node_values(grid, *z, size)
        ok = np.all(W <= slack, axis=(1, 2))
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.where(ok, np.exp(paley_wiener(shift, *z) - half_norm), 0.0)
        finite = np.isfinite(w)
        return w[finite], int(size - finite.sum())

    acc = _run_blocks(block, n_samples, threads)
    p, se = acc.finish()
    return CrossingEstimate(p, se, n_samples, Method.IMPORTANCE, seed, grid, acc.rejected)


def oracle_1d(c: float, u0: float, T: float) -> float:
    """P(W(t) + c t <= u0 for all t <= T) for standard Brownian motion W."""
    if u0 <= 0:
        raise DomainError(f"u0 must be positive, got {u0}")
    if math.isinf(u0):
        return 1.0
    sT = math.sqrt(T)
    return float(norm.cdf((u0 - c * T) / sT) - math.exp(2 * c * u0) * norm.cdf((-u0 - c * T) / sT))


# --- integration by parts --------------------------------------------------------


def _stieltjes_1d(w: np.ndarray, m: np.ndarray, rule: str) -> float:
    dm = np.diff(m)
    return float(np.dot(w[:-1] if rule == "left" else w[1:], dm))


def _stieltjes_2d(W: np.ndarray, A: np.ndarray, rule: str) -> float:
    dA = A[1:, 1:] - A[:-1, 1:] - A[1:, :-1] + A[:-1, :-1]
    return float(np.sum((W[:-1, :-1] if rule == "left" else W[1:, 1:]) * dA))


def check_ibp_integrand(A: np.ndarray, tol: float = 1e-12) -> None:
    """A must be non-increasing in each coordinate and have non-negative 2D increments."""
    scale = tol * (1.0 + float(np.max(np.abs(A))))
    dA = A[1:, 1:] - A[:-1, 1:] - A[1:, :-1] + A[:-1, :-1]
    if np.any(np.diff(A, axis=0) > scale) or np.any(np.diff(A, axis=1) > scale):
        raise DomainError("integrand must be non-increasing in each coordinate")
    if np.any(dA < -scale):
        raise DomainError("integrand must have non-negative rectangular increments")


def ibp_sides(A, sample: FieldSample, rule: str = "left", flip: str | None = None) -> tuple[float, float]:
    """Both sides of the two-parameter integration-by-parts identity on the grid.

    Left side: sum over cells of A(lower-left) times the rectangular increment
    of W. Right side: corner terms plus six Stieltjes sums, with W taken at the
    lower-left (``rule="left"``) or upper-right (``rule="right"``) end of each
    cell. ``flip`` negates one named right-hand term (negative control).
    """
    if isinstance(A, H2Fn):
        A = A.values()
    elif isinstance(A, GridField):
        check_same_grid(A.grid, sample.grid)
        A = A.values
    A = np.asarray(A, dtype=np.float64)
    check_ibp_integrand(A)
    W, W1, W2 = sample.W, sample.W1, sample.W2
    lhs = float(np.sum(A[:-1, :-1] * sample.dW3))
    terms = {
        "corners": A[-1, -1] * W[-1, -1] - A[-1, 0] * W[-1, 0] - A[0, -1] * W[0, -1],
        "sheet": _stieltjes_2d(W, A, rule),
        "top": _stieltjes_1d(W[:, -1], -A[:, -1], rule),
        "right": _stieltjes_1d(W[-1, :], -A[-1, :], rule),
        "axis1": _stieltjes_1d(W1, A[:, 0], rule),
        "axis2": _stieltjes_1d(W2, A[0, :], rule),
    }
    if flip is not None:
        terms[flip] = -terms[flip]
    return lhs, math.fsum(terms.values())


def verify_ibp(A, sample: FieldSample, rule: str = "left") -> float:
    lhs, rhs = ibp_sides(A, sample, rule)
    return abs(lhs - rhs)
