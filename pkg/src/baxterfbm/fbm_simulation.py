"""Monte Carlo checks of the fBm predictor kernels.

fBm (unit variance at time 1) is sampled exactly on a grid by Cholesky
factorisation of its covariance. On the same grid the optimal linear predictor
of ``B_H(t2)`` solves the Gram system, and the discretised finite-past kernel
gives a competing predictor whose mean squared error is known in closed form.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, IllConditionedError
from .fbm_kernels import PredictionGeometry, psi0_finite
from .special_fns import validate_hurst

BLOCK_PATHS = 1000
COND_MAX = 1e12


def fbm_cov(s, u, H):
    """``Cov(B_H(s), B_H(u)) = (|s|**2H + |u|**2H - |s-u|**2H) / 2``; broadcasts."""
    H = validate_hurst(H)
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    out = 0.5 * (np.abs(s) ** (2 * H) + np.abs(u) ** (2 * H) - np.abs(s - u) ** (2 * H))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SampleGrid:
    """Observation times inside the window ``[t0, t1]`` with their cell widths."""

    points: np.ndarray
    widths: np.ndarray
    t0: float
    t1: float
    rule: str = "custom"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        if pts.ndim != 1 or pts.shape != widths.shape:
            raise DomainError("points and widths must be 1-D arrays of equal length")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be strictly increasing")
        if len(pts) and (pts[0] < self.t0 or pts[-1] > self.t1):
            raise DomainError(f"grid points must lie in the window [{self.t0}, {self.t1}]")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "widths", widths)

    @classmethod
    def midpoints(cls, t0, t1, n):
        """Midpoints of ``n`` equal cells of ``[t0, t1]``; no point touches an endpoint."""
        if int(n) != n or n < 1:
            raise DomainError(f"grid size must be a positive integer, got {n}")
        if not t0 < t1:
            raise DomainError(f"window needs t0 < t1, got [{t0}, {t1}]")
        n = int(n)
        d = (t1 - t0) / n
        return cls(t0 + d * (np.arange(n) + 0.5), np.full(n, d), float(t0), float(t1), "midpoint")

    def __len__(self):
        return len(self.points)


@dataclass
class PathEnsemble:
    """Sampled values at ``times`` (grid points then the target), one path per row."""

    values: np.ndarray
    times: np.ndarray
    H: float
    seed: int | None
    normalization: str = "unit variance at time 1"

    @property
    def n_paths(self):
        return self.values.shape[0]

    @property
    def observed(self):
        return self.values[:, :-1]

    @property
    def target(self):
        return self.values[:, -1]

    def to_csv(self):
        header = ",".join(f"x({t!r})" for t in self.times)
        lines = [f"# H={self.H!r} seed={self.seed!r} normalization={self.normalization}", header]
        lines += [",".join(repr(float(v)) for v in row) for row in self.values]
        return "\n".join(lines) + "\n"


def _cholesky(times, H):
    C = fbm_cov(times[:, None], times[None, :], H)
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise DomainError(
            "covariance matrix is not positive definite; duplicated points or a point at time 0?"
        ) from exc


def simulate_paths(grid: SampleGrid, t2, H, n_paths, seed=None, workers=1) -> PathEnsemble:
    """Exact Gaussian samples of fBm at the grid points and at ``t2``.

    Paths are produced in fixed blocks of ``BLOCK_PATHS``, each with its own
    child of ``SeedSequence(seed)``, so the output depends on the seed alone and
    not on ``workers``.
    """
    H = validate_hurst(H)
    if int(n_paths) != n_paths or n_paths < 0:
        raise DomainError(f"n_paths must be a non-negative integer, got {n_paths}")
    n_paths = int(n_paths)
    times = np.append(grid.points, float(t2))
    if n_paths == 0:
        return PathEnsemble(np.empty((0, len(times))), times, H, seed)
    L = _cholesky(times, H)
    counts = [min(BLOCK_PATHS, n_paths - i) for i in range(0, n_paths, BLOCK_PATHS)]
    streams = np.random.SeedSequence(seed).spawn(len(counts))

    def block(i):
        rng = np.random.default_rng(streams[i])
        return rng.standard_normal((counts[i], len(times))) @ L.T

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(len(counts))))
    else:
        parts = [block(i) for i in range(len(counts))]
    return PathEnsemble(np.vstack(parts), times, H, seed)


class GramPredictor(NamedTuple):
    weights: np.ndarray
    mse: float
    condition: float


def gram_optimal_predictor(grid: SampleGrid, t2, H, cond_max=COND_MAX) -> GramPredictor:
    """Best linear predictor of ``B_H(t2)`` from the grid values.

    Raises
    ------
    IllConditionedError
        If the condition number of the Gram matrix exceeds ``cond_max``.
    """
    H = validate_hurst(H)
    pts = grid.points
    G = fbm_cov(pts[:, None], pts[None, :], H)
    gamma = fbm_cov(pts, float(t2), H)
    cond = float(np.linalg.cond(G))
    if not cond <= cond_max:
        raise IllConditionedError(f"Gram matrix condition number {cond:.3g} exceeds {cond_max:.3g}", cond)
    w = np.linalg.solve(G, gamma)
    var = abs(float(t2)) ** (2 * H)
    mse = max(var - float(w @ gamma), 0.0)
    return GramPredictor(w, mse, cond)


def kernel_weights(grid: SampleGrid, t2, H, kernel: Callable | None = None):
    """Weights ``kernel(t1 - s_i) * width_i``; default kernel is the finite-past psi0."""
    geo = PredictionGeometry(grid.t0, grid.t1, float(t2))
    if kernel is None:
        def kernel(s):
            return psi0_finite(s, geo.T, geo.t, H)
    return np.asarray(kernel(grid.t1 - grid.points), dtype=float) * grid.widths


def predictor_mse(grid: SampleGrid, t2, H, weights):
    """Exact MSE of ``sum w_i B_H(s_i)`` as a predictor of ``B_H(t2)``."""
    pts = grid.points
    w = np.asarray(weights, dtype=float)
    G = fbm_cov(pts[:, None], pts[None, :], H)
    gamma = fbm_cov(pts, float(t2), H)
    return abs(float(t2)) ** (2 * H) - 2.0 * float(w @ gamma) + float(w @ G @ w)


class KernelMSE(NamedTuple):
    theoretical: float
    empirical: float
    stderr: float


def kernel_predictor_mse(ensemble: PathEnsemble, grid: SampleGrid, t2, H, weights) -> KernelMSE:
    """Closed-form and Monte Carlo MSE of a weighted-sum predictor.

    ``stderr`` is the standard error of the empirical mean of squared residuals.
    """
    w = np.asarray(weights, dtype=float)
    theo = predictor_mse(grid, t2, H, w)
    if ensemble.n_paths == 0:
        return KernelMSE(theo, float("nan"), float("nan"))
    resid = ensemble.target - ensemble.observed @ w
    sq = resid**2
    stderr = float(np.std(sq, ddof=1) / math.sqrt(len(sq))) if len(sq) > 1 else float("nan")
    return KernelMSE(theo, float(np.mean(sq)), stderr)


def weight_distance(reference, other, exclude=2):
    """Relative l2 distance over interior indices, dropping ``exclude`` at each end."""
    reference = np.asarray(reference, dtype=float)
    other = np.asarray(other, dtype=float)
    if len(reference) <= 2 * exclude:
        raise DomainError(f"need more than {2 * exclude} weights to drop {exclude} at each end")
    inner = slice(exclude, len(reference) - exclude)
    return float(np.linalg.norm(reference[inner] - other[inner]) / np.linalg.norm(reference[inner]))


@dataclass
class MCReport:
    """Outcome of :func:`mc_verify`; ``checks`` maps names to pass/fail."""

    H: float
    window: tuple
    t2: float
    n: int
    n_paths: int
    seed: int | None
    gram_mse: float
    kernel_mse: float
    empirical_mse: float
    empirical_stderr: float
    condition: float
    distances: dict
    checks: dict = field(default_factory=dict)
    gram_weights: list = field(default_factory=list)
    kernel_weights: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.checks.values())

    def to_json(self):
        d = dict(self.__dict__)
        d["window"] = list(self.window)
        d["distances"] = {str(k): v for k, v in self.distances.items()}
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)


def mc_verify(H=0.25, t0=-4.0, t1=0.0, t2=1.0, n=256, n_paths=10_000, seed=20240601,
              distance_sizes=(64, 128, 256), mse_rel_tol=0.05, sigmas=3.0, workers=1) -> MCReport:
    """Compare the Gram-optimal and discretised-kernel predictors on midpoint grids.

    Checks: Gram MSE <= kernel MSE; kernel MSE within ``mse_rel_tol`` of the Gram
    MSE; empirical kernel MSE within ``sigmas`` standard errors of the exact
    value; interior weight distance decreasing over ``distance_sizes``.
    """
    H = validate_hurst(H)
    PredictionGeometry(t0, t1, t2)
    grid = SampleGrid.midpoints(t0, t1, n)
    gram = gram_optimal_predictor(grid, t2, H)
    kw = kernel_weights(grid, t2, H)
    ens = simulate_paths(grid, t2, H, n_paths, seed, workers)
    km = kernel_predictor_mse(ens, grid, t2, H, kw)

    distances = {}
    for size in distance_sizes:
        g_ = SampleGrid.midpoints(t0, t1, size)
        distances[int(size)] = weight_distance(gram_optimal_predictor(g_, t2, H).weights, kernel_weights(g_, t2, H))
    dvals = [distances[int(s)] for s in distance_sizes]

    checks = {
        "gram_mse_le_kernel_mse": gram.mse <= km.theoretical,
        "kernel_mse_within_tol": abs(km.theoretical / gram.mse - 1.0) <= mse_rel_tol,
        "empirical_within_sigmas": n_paths > 1 and abs(km.empirical - km.theoretical) <= sigmas * km.stderr,
        "weight_distance_decreasing": all(b < a for a, b in zip(dvals, dvals[1:])),
    }
    return MCReport(
        H=H, window=(float(t0), float(t1)), t2=float(t2), n=int(n), n_paths=int(n_paths), seed=seed,
        gram_mse=gram.mse, kernel_mse=km.theoretical, empirical_mse=km.empirical,
        empirical_stderr=km.stderr, condition=gram.condition, distances=distances, checks=checks,
        gram_weights=gram.weights.tolist(), kernel_weights=kw.tolist(),
    )
