"""Both sides of the weighted Baxter inequality

    int_0^t {psi(s;T,t) - psi(s;T)} g(s) ds  <=  M int_t^inf psi(s;T) g(s) ds

and sweeps of their ratio over the window length ``t``.
"""

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .process_model import KernelSeriesConfig, ProcessModel, b_values, psi_diff_series
from .quadrature import TailDecay, integrate_semiinfinite
from .regvar import AbsPowerLaw, Zero, integrate_against
from .special_fns import baxter_constant, gamma_fn, validate_rho

DEFAULT_T_GRID = tuple(10.0**e for e in (1.5, 2.0, 2.5, 3.0, 3.5, 4.0))
LHS_TOL = 1e-7
RHS_TOL = 1e-9


def _check_g(model, g):
    rho = validate_rho(model.H, g.rho, upper=True)
    return rho


def baxter_lhs(model: ProcessModel, g, T, t, cfg: KernelSeriesConfig | None = None, tol=LHS_TOL):
    """``int_0^t {psi(s;T,t) - psi(s;T)} g(s) ds`` with the difference from the kernel series.

    The difference kernel blows up like ``s**(-1/2-H)`` at both ends of the
    window; those factors go into the quadrature weight and the series is
    sampled only at interior nodes.
    """
    H = model.H
    _check_g(model, g)
    T, t = float(T), float(t)
    if not (T > 0 and t > 0):
        raise DomainError(f"need T > 0 and t > 0, got T={T}, t={t}")
    if isinstance(g, Zero):
        return 0.0
    lead = 0.5 + H
    lo, hi = np.nextafter(0.0, 1.0), np.nextafter(t, 0.0)

    def regular(s):
        s = np.clip(s, lo, hi)
        return psi_diff_series(model, s, T, t, cfg).value * (s * (t - s)) ** lead

    total, _ = integrate_against(regular, g.pieces(0.0, t), -lead, -lead, 0.0, t, tol)
    return total


def baxter_rhs(model: ProcessModel, g, T, t, tol=RHS_TOL):
    """``int_t^inf psi(s;T) g(s) ds``; needs ``rho < 1/2 + H`` for the tail to converge."""
    H = model.H
    rho = _check_g(model, g)
    T, t = float(T), float(t)
    if not (T > 0 and t > 0):
        raise DomainError(f"need T > 0 and t > 0, got T={T}, t={t}")
    if isinstance(g, Zero):
        return 0.0

    def kernel(s):
        return b_values(model, s, T)

    start, head = t, 0.0
    center = getattr(g, "center", None)
    if center is not None and center > t:
        # algebraic zero of g inside the range: integrate past it first
        start = 2.0 * center
        head, _ = integrate_against(kernel, g.pieces(t, start), 0.0, 0.0, t, start, tol)
    res = integrate_semiinfinite(
        lambda s: kernel(s) * g(s), start, TailDecay(-1.5 - H + rho, "psi(s;T) g(s)"), tol=tol, scale=start
    )
    return head + res.value


def thm43b_constant(model: ProcessModel, T, norm=1.0):
    """``C(H,H) (1+2H)/Gamma(1/2-H) * int_0^T c * norm``, the limit of ``t**(1/2)`` times the LHS
    for ``g(s) = ||X(t1 - s)||``."""
    H = model.H
    if not norm > 0:
        raise DomainError(f"norm must be positive, got {norm}")
    return baxter_constant(H, H) * (1.0 + 2.0 * H) / gamma_fn(0.5 - H) * model.int_c(T) * norm


def norm_function(model: ProcessModel, t1=0.0, norm=1.0):
    """``s -> norm * |t1 - s|**H * ell(|t1 - s|)``, the asymptotic form of ``||X(t1 - s)||``."""
    if not t1 >= 0:
        raise DomainError(f"t1 must be >= 0, got {t1}")
    if not norm > 0:
        raise DomainError(f"norm must be positive, got {norm}")
    return AbsPowerLaw(rho=model.H, center=float(t1), scale=float(norm), ell=model.ell)


@dataclass
class SweepResult:
    """Table of sweep rows plus metadata.

    ``columns`` names the columns of ``data``; rows are sorted by ``t``.
    """

    columns: tuple
    data: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))
        if len(self.data) > 1 and np.any(np.diff(self.data[:, 0]) <= 0):
            raise DomainError("sweep rows must have strictly increasing t")

    def __getitem__(self, name):
        return self.data[:, self.columns.index(name)]

    def __len__(self):
        return len(self.data)

    @property
    def m_hat(self):
        """Largest ratio over the grid: the empirical constant M."""
        return float(np.max(self["ratio"]))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.data:
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self):
        payload = {
            "columns": list(self.columns),
            "rows": [[float(v) for v in row] for row in self.data],
            "metadata": self.metadata,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _validate_grid(t_grid):
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise DomainError("t_grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    if grid[0] < 1.0:
        raise DomainError(f"t_grid values must be >= 1, got {grid[0]}")
    return grid


def _map(fn, items, workers):
    # results land by index, so order never depends on scheduling
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def config_hash(metadata):
    """Short stable hash of a JSON-serialisable config."""
    blob = json.dumps(metadata, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def ratio_sweep(model: ProcessModel, g, T, t_grid=DEFAULT_T_GRID, cfg=None, lhs_tol=LHS_TOL,
                rhs_tol=RHS_TOL, workers=1) -> SweepResult:
    """LHS, RHS and their ratio on ``t_grid``; the asymptote is ``C(H, rho)``."""
    rho = _check_g(model, g)
    grid = _validate_grid(t_grid)
    cfg = cfg or KernelSeriesConfig()
    C = baxter_constant(model.H, rho)

    def row(t):
        lhs = baxter_lhs(model, g, T, t, cfg, lhs_tol)
        rhs = baxter_rhs(model, g, T, t, rhs_tol)
        return [t, lhs, rhs, lhs / rhs, C]

    data = np.array(_map(row, grid, workers))
    meta = {
        "kind": "ratio_sweep",
        "model": model.name,
        "H": model.H,
        "g": g.describe(),
        "rho": rho,
        "T": float(T),
        "lhs_tol": lhs_tol,
        "rhs_tol": rhs_tol,
        "series": {"k_max": cfg.k_max, "tol": cfg.tol, "r": cfg.r},
    }
    meta["config_hash"] = config_hash(meta)
    result = SweepResult(("t", "lhs", "rhs", "ratio", "asymptote"), data, meta)
    result.metadata["m_hat"] = result.m_hat
    return result


def thm43b_sweep(model: ProcessModel, T, t1=0.0, t_grid=DEFAULT_T_GRID, norm=1.0, cfg=None,
                 lhs_tol=LHS_TOL, workers=1) -> SweepResult:
    """``t**(1/2)`` times the LHS for ``g(s) = ||X(t1 - s)||`` against its predicted limit.

    Columns: ``t, lhs, scaled_lhs, constant, ratio`` with ``ratio = scaled_lhs / constant``.
    For general models ``g`` is the asymptotic form of the norm, so the check
    is meaningful only once ``t`` is in the asymptotic regime.
    """
    grid = _validate_grid(t_grid)
    cfg = cfg or KernelSeriesConfig()
    g = norm_function(model, t1, norm)
    const = thm43b_constant(model, T, norm)

    def row(t):
        lhs = baxter_lhs(model, g, T, t, cfg, lhs_tol)
        scaled = math.sqrt(t) * lhs
        return [t, lhs, scaled, const, scaled / const]

    data = np.array(_map(row, grid, workers))
    meta = {
        "kind": "thm43b_sweep",
        "model": model.name,
        "H": model.H,
        "g": g.describe(),
        "t1": float(t1),
        "norm": float(norm),
        "T": float(T),
        "lhs_tol": lhs_tol,
        "series": {"k_max": cfg.k_max, "tol": cfg.tol, "r": cfg.r},
    }
    meta["config_hash"] = config_hash(meta)
    return SweepResult(("t", "lhs", "scaled_lhs", "constant", "ratio"), data, meta)
