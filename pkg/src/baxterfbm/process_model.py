"""General fBm-type processes built from a moving-average coefficient ``c`` and an
autoregressive coefficient ``a``, and the kernels derived from them.

The finite-past predictor kernel is assembled from the iterated kernels

    b(s, u)   = int_0^u c(u - v) a(s + v) dv
    b_1(s)    = b(s, T)
    b_k(s)    = int_0^inf b(s, u) b_{k-1}(t + u) du

as ``psi(s;T,t) = sum_k [b_{2k-1}(s) + b_{2k}(t - s)]``. The recursion is run as a
Nystrom iteration on a logarithmic ``u`` grid; each ``b(x, u)`` entry is a fixed
composite Gauss-Legendre rule whose substitutions absorb the singularity of
``c`` at the origin and the scale change between ``x`` and ``u``.
"""

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, TruncationError
from .quadrature import SingularWeight, TailDecay, composite_rule, integrate_bounded, integrate_semiinfinite, uniform_edges
from .special_fns import F_K_MAX, f_k_zero, f_series_tails, gamma_fn, validate_hurst

# Panels in w for r = R * w**m. Graded at 0: the map leaves w**m inside a(.),
# which is not analytic there.
_GRADED_R_EDGES = np.array(
    [0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.15, 0.3, 0.5, 0.7, 0.85, 0.95, 1.0]
)
_L_PANEL = 2.5
_BETA_Y_MAX = 45.0
_CHUNK = 200_000


# ---------------------------------------------------------------------------
# Generating measure and model


@dataclass(frozen=True)
class NuMeasure:
    """Measure ``nu(ds) = sum kappa s**(-gamma) e**(-sigma s) ds + sum mass * delta_loc``.

    ``densities`` holds ``(kappa, gamma, sigma)`` triples with ``kappa > 0``,
    ``0 < gamma < 1`` and ``sigma >= 0``; ``atoms`` holds ``(loc, mass)`` pairs
    with ``loc > 0`` and ``mass > 0``. Every such measure satisfies
    ``int (1+s)**-1 nu(ds) < inf``.
    """

    densities: tuple = ()
    atoms: tuple = ()

    def __post_init__(self):
        dens = tuple(tuple(float(v) for v in d) for d in self.densities)
        atoms = tuple(tuple(float(v) for v in at) for at in self.atoms)
        for d in dens:
            if len(d) != 3:
                raise DomainError(f"density terms are (kappa, gamma, sigma) triples, got {d}")
            kappa, gamma, sigma = d
            if not kappa > 0:
                raise DomainError(f"density weight kappa must be positive, got {kappa}")
            if not 0.0 < gamma < 1.0:
                raise DomainError(
                    f"density exponent gamma must lie in (0, 1) for int (1+s)^-1 nu(ds) < inf, got {gamma}"
                )
            if not sigma >= 0:
                raise DomainError(f"density damping sigma must be >= 0, got {sigma}")
        for at in atoms:
            if len(at) != 2:
                raise DomainError(f"atoms are (location, mass) pairs, got {at}")
            loc, mass = at
            if not (loc > 0 and mass > 0):
                raise DomainError(f"atoms need location > 0 and mass > 0, got {at}")
        if not dens and not atoms:
            raise DomainError("measure is empty")
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "atoms", atoms)

    def __add__(self, other):
        return NuMeasure(self.densities + other.densities, self.atoms + other.atoms)

    def laplace(self, t):
        """Closed-form Laplace transform ``int e**(-t s) nu(ds)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for kappa, gamma, sigma in self.densities:
            out = out + kappa * math.gamma(1.0 - gamma) * (t + sigma) ** (gamma - 1.0)
        for loc, mass in self.atoms:
            out = out + mass * np.exp(-loc * t)
        return out

    def laplace_integral(self, T):
        """``int_0^T`` of the Laplace transform, in closed form."""
        T = float(T)
        total = 0.0
        for kappa, gamma, sigma in self.densities:
            total += kappa * math.gamma(1.0 - gamma) * ((T + sigma) ** gamma - sigma**gamma) / gamma
        for loc, mass in self.atoms:
            total += mass * (-math.expm1(-loc * T)) / loc
        return total

    @property
    def singular_exponents(self):
        """Orders ``gamma - 1`` of the algebraic singularities of c at 0."""
        return tuple(sorted({g - 1.0 for _, g, s in self.densities if s == 0.0}))

    def tail(self):
        """``(kappa_total, gamma)`` of the slowest-decaying density terms, or None.

        A term with damping ``sigma`` contributes ``(t + sigma)**(gamma-1)``, so
        damping does not change its power-law tail; atoms decay exponentially.
        """
        if not self.densities:
            return None
        gmax = max(g for _, g, _ in self.densities)
        return sum(k for k, g, _ in self.densities if g == gmax), gmax


def fbm_nu(H):
    """The measure ``cos(pi H)/pi * s**-(1/2+H) ds`` generating the fBm coefficient."""
    H = validate_hurst(H)
    return NuMeasure(densities=((math.cos(math.pi * H) / math.pi, 0.5 + H, 0.0),))


def c_from_nu(nu: NuMeasure, t, tol=1e-10):
    """Laplace transform of ``nu`` at ``t > 0`` by quadrature (density part) plus exact atoms."""
    t = float(t)
    if not t > 0:
        raise DomainError(f"c_from_nu requires t > 0, got {t}")
    if not isinstance(nu, NuMeasure):
        raise DomainError("nu must be a NuMeasure")
    total = 0.0
    for kappa, gamma, sigma in nu.densities:
        rate = t + sigma
        res = integrate_semiinfinite(
            lambda s, rate=rate: kappa * np.exp(-rate * s),
            0.0,
            TailDecay(-2.0, "exponential"),
            tol=tol,
            left_exponent=-gamma,
            scale=1.0 / rate,
        )
        total += res.value
    for loc, mass in nu.atoms:
        total += mass * math.exp(-loc * t)
    return total


def _const_one(x):
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ProcessModel:
    """Coefficients ``c`` and ``a`` of a fBm-type process.

    Parameters
    ----------
    H : float
        Hurst index in (0, 1/2).
    c, a : callable
        Vectorised positive decreasing functions on (0, inf).
    c_exponents : tuple of float
        Algebraic orders of ``c`` at the origin, ``c(r) ~ r**q``; each must
        exceed -1/2. The smallest one drives the quadrature substitution.
    ell : callable
        Slowly varying factor shared by the tails of ``c`` and ``a``.
    c_integral, a_tail : callable, optional
        Closed forms of ``int_0^T c`` and ``int_0^inf a(x + u) du``.
    """

    H: float
    c: Callable
    a: Callable
    c_exponents: tuple
    name: str = "custom"
    ell: Callable = field(default=_const_one)
    nu: NuMeasure | None = None
    c_integral: Callable | None = None
    a_tail: Callable | None = None

    def __post_init__(self):
        validate_hurst(self.H)
        exps = tuple(float(q) for q in self.c_exponents)
        if not exps:
            raise DomainError("c_exponents must name at least one singular order")
        if not min(exps) > -0.5:
            raise DomainError(f"singular order of c at 0 must exceed -1/2, got {min(exps)}")
        object.__setattr__(self, "c_exponents", exps)

    @property
    def q(self):
        return min(self.c_exponents)

    def int_c(self, T):
        """``int_0^T c(v) dv``."""
        if self.c_integral is not None:
            return float(self.c_integral(T))
        return integrate_bounded(
            lambda r: self.c(r) * r ** (-self.q), 0.0, T, SingularWeight(self.q, 0.0), 1e-12
        ).value

    def int_a_tail(self, x):
        """``int_0^inf a(x + u) du`` (vectorised in ``x``)."""
        x = np.asarray(x, dtype=float)
        if self.a_tail is not None:
            return self.a_tail(x)
        p = 1.5 + self.H
        out = np.array([
            integrate_semiinfinite(self.a, float(xi), TailDecay(-p), tol=1e-12).value for xi in x.ravel()
        ]).reshape(x.shape)
        return out

    def describe(self):
        return {"name": self.name, "H": self.H, "c_exponents": list(self.c_exponents)}


def _a_amplitude(H):
    return (0.5 + H) / math.gamma(0.5 - H)


def make_fbm_model(H) -> ProcessModel:
    """fBm: ``c(t) = t**-(1/2-H)/Gamma(1/2+H)``, ``a(t) = t**-(3/2+H) (1/2+H)/Gamma(1/2-H)``."""
    H = validate_hurst(H)
    gc = 1.0 / math.gamma(0.5 + H)
    ga = _a_amplitude(H)

    def c(t):
        return gc * np.asarray(t, dtype=float) ** (H - 0.5)

    def a(t):
        return ga * np.asarray(t, dtype=float) ** (-1.5 - H)

    def c_integral(T):
        return gc * T ** (0.5 + H) / (0.5 + H)

    def a_tail(x):
        return ga * np.asarray(x, dtype=float) ** (-0.5 - H) / (0.5 + H)

    return ProcessModel(
        H=H, c=c, a=a, c_exponents=(H - 0.5,), name=f"fbm(H={H:g})", nu=fbm_nu(H),
        c_integral=c_integral, a_tail=a_tail,
    )


A_FAMILIES = ("power", "shifted_power")


def make_model(H, nu: NuMeasure, a_family="power", a_shift=0.0, name="custom") -> ProcessModel:
    """Model with ``c`` the Laplace transform of ``nu`` and ``a`` from a named family.

    The slowly varying factor is the constant fixed by the tail of ``nu``: the
    largest density exponent must be ``1/2 + H`` so that
    ``c(t) ~ t**-(1/2-H) ell / Gamma(1/2+H)``. The autoregressive coefficient is
    ``(1/2+H)/Gamma(1/2-H)/ell * (t + a_shift)**-(3/2+H)``; ``"power"`` requires
    ``a_shift = 0`` and ``"shifted_power"`` requires ``a_shift > 0``.
    """
    H = validate_hurst(H)
    if not isinstance(nu, NuMeasure):
        raise DomainError("nu must be a NuMeasure")
    tail = nu.tail()
    if tail is None or abs(tail[1] - (0.5 + H)) > 1e-12:
        raise DomainError(
            f"the largest density exponent must equal 1/2 + H = {0.5 + H} "
            "so that c has tail index -(1/2 - H)"
        )
    exps = nu.singular_exponents or (0.0,)  # c bounded at 0 when every term is damped
    if min(exps) <= -0.5:
        raise DomainError(f"every undamped density exponent must exceed 1/2, got {min(exps) + 1.0}")
    if a_family not in A_FAMILIES:
        raise DomainError(f"unknown a_family {a_family!r}; choose from {A_FAMILIES}")
    tau = float(a_shift)
    if a_family == "power" and tau != 0.0:
        raise DomainError("a_family 'power' takes no shift; use 'shifted_power'")
    if a_family == "shifted_power" and not tau > 0:
        raise DomainError(f"a_family 'shifted_power' needs a_shift > 0, got {tau}")

    ell0 = tail[0] * math.gamma(0.5 - H) * math.gamma(0.5 + H)
    amp = _a_amplitude(H) / ell0
    p = 1.5 + H

    def a(t):
        return amp * (np.asarray(t, dtype=float) + tau) ** (-p)

    def a_tail(x):
        return amp * (np.asarray(x, dtype=float) + tau) ** (1.0 - p) / (p - 1.0)

    def ell(x):
        return ell0 * np.ones_like(np.asarray(x, dtype=float))

    return ProcessModel(
        H=H, c=nu.laplace, a=a, c_exponents=exps, name=name, ell=ell, nu=nu,
        c_integral=nu.laplace_integral, a_tail=a_tail,
    )


# ---------------------------------------------------------------------------
# Vectorised kernels b(x, u) and beta(x)


def _r_rule():
    return composite_rule(_GRADED_R_EDGES, 10)


def _part_r(model, x, u):
    # r = u - v in [0, u/2] with r = (u/2) w^m
    w, ww = _r_rule()
    m = 1.0 / (1.0 + model.q)
    half = 0.5 * u[:, None]
    r = half * w[None, :] ** m
    jac = half * m * w[None, :] ** (m - 1.0) * ww[None, :]
    return np.sum(model.c(r) * model.a(x[:, None] + u[:, None] - r) * jac, axis=1)


def _part_l_group(model, x, u, Z, n_bulk):
    # v = x expm1(z), z in [0, Z]: bulk panels on [0, Z-1] then [Z-1, Z]
    g, gw = composite_rule(np.array([-1.0, 1.0]), 10)
    if n_bulk == 0:
        edges = np.stack([np.zeros_like(Z), Z], axis=1)
    else:
        bulk = np.linspace(0.0, 1.0, n_bulk + 1)[None, :] * (Z - 1.0)[:, None]
        edges = np.concatenate([bulk, Z[:, None]], axis=1)
    lo, hi = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (hi - lo)
    z = (0.5 * (hi + lo))[:, :, None] + half[:, :, None] * g[None, None, :]
    wz = half[:, :, None] * gw[None, None, :]
    z = z.reshape(len(x), -1)
    wz = wz.reshape(len(x), -1)
    xe = x[:, None]
    v = xe * np.expm1(z)
    vals = model.c(u[:, None] - v) * model.a(xe + v) * (xe + v) * wz
    return np.sum(vals, axis=1)


def _part_l(model, x, u):
    Z = np.log1p(0.5 * u / x)
    n_bulk = np.where(Z > 1.0, np.ceil((Z - 1.0) / _L_PANEL - 1e-12), 0).astype(int)
    out = np.empty_like(x)
    for n in np.unique(n_bulk):
        sel = n_bulk == n
        out[sel] = _part_l_group(model, x[sel], u[sel], Z[sel], int(n))
    return out


def b_values(model: ProcessModel, x, u):
    """``b(x, u) = int_0^u c(u - v) a(x + v) dv`` for broadcastable arrays ``x, u > 0``.

    Fixed composite rules: the half ``v in [0, u/2]`` uses ``v = x expm1(z)``,
    the half next to the singularity of ``c`` uses ``u - v = (u/2) w**m`` with
    ``m = 1/(1 + q)``. Relative accuracy is near 1e-12 for power-law coefficients.
    """
    x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
    if np.any(~(x > 0)) or np.any(~(u > 0)):
        raise DomainError("b(x, u) requires x > 0 and u > 0")
    shape = x.shape
    xf, uf = x.ravel(), u.ravel()
    out = np.empty_like(xf)
    step = max(1, _CHUNK // 100)
    for start in range(0, len(xf), step):
        sl = slice(start, start + step)
        out[sl] = _part_r(model, xf[sl], uf[sl]) + _part_l(model, xf[sl], uf[sl])
    return out.reshape(shape)


def b_kernel(model: ProcessModel, s, u):
    """Base kernel ``b(s, u)``; scalar in, scalar out."""
    out = b_values(model, s, u)
    return float(out) if out.ndim == 0 else out


def psi_infinite(model: ProcessModel, s, T):
    """Infinite-past kernel ``psi(s; T) = b(s, T)``."""
    return b_kernel(model, s, T)


def beta_values(model: ProcessModel, x):
    """``beta(x) = int_0^inf c(v) a(x + v) dv`` for an array ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("beta(x) requires x > 0")
    shape = x.shape
    xf = x.ravel()[:, None]
    # [0, x]: v = x w^m
    w, ww = _r_rule()
    m = 1.0 / (1.0 + model.q)
    v = xf * w[None, :] ** m
    near = np.sum(model.c(v) * model.a(xf + v) * xf * m * w[None, :] ** (m - 1.0) * ww[None, :], axis=1)
    # [x, inf): v = x e^y
    y, wy = composite_rule(uniform_edges(0.0, _BETA_Y_MAX, 2.5), 10)
    v = xf * np.exp(y)[None, :]
    far_vals = model.c(v) * model.a(xf + v) * v
    far = far_vals @ wy
    # integrand decays like e^{-y} beyond the grid
    far = far + far_vals[:, -1] * math.exp(-(_BETA_Y_MAX - y[-1]))
    return (near + far).reshape(shape)


def beta_kernel(model: ProcessModel, t):
    """``beta(t)``; scalar in, scalar out."""
    out = beta_values(model, t)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# delta_k on a log grid


DELTA_K_MAX = 6


class DeltaGrid:
    """Nystrom representation of ``delta_k(t, u, v)`` for one ``t``.

    ``delta_1(t,u,v) = beta(t+u+v)``; ``delta_k(t,u,v) = int_0^inf beta(t+v+w)
    delta_{k-1}(t,u,w) dw``. The ``w`` grid is ``w = t expm1(y)``; the beta matrix
    on the grid is built once and shared by all depths.
    """

    def __init__(self, model: ProcessModel, t, y_max=40.0, panel=2.0):
        t = float(t)
        if not t > 0:
            raise DomainError(f"delta_k requires t > 0, got {t}")
        self.model = model
        self.t = t
        y, wy = composite_rule(uniform_edges(0.0, y_max, panel), 10)
        self.w = t * np.expm1(y)
        self.weights = wy * t * np.exp(y)
        self.kernel = beta_values(model, t + self.w[:, None] + self.w[None, :]) * self.weights[None, :]

    def _check_k(self, k):
        if int(k) != k or k < 1:
            raise DomainError(f"delta_k requires a positive integer k, got {k}")
        if k > DELTA_K_MAX:
            raise DomainError(f"delta_k is evaluated up to depth {DELTA_K_MAX}, got k = {k}")
        return int(k)

    def _propagate(self, k, u):
        # columns: delta_k(t, u_i, w_m) on the grid
        D = beta_values(self.model, self.t + u[None, :] + self.w[:, None])
        for _ in range(k - 1):
            D = self.kernel @ D
        return D

    def matrix(self, k, u, v):
        """``delta_k(t, u_i, v_j)`` as a ``len(u) x len(v)`` array."""
        k = self._check_k(k)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(u < 0) or np.any(v < 0):
            raise DomainError("delta_k requires u, v >= 0")
        if k == 1:
            return beta_values(self.model, self.t + u[:, None] + v[None, :])
        D = self._propagate(k - 1, u)
        rows = beta_values(self.model, self.t + v[:, None] + self.w[None, :]) * self.weights[None, :]
        return (rows @ D).T

    def __call__(self, k, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        k = self._check_k(k)
        if k == 1:
            out = beta_values(self.model, self.t + u + v)
        else:
            uf, vf = u.ravel(), v.ravel()
            D = self._propagate(k - 1, uf)
            rows = beta_values(self.model, self.t + vf[:, None] + self.w[None, :]) * self.weights[None, :]
            out = np.einsum("im,mi->i", rows, D).reshape(u.shape)
        return out


@lru_cache(maxsize=16)
def delta_grid(model: ProcessModel, t) -> DeltaGrid:
    """Memoised :class:`DeltaGrid` per ``(model, t)``."""
    return DeltaGrid(model, t)


def delta_k(model: ProcessModel, k, t, u, v):
    """``delta_k(t, u, v)``; arrays broadcast."""
    out = delta_grid(model, float(t))(k, u, v)
    return float(out) if np.ndim(out) == 0 else out


def prop33a_check(model: ProcessModel, t, r, k_max=3, samples=None):
    """Test ``delta_k(t,u,v) <= f_k(0) (r cos(pi H))**k / t`` on a sample grid.

    Returns ``(holds, worst)`` where ``worst`` is the largest observed ratio of
    ``delta_k`` to the bound. ``delta_k`` is decreasing in ``u`` and ``v``, so
    the sample grid always includes points next to the origin.
    """
    t = float(t)
    x = float(r) * math.cos(math.pi * model.H)
    pts = np.asarray(samples if samples is not None else t * np.array([1e-9, 1e-3, 0.1, 1.0, 10.0]))
    uu, vv = np.meshgrid(pts, pts, indexing="ij")
    grid = delta_grid(model, t)
    worst = 0.0
    for k in range(1, k_max + 1):
        bound = f_k_zero(k) * x**k / t
        worst = max(worst, float(np.max(grid(k, uu, vv))) / bound)
    return worst <= 1.0, worst


@lru_cache(maxsize=64)
def _prop33a_certified(model, t, r):
    return prop33a_check(model, t, r, k_max=DELTA_K_MAX)[0]


# ---------------------------------------------------------------------------
# Iterated kernels and the series for psi(s; T, t)


@dataclass(frozen=True)
class KernelSeriesConfig:
    """Truncation control for the kernel series.

    ``r`` enters the geometric bound through ``x = r cos(pi H)``, which must lie
    in (0, 1) for the model's H; that is checked when the config meets a model.
    """

    k_max: int = 300
    tol: float = 1e-8
    r: float = 1.01

    def __post_init__(self):
        if int(self.k_max) != self.k_max or not 1 <= self.k_max < F_K_MAX:
            raise DomainError(f"k_max must be an integer in [1, {F_K_MAX - 1}], got {self.k_max}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if not self.r > 1:
            raise DomainError(f"r must exceed 1, got {self.r}")

    def ratio(self, H):
        x = self.r * math.cos(math.pi * H)
        if not 0 < x < 1:
            raise DomainError(
                f"r cos(pi H) must lie in (0, 1): r = {self.r} exceeds 1/cos(pi H) = {1 / math.cos(math.pi * H):.6g}"
            )
        return x


class IteratedKernels:
    """Nystrom iteration for ``b_k(.; T, t)`` on ``t + u`` with ``u`` log-spaced.

    ``phi[k][i] = b_k(t + u_i)``; for any ``x > 0``,
    ``b_{k+1}(x) = sum_i b(x, u_i) w_i phi[k][i]``.
    """

    def __init__(self, model: ProcessModel, T, t, lo=1e-20, hi=1e16, panel=2.0):
        T, t = float(T), float(t)
        if not (T > 0 and t > 0):
            raise DomainError(f"iterated kernels need T > 0 and t > 0, got T={T}, t={t}")
        self.model, self.T, self.t = model, T, t
        y, wy = composite_rule(uniform_edges(math.log(lo), math.log(hi), panel), 10)
        self.u = t * np.exp(y)
        self.weights = wy * self.u
        self.matrix = b_values(model, t + self.u[:, None], self.u[None, :]) * self.weights[None, :]
        self._phi = [None, b_values(model, t + self.u, T)]
        self._sums = {}
        self._lock = threading.Lock()

    def phi(self, k):
        with self._lock:
            while len(self._phi) <= k:
                self._phi.append(self.matrix @ self._phi[-1])
            return self._phi[k]

    def rows(self, x):
        x = np.asarray(x, dtype=float)
        return b_values(self.model, x[:, None], self.u[None, :]) * self.weights[None, :]

    def b_k(self, k, x):
        x = np.asarray(x, dtype=float)
        if k == 1:
            return b_values(self.model, x, self.T)
        return self.rows(x.ravel()) @ self.phi(k - 1)

    def partial_sums(self, k_max):
        """Cumulative sums over ``j <= J`` of ``phi[j-1]`` split by parity of ``j``.

        Returns ``(odd, even)``, each ``(len(u), k_max + 1)``: column ``J``
        holds ``sum phi[j-1]`` over ``2 <= j <= J`` with ``j`` odd (resp. even).
        """
        with self._lock:
            cached = self._sums.get(k_max)
        if cached is not None:
            return cached
        n = len(self.u)
        odd = np.zeros((n, k_max + 1))
        even = np.zeros((n, k_max + 1))
        for J in range(2, k_max + 1):
            odd[:, J] = odd[:, J - 1]
            even[:, J] = even[:, J - 1]
            target = odd if J % 2 else even
            target[:, J] += self.phi(J - 1)
        with self._lock:
            self._sums[k_max] = (odd, even)
        return odd, even


@lru_cache(maxsize=16)
def iterated_kernels(model: ProcessModel, T, t) -> IteratedKernels:
    """Memoised :class:`IteratedKernels` per ``(model, T, t)``."""
    return IteratedKernels(model, T, t)


def b_k_iterated(model: ProcessModel, k, s, T, t):
    """``b_k(s; T, t)`` from the direct recursion (scalar or array ``s``)."""
    if int(k) != k or k < 1:
        raise DomainError(f"b_k requires a positive integer k, got {k}")
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("b_k requires s > 0")
    out = iterated_kernels(model, float(T), float(t)).b_k(int(k), np.atleast_1d(s)).reshape(s.shape)
    return float(out) if out.ndim == 0 else out


def b_k_prop32(model: ProcessModel, k, s, T, t):
    """``b_k(s;T,t) = int_0^T c(T-v) int_0^inf a(s+u) delta_{k-1}(t,u,v) du dv`` for ``k >= 2``.

    Independent of the Nystrom recursion in :func:`b_k_iterated`; used to
    cross-check it.
    """
    if int(k) != k or k < 2:
        raise DomainError(f"this route needs k >= 2, got {k}")
    s, T, t = float(s), float(T), float(t)
    if not (s > 0 and T > 0 and t > 0):
        raise DomainError("b_k requires s, T, t > 0")
    grid = delta_grid(model, t)
    w, ww = composite_rule(_GRADED_R_EDGES, 10)
    m = 1.0 / (1.0 + model.q)
    r = T * w**m
    wv = model.c(r) * T * m * w ** (m - 1.0) * ww
    v = T - r
    y, wy = composite_rule(uniform_edges(0.0, math.log1p(t / s) + 35.0, 2.0), 10)
    u = s * np.expm1(y)
    wu = model.a(s + u) * s * np.exp(y) * wy
    D = grid.matrix(int(k) - 1, u, v)
    return float(wu @ D @ wv)


@lru_cache(maxsize=32)
def _tails(x, k_max):
    return f_series_tails(x, k_max)


class SeriesResult(NamedTuple):
    value: np.ndarray | float
    bound: np.ndarray | float
    terms: np.ndarray | int
    certified: bool


def _series(model, s, T, t, cfg, include_first):
    cfg = cfg or KernelSeriesConfig()
    x = cfg.ratio(model.H)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    T, t = float(T), float(t)
    if not (T > 0 and t > 0):
        raise DomainError(f"series needs T > 0 and t > 0, got T={T}, t={t}")
    if np.any(~((s_arr > 0) & (s_arr < t))):
        raise DomainError(f"kernel argument s must lie in the open window (0, t) = (0, {t})")
    kern = iterated_kernels(model, T, t)
    K = cfg.k_max
    odd, even = kern.partial_sums(K)
    values = kern.rows(s_arr) @ odd + kern.rows(t - s_arr) @ even
    if include_first:
        values = values + b_values(model, s_arr, T)[:, None]
        values[:, 0] = 0.0
    else:
        values[:, 1] = 0.0
    tails = _tails(x, K)
    scale = model.int_c(T) * np.maximum(model.int_a_tail(s_arr), model.int_a_tail(t - s_arr)) / t
    bounds = scale[:, None] * tails[None, :]
    certified = bool(_prop33a_certified(model, t, cfg.r))
    start = 1 if include_first else 2
    ok = bounds[:, start:] <= cfg.tol * values[:, start:]
    if not np.all(ok.any(axis=1)):
        bad = int(np.argmin(ok.any(axis=1)))
        raise TruncationError(
            f"series did not meet relative tolerance {cfg.tol} within k_max = {K} terms at s = {s_arr[bad]}",
            partial_sum=float(values[bad, K]), bound=float(bounds[bad, K]), terms=K,
        )
    J = start + np.argmax(ok, axis=1)
    idx = np.arange(len(s_arr))
    val, bnd = values[idx, J], bounds[idx, J]
    if np.ndim(s) == 0:
        return SeriesResult(float(val[0]), float(bnd[0]), int(J[0]), certified)
    return SeriesResult(val, bnd, J, certified)


def psi_finite_series(model: ProcessModel, s, T, t, cfg: KernelSeriesConfig | None = None) -> SeriesResult:
    """Finite-past kernel ``psi(s;T,t) = sum_k b_{2k-1}(s) + b_{2k}(t-s)``.

    Terms are added (in the order ``b_1(s), b_2(t-s), b_3(s), ...``) up to the
    first index ``J`` whose tail bound

        int_0^T c * max(A(s), A(t-s)) * sum_{k >= J} f_k(0) x**k / t,
        A(y) = int_0^inf a(y + u) du,  x = r cos(pi H),

    is below ``cfg.tol`` times the partial sum. ``certified`` reports whether
    the delta_k inequality behind the bound was confirmed at this ``t``; when it
    is False the bound is an estimate, not a guarantee.

    Raises
    ------
    TruncationError
        If the tolerance is not reached within ``cfg.k_max`` terms.
    """
    return _series(model, s, T, t, cfg, include_first=True)


def psi_diff_series(model: ProcessModel, s, T, t, cfg: KernelSeriesConfig | None = None) -> SeriesResult:
    """``psi(s;T,t) - psi(s;T) = sum_k b_{2k}(t-s) + b_{2k+1}(s)``, truncated as in
    :func:`psi_finite_series`."""
    return _series(model, s, T, t, cfg, include_first=False)


# ---------------------------------------------------------------------------
# Tail behaviour of psi(t; T)


def psi_sandwich(model: ProcessModel, t, T):
    """``(a(T+t) C, psi(t;T), a(t) C)`` with ``C = int_0^T c``; the middle lies between."""
    C = model.int_c(T)
    t = np.asarray(t, dtype=float)
    return model.a(T + t) * C, b_values(model, t, T), model.a(t) * C


def psi_tail_ratio(model: ProcessModel, t, T):
    """``psi(t;T) t**(3/2+H) ell(t) Gamma(1/2-H) / ((1/2+H) int_0^T c)``; tends to 1."""
    H = model.H
    t = np.asarray(t, dtype=float)
    psi = b_values(model, t, T)
    return psi * t ** (1.5 + H) * model.ell(t) * gamma_fn(0.5 - H) / ((0.5 + H) * model.int_c(T))
