"""Quadrature engines for integrands with algebraic endpoint singularities.

Two families live here:

* adaptive Gauss-Kronrod integration (:func:`integrate_bounded`,
  :func:`integrate_semiinfinite`) with power substitutions that absorb a
  declared endpoint weight ``(s-a)**alpha * (b-s)**beta``;
* fixed composite Gauss-Legendre rules (:func:`composite_rule`) used by the
  vectorised kernel evaluators, where thousands of integrals share one node set.
"""

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, NonConvergenceError

DEFAULT_BUDGET = 200_000

# 7-point Gauss / 15-point Kronrod pair on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])
_EPS = np.finfo(float).eps


class QuadResult(NamedTuple):
    value: float
    error: float
    evaluations: int


@dataclass(frozen=True)
class SingularWeight:
    """Endpoint weight ``(s-a)**left_exponent * (b-s)**right_exponent``."""

    left_exponent: float = 0.0
    right_exponent: float = 0.0

    def __post_init__(self):
        if not (self.left_exponent > -1 and self.right_exponent > -1):
            raise DomainError(
                f"weight exponents must exceed -1, got "
                f"({self.left_exponent}, {self.right_exponent})"
            )


@dataclass(frozen=True)
class TailDecay:
    """Declared power-law decay ``f(s) ~ C s**exponent`` of an integrand."""

    exponent: float
    description: str = ""

    def __post_init__(self):
        if not self.exponent < -1:
            raise DomainError(f"tail exponent must be < -1 for integrability, got {self.exponent}")


def _adaptive(g, intervals, tol, abs_tol, max_evals):
    """Globally adaptive GK15 over a list of intervals of a vectorised ``g``."""
    lo = np.array([iv[0] for iv in intervals], dtype=float)
    hi = np.array([iv[1] for iv in intervals], dtype=float)
    vals, errs = _gk_batch(g, lo, hi)
    evals = 15 * len(lo)
    heap = []
    frozen = []
    for i in range(len(lo)):
        heapq.heappush(heap, (-errs[i], lo[i], hi[i], vals[i]))
    total = float(np.sum(vals))
    err_total = float(np.sum(errs))
    while err_total > max(abs_tol, tol * abs(total)):
        if not heap:
            raise NonConvergenceError(
                "quadrature stalled at roundoff level before reaching tolerance",
                estimate=total, error=err_total, evaluations=evals,
            )
        neg_err, a, b, v = heapq.heappop(heap)
        width = b - a
        if width <= 1e-13 * max(1.0, abs(a)) or -neg_err <= 100 * _EPS * abs(v):
            frozen.append((a, b, v, -neg_err))
            continue
        if evals + 30 > max_evals:
            raise NonConvergenceError(
                f"node budget of {max_evals} evaluations exhausted",
                estimate=total, error=err_total, evaluations=evals,
            )
        mid = 0.5 * (a + b)
        cv, ce = _gk_batch(g, np.array([a, mid]), np.array([mid, b]))
        evals += 30
        total += cv[0] + cv[1] - v
        err_total += ce[0] + ce[1] + neg_err
        heapq.heappush(heap, (-ce[0], a, mid, cv[0]))
        heapq.heappush(heap, (-ce[1], mid, b, cv[1]))
    parts = [item[3] for item in heap] + [item[2] for item in frozen]
    errors = [-item[0] for item in heap] + [item[3] for item in frozen]
    return QuadResult(math.fsum(parts), math.fsum(errors), evals)


def _gk_batch(g, lo, hi):
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)
    x = center[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(g(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][0]
        raise NonConvergenceError(f"integrand is not finite at transformed node {bad!r}")
    kron = half * (fx @ _KRONROD)
    gauss = half * (fx @ _GAUSS)
    resabs = np.abs(half) * (np.abs(fx) @ _KRONROD)
    err = np.maximum(np.abs(kron - gauss), 50 * _EPS * resabs)
    return kron, err


def _substitution_power(exponent):
    return 1.0 / (1.0 + exponent) if exponent != 0.0 else 1.0


def integrate_bounded(
    f: Callable,
    a: float,
    b: float,
    weight: SingularWeight | None = None,
    tol: float = 1e-10,
    abs_tol: float = 0.0,
    max_evals: int = DEFAULT_BUDGET,
) -> QuadResult:
    """Integrate ``f(s) * (s-a)**alpha * (b-s)**beta`` over ``[a, b]``.

    ``f`` must accept numpy arrays. The interval is split at its midpoint and
    each half is mapped by ``s - a = h w**m`` (resp. ``b - s = h w**n``) with
    ``m = 1/(1+alpha)``, which turns the declared weight times the Jacobian
    into a constant; the weight is never evaluated from a rounded ``s``.
    Remaining non-smoothness in ``f`` is handled by adaptive bisection.

    Returns
    -------
    QuadResult
        ``(value, error, evaluations)``; the error is the summed
        Kronrod-Gauss discrepancy.

    Raises
    ------
    NonConvergenceError
        If ``tol`` is not met within ``max_evals`` integrand evaluations.
    """
    if not a < b:
        raise DomainError(f"integration interval requires a < b, got [{a}, {b}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    weight = weight or SingularWeight()
    alpha, beta = weight.left_exponent, weight.right_exponent
    h = 0.5 * (b - a)
    m = _substitution_power(alpha)
    n = _substitution_power(beta)
    # h**(1+alpha+beta) kept apart from (2 - w)**exp >= 1 so a subnormal h cannot
    # underflow to 0**exp
    hscale = h ** (1.0 + alpha + beta)
    left_scale = hscale * m
    right_scale = hscale * n

    def g(tau):
        out = np.empty_like(tau)
        left = tau <= 1.0
        w = tau[left]
        wm = w ** m
        s = a + h * wm
        vals = np.asarray(f(s), dtype=float) * left_scale
        if beta != 0.0:
            vals = vals * (2.0 - wm) ** beta
        out[left] = vals
        w = 2.0 - tau[~left]
        wn = w ** n
        s = b - h * wn
        vals = np.asarray(f(s), dtype=float) * right_scale
        if alpha != 0.0:
            vals = vals * (2.0 - wn) ** alpha
        out[~left] = vals
        return out

    return _adaptive(g, [(0.0, 0.5), (0.5, 1.0), (1.0, 1.5), (1.5, 2.0)], tol, abs_tol, max_evals)


def integrate_semiinfinite(
    f: Callable,
    a: float,
    tail: TailDecay,
    tol: float = 1e-10,
    left_exponent: float = 0.0,
    scale: float | None = None,
    abs_tol: float = 0.0,
    max_evals: int = DEFAULT_BUDGET,
) -> QuadResult:
    """Integrate ``f(s) * (s-a)**left_exponent`` over ``[a, inf)``.

    The range is split into ``[a, a+L]`` (bounded engine), a log-mapped
    stretch ``[a+L, S]`` and a power-law tail beyond ``S`` estimated from the
    declared decay. ``S`` grows until the tail estimate drops below a tenth of
    the tolerance; the tail estimate is folded into the reported error.
    """
    if a < 0:
        raise DomainError(f"lower limit must be non-negative, got {a}")
    if not isinstance(tail, TailDecay):
        tail = TailDecay(float(tail))
    L = float(scale) if scale else (a if a > 0 else 1.0)
    alpha = left_exponent
    head = integrate_bounded(f, a, a + L, SingularWeight(alpha, 0.0), tol, abs_tol, max_evals)

    def g(y):
        d = L * np.exp(y)
        vals = np.asarray(f(a + d), dtype=float) * d
        return vals * d ** alpha if alpha != 0.0 else vals

    total, err, evals = head.value, head.error, head.evaluations
    y0, step = 0.0, 8.0
    while True:
        edges = np.arange(y0, y0 + step + 1e-12, 2.0)
        part = _adaptive(g, list(zip(edges[:-1], edges[1:])), tol, abs_tol, max_evals - evals)
        total += part.value
        err += part.error
        evals += part.evaluations
        y0 += step
        S = a + L * math.exp(y0)
        # g(y0) = f(S)(S-a)^(1+alpha); integrate C s^p beyond S
        tail_est = float(g(np.array([y0]))[0]) * (S / (S - a)) / (-tail.exponent - 1.0)
        evals += 1
        if abs(tail_est) <= max(abs_tol, 0.1 * tol * abs(total)):
            return QuadResult(total + tail_est, err + abs(tail_est), evals)
        if y0 > 600.0:
            raise NonConvergenceError(
                "tail estimate did not fall below tolerance; declared decay too slow?",
                estimate=total + tail_est, error=err + abs(tail_est), evaluations=evals,
            )


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(edges, n: int = 10):
    """Composite n-point Gauss-Legendre rule on consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    half = 0.5 * np.diff(edges)
    center = 0.5 * (edges[1:] + edges[:-1])
    nodes = (center[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def uniform_edges(lo: float, hi: float, max_width: float):
    """Equal panels covering ``[lo, hi]`` no wider than ``max_width``."""
    count = max(1, int(math.ceil((hi - lo) / max_width - 1e-12)))
    return np.linspace(lo, hi, count + 1)
