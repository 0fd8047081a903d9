"""Gamma/beta functions, the unnormalised incomplete beta, the constant C(H, rho)
and the iterated kernels f_k.

Everything here is accurate to about 1e-10 (absolute or relative, whichever
is looser); downstream tolerances are budgeted from that figure.
"""

import math
import threading

import numpy as np

from .errors import DomainError
from .quadrature import SingularWeight, composite_rule, integrate_bounded, uniform_edges

SPECIAL_TOL = 1e-10


def validate_hurst(H):
    """Return ``H`` as a float, rejecting anything outside the open interval (0, 1/2)."""
    H = float(H)
    if not 0.0 < H < 0.5:
        raise DomainError(f"Hurst index must satisfy 0 < H < 1/2, got {H}")
    return H


def validate_rho(H, rho, upper=False):
    """Check ``rho > -1/2 + H`` (and ``rho < 1/2 + H`` when ``upper``)."""
    H = validate_hurst(H)
    rho = float(rho)
    if not rho > H - 0.5:
        raise DomainError(f"regular-variation index must satisfy rho > H - 1/2 = {H - 0.5}, got {rho}")
    if upper and not rho < H + 0.5:
        raise DomainError(
            f"regular-variation index must lie in (H - 1/2, H + 1/2) = ({H - 0.5}, {H + 0.5}), got {rho}"
        )
    return rho


def gamma_fn(x):
    """Gamma function for positive real ``x``."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return math.gamma(x)


def beta_fn(p, q):
    """Complete beta function B(p, q) = Gamma(p) Gamma(q) / Gamma(p + q)."""
    p, q = float(p), float(q)
    if not (p > 0 and q > 0):
        raise DomainError(f"beta_fn requires p, q > 0, got ({p}, {q})")
    return math.exp(math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q))


def incomplete_beta(s, p, q, tol=1e-13):
    """Unnormalised incomplete beta ``B_s(p, q) = int_0^s u**(p-1) (1-u)**(q-1) du``.

    Evaluated by quadrature with the endpoint factors absorbed into the
    substitution. For ``s > 1/2`` the integral is assembled as
    ``int_0^{1/2} + int_{1/2}^1 - int_0^{1-s}`` (reflected) so the
    ``(1-u)**(q-1)`` singularity always sits at an endpoint.
    """
    s, p, q = float(s), float(p), float(q)
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"incomplete_beta requires 0 <= s <= 1, got {s}")
    if not (p > 0 and q > 0):
        raise DomainError(f"incomplete_beta requires p, q > 0, got ({p}, {q})")
    if s == 0.0:
        return 0.0
    if s < 1e-20:
        # two series terms are exact in double precision; quadrature widths
        # would underflow for subnormal s
        return s**p * (1.0 / p + (1.0 - q) * s / (p + 1.0))

    def lower(x, a_exp, b_exp):
        # int_0^x u^(a_exp-1) (1-u)^(b_exp-1) du with x <= 1/2
        return integrate_bounded(
            lambda u: (1.0 - u) ** (b_exp - 1.0), 0.0, x, SingularWeight(a_exp - 1.0, 0.0), tol
        ).value

    if s <= 0.5:
        return lower(s, p, q)
    upper_half = integrate_bounded(
        lambda u: u ** (p - 1.0), 0.5, 1.0, SingularWeight(0.0, q - 1.0), tol
    ).value
    head = lower(0.5, p, q)
    if s == 1.0:
        return head + upper_half
    return head + upper_half - lower(1.0 - s, q, p)


def incomplete_beta_cf(s, p, q):
    """Incomplete beta from the regularised continued fraction (modified Lentz).

    Independent of :func:`incomplete_beta`; kept as a cross-check.
    """
    s, p, q = float(s), float(p), float(q)
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"incomplete_beta_cf requires 0 <= s <= 1, got {s}")
    if s == 0.0:
        return 0.0
    if s == 1.0:
        return beta_fn(p, q)
    if s > (p + 1.0) / (p + q + 2.0):
        return beta_fn(p, q) - incomplete_beta_cf(1.0 - s, q, p)
    log_front = p * math.log(s) + q * math.log1p(-s) - math.log(p)
    tiny = 1e-300
    f, c, d = 1.0, 1.0, 0.0
    for i in range(0, 400):
        m = i // 2
        if i == 0:
            numerator = 1.0
        elif i % 2 == 0:
            numerator = (m * (q - m) * s) / ((p + 2.0 * m - 1.0) * (p + 2.0 * m))
        else:
            numerator = -((p + m) * (p + q + m) * s) / ((p + 2.0 * m) * (p + 2.0 * m + 1.0))
        d = 1.0 + numerator * d
        d = tiny if abs(d) < tiny else d
        d = 1.0 / d
        c = 1.0 + numerator / c
        c = tiny if abs(c) < tiny else c
        step = c * d
        f *= step
        if abs(1.0 - step) < 1e-16:
            break
    return math.exp(log_front) * (f - 1.0)


def baxter_constant(H, rho):
    """C(H, rho) = 1 - rho * B(1/2 - H + rho, 1/2 - H) * (1 - 2H) / (1 + 2H)."""
    rho = validate_rho(H, rho)
    H = float(H)
    if rho == 0.0:
        return 1.0
    return 1.0 - rho * beta_fn(0.5 - H + rho, 0.5 - H) * (1.0 - 2.0 * H) / (1.0 + 2.0 * H)


class _FkTable:
    """Nystrom tabulation of f_k on a log grid ``w = expm1(y)``, ``y in [0, Y]``.

    f_k(u) = int_0^inf f_{k-1}(w) / (pi (1 + u + w)) dw. In ``y`` the
    integrand is analytic in a strip of half-width about pi, so panels of
    width 2 with 10 Gauss points are accurate to roughly machine precision.
    """

    def __init__(self, y_max=90.0, panel_width=2.0, order=10):
        y, wy = composite_rule(uniform_edges(0.0, y_max, panel_width), order)
        self.w = np.expm1(y)
        self.weights = wy * np.exp(y)
        self.y_max = y_max
        self._rows = [None, 1.0 / (math.pi * (1.0 + self.w))]
        self._lock = threading.Lock()

    def grid_values(self, k):
        with self._lock:
            while len(self._rows) <= k:
                prev = self._rows[-1]
                self._rows.append(self.apply(prev, self.w))
            return self._rows[k]

    def apply(self, values, u):
        u = np.asarray(u, dtype=float)
        kernel = 1.0 / (math.pi * (1.0 + u[..., None] + self.w))
        return kernel @ (self.weights * values)

    def tail_estimate(self, k, u):
        # beyond W the integrand of f_k decays like f_{k-1}(W) W / (pi w^2)
        prev = self.grid_values(k - 1)[-1]
        return prev / math.pi * self.w[-1] / (1.0 + np.asarray(u, dtype=float) + self.w[-1])


_FK_TABLE = _FkTable()
F_K_MAX = 400


def _check_fk_args(k, u):
    if int(k) != k or k < 1:
        raise DomainError(f"f_k requires a positive integer k, got {k}")
    if k > F_K_MAX:
        raise DomainError(f"f_k is tabulated up to k = {F_K_MAX}, got {k}")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise DomainError("f_k requires finite u >= 0")
    return int(k), u


def f_k(k, u):
    """Iterated kernel f_k(u) for integer ``k >= 1`` and ``u >= 0``.

    ``f_1(u) = 1/(pi (1+u))`` and ``f_2(u) = log(1+u)/(pi^2 u)`` are returned in
    closed form; for ``k >= 3`` the recursion
    ``f_k(u) = int_0^inf f_{k-1}(w) dw / (pi (1+u+w))`` is integrated numerically.
    Accepts scalar or array ``u``.
    """
    k, u = _check_fk_args(k, u)
    if k == 1:
        out = 1.0 / (math.pi * (1.0 + u))
    elif k == 2:
        safe = np.where(u > 0, u, 1.0)
        out = np.where(u > 0, np.log1p(u) / (math.pi**2 * safe), 1.0 / math.pi**2)
    else:
        out = f_k_quadrature(k, u)
    return float(out) if out.ndim == 0 else out


def f_k_quadrature(k, u):
    """f_k by quadrature of the recursion for every ``k >= 2`` (no closed forms)."""
    k, u = _check_fk_args(k, u)
    if k < 2:
        raise DomainError("f_k_quadrature starts at k = 2")
    table = _FK_TABLE
    values = table.apply(table.grid_values(k - 1), u) + table.tail_estimate(k, u)
    return values


def f_series_bound(x, k_from=1):
    """Upper bound for ``sum_{k >= k_from} f_k(0) x**k`` with ``0 < x < 1``.

    Terms are summed from tabulated f_k(0) until a geometric majorant of the
    remainder, ``f_K(0) x**(K+1) / (1-x)``, is negligible. The majorant rests on
    f_k(0) being nonincreasing in k.
    """
    x = float(x)
    if not 0.0 < x < 1.0:
        raise DomainError(f"f_series_bound requires 0 < x < 1, got {x}")
    if int(k_from) != k_from or k_from < 1:
        raise DomainError(f"k_from must be a positive integer, got {k_from}")
    k_from = int(k_from)
    total = 0.0
    k = k_from
    while True:
        fk0 = f_k_zero(k)
        term = fk0 * x**k
        total += term
        remainder = fk0 * x ** (k + 1) / (1.0 - x)
        if remainder <= 1e-15 * total or term == 0.0:
            return total + remainder
        if k >= F_K_MAX:
            return total + remainder
        k += 1


_FK0_CACHE = {}


def f_k_zero(k):
    """f_k(0), cached."""
    k = int(k)
    if k not in _FK0_CACHE:
        _FK0_CACHE[k] = float(f_k(k, 0.0))
    return _FK0_CACHE[k]


def f_series_tails(x, k_max):
    """Array ``tails[J] = upper bound of sum_{k >= J} f_k(0) x**k`` for ``J = 0..k_max``.

    ``tails[0]`` is unused (set equal to ``tails[1]``).
    """
    x = float(x)
    if not 0.0 < x < 1.0:
        raise DomainError(f"f_series_tails requires 0 < x < 1, got {x}")
    k_max = int(k_max)
    beyond = f_series_bound(x, k_max + 1)
    terms = np.array([f_k_zero(k) * x**k for k in range(1, k_max + 1)])
    tails = np.empty(k_max + 1)
    tails[1:] = np.cumsum(terms[::-1])[::-1] + beyond
    tails[0] = tails[1]
    return tails
