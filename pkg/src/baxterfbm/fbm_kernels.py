"""Closed-form predictor kernels of fractional Brownian motion (0 < H < 1/2).

For a window of length ``t`` ending at the last observation and a horizon
``T``, the infinite-past and finite-past least-squares predictors of
``B_H(t1 + T)`` are ``int_0^inf psi0(s;T) B_H(t1-s) ds`` and
``int_0^t psi0(s;T,t) B_H(t1-s) ds``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .regvar import integrate_against
from .special_fns import baxter_constant, beta_fn, incomplete_beta, validate_hurst, validate_rho


@dataclass(frozen=True)
class PredictionGeometry:
    """Time layout ``t0 <= 0 <= t1 < t2`` with ``t0 < t1``."""

    t0: float
    t1: float
    t2: float

    def __post_init__(self):
        if not self.t0 <= 0.0:
            raise DomainError(f"observation start t0 must satisfy t0 <= 0, got t0={self.t0}")
        if not self.t1 >= 0.0:
            raise DomainError(f"last observation t1 must satisfy t1 >= 0, got t1={self.t1}")
        if not self.t0 < self.t1:
            raise DomainError(f"window must be nonempty: need t0 < t1, got t0={self.t0}, t1={self.t1}")
        if not self.t1 < self.t2:
            raise DomainError(f"target must lie after the window: need t1 < t2, got t1={self.t1}, t2={self.t2}")

    @property
    def T(self):
        """Prediction horizon t2 - t1."""
        return self.t2 - self.t1

    @property
    def t(self):
        """Observation window length t1 - t0."""
        return self.t1 - self.t0

    @classmethod
    def from_horizon(cls, T, t, t1=0.0):
        return cls(t1 - t, t1, t1 + T)


def _amplitude(H):
    return math.cos(math.pi * H) / math.pi


def _check_positive(name, value):
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}")


def _as_points(s):
    return np.asarray(s, dtype=float)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def psi0_infinite(s, T, H):
    """Infinite-past kernel ``cos(pi H)/pi * (T/s)**(1/2+H) / (s+T)`` for s > 0."""
    H = validate_hurst(H)
    _check_positive("T", T)
    s = _as_points(s)
    if np.any(~(s > 0)):
        raise DomainError("psi0_infinite requires s > 0")
    return _out(_amplitude(H) / (s + T) * (T / s) ** (0.5 + H))


def finite_past_beta(T, t, H):
    """``B_{T/(t+T)}(H + 1/2, 1 - 2H)``, the incomplete beta factor of the finite-past kernel."""
    H = validate_hurst(H)
    return incomplete_beta(T / (t + T), H + 0.5, 1.0 - 2.0 * H)


def _check_window(s, T, t):
    _check_positive("T", T)
    _check_positive("t", t)
    if np.any(~((s > 0) & (s < t))):
        raise DomainError(f"kernel argument s must lie in the open window (0, t) = (0, {t})")


def _second_term(s, T, t, H, beta_factor):
    # cos(pi H)/pi (1/2-H) B t^{2H} (s (t-s))^{-1/2-H}
    return _amplitude(H) * (0.5 - H) * beta_factor * t ** (2 * H) * (s * (t - s)) ** (-0.5 - H)


def psi0_finite(s, T, t, H):
    """Finite-past kernel psi0(s; T, t) for 0 < s < t."""
    H = validate_hurst(H)
    s = _as_points(s)
    _check_window(s, T, t)
    first = _amplitude(H) / (s + T) * (T / s) ** (0.5 + H) * ((t - s) / (t + T)) ** (0.5 - H)
    return _out(first + _second_term(s, T, t, H, finite_past_beta(T, t, H)))


def _window_factor(s, T, t, H):
    # ((t-s)/(t+T))^{1/2-H} - 1 without subtractive loss
    with np.errstate(divide="ignore"):
        return np.expm1((0.5 - H) * (np.log1p(-s / t) - math.log1p(T / t)))


def psi0_diff(s, T, t, H):
    """psi0(s;T,t) - psi0(s;T), with the leading difference factored analytically."""
    H = validate_hurst(H)
    s = _as_points(s)
    _check_window(s, T, t)
    first = _amplitude(H) / (s + T) * (T / s) ** (0.5 + H) * _window_factor(s, T, t, H)
    return _out(first + _second_term(s, T, t, H, finite_past_beta(T, t, H)))


def lemma21_lhs(g, T, t, H, tol=1e-10):
    """``int_0^t {psi0(s;T,t) - psi0(s;T)} g(s) ds`` by singular-weight quadrature.

    ``g`` is one of the :mod:`baxterfbm.regvar` weight functions; its declared
    ``rho`` must exceed ``H - 1/2``.
    """
    H = validate_hurst(H)
    validate_rho(H, g.rho)
    _check_positive("T", T)
    _check_positive("t", t)
    amp = _amplitude(H)
    lead = -0.5 - H

    def regular_first(s):
        return amp * T ** (0.5 + H) / (s + T) * _window_factor(s, T, t, H)

    const = amp * (0.5 - H) * finite_past_beta(T, t, H) * t ** (2 * H)

    def regular_second(s):
        return np.full_like(s, const)

    first, _ = integrate_against(regular_first, g.pieces(0.0, t), lead, 0.0, 0.0, t, tol)
    second, _ = integrate_against(regular_second, g.pieces(0.0, t), lead, lead, 0.0, t, tol)
    return first + second


def lemma21_constant(H, rho):
    """C(H, rho) / (1/2 + H - rho), the asymptotic factor in front of t psi0(t;T) g(t)."""
    rho = validate_rho(H, rho)
    if abs(0.5 + H - rho) < 1e-12:
        raise DomainError("rho = 1/2 + H makes the asymptotic factor indeterminate")
    return baxter_constant(H, rho) / (0.5 + H - rho)


def lemma21_asymptote(g, T, t, H, rho=None):
    """Comparator ``C(H,rho)/(1/2+H-rho) * t * psi0(t;T) * g(t)``."""
    rho = g.rho if rho is None else rho
    H = validate_hurst(H)
    gt = float(g(t))
    if not gt > 0:
        raise DomainError(f"asymptotic comparator needs g(t) > 0, got g({t}) = {gt}")
    return lemma21_constant(H, rho) * t * psi0_infinite(t, T, H) * gt


def lemma21_decomposition(s, T, t, H):
    """The two scaled integrand factors ``(I(s;T,t), II(s;T,t))`` for 0 < s < 1.

    Their sum equals ``{psi0(ts;T,t) - psi0(ts;T)} / psi0(t;T)``.
    """
    H = validate_hurst(H)
    _check_positive("T", T)
    _check_positive("t", t)
    s = _as_points(s)
    if np.any(~((s > 0) & (s < 1))):
        raise DomainError("lemma21_decomposition requires 0 < s < 1")
    eps = T / t
    with np.errstate(divide="ignore"):
        bracket = np.expm1((0.5 - H) * (np.log1p(-s) - math.log1p(eps)))
    first = s ** (-0.5 - H) * (1.0 + eps) / (s + eps) * bracket
    second = (
        (0.5 - H) * finite_past_beta(T, t, H) * (t / T) ** (0.5 + H)
        * (1.0 + eps) * (s * (1.0 - s)) ** (-0.5 - H)
    )
    return _out(first), _out(second)


def decomposition_limits(H, rho):
    """Limits of ``int_0^1 I(s) s**rho ds`` and ``int_0^1 II(s) s**rho ds`` as t -> infinity."""
    rho = validate_rho(H, rho)
    a = 0.5 - H
    bb = beta_fn(0.5 - H + rho, 0.5 - H)
    return (1.0 - a * bb) / (0.5 + H - rho), a * bb / (0.5 + H)


def remark22_constant(H, T, fbm_norm_at_1=1.0):
    """Limit of ``t**(1/2) * int_0^t {psi0(s;T,t) - psi0(s;T)} ||B_H(-s)|| ds``.

    Equals ``(2/pi) cos(pi H) C(H,H) T**(1/2+H) ||B_H(1)||``.
    """
    H = validate_hurst(H)
    _check_positive("T", T)
    _check_positive("fbm_norm_at_1", fbm_norm_at_1)
    return 2.0 / math.pi * math.cos(math.pi * H) * baxter_constant(H, H) * T ** (0.5 + H) * fbm_norm_at_1
