"""Regularly varying weight functions g used against the prediction kernels.

Each class carries its index ``rho`` and knows where its algebraic factors sit,
so :func:`integrate_against` can hand those factors to the quadrature weight
instead of sampling them near an endpoint.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import SingularWeight, integrate_bounded


def _unit(x):
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PowerLaw:
    """g(s) = scale * s**rho on s > 0."""

    rho: float
    scale: float = 1.0

    def __call__(self, s):
        return self.scale * np.asarray(s, dtype=float) ** self.rho

    def pieces(self, lo, hi):
        # (lo, hi, left_exp, right_exp, regular part)
        scale = self.scale
        if lo == 0.0:
            return [(lo, hi, self.rho, 0.0, lambda s: scale * _unit(s))]
        return [(lo, hi, 0.0, 0.0, self)]

    def describe(self):
        return f"{self.scale:g} * s^{self.rho:g}"


@dataclass(frozen=True)
class AbsPowerLaw:
    """g(s) = scale * |center - s|**rho * ell(|center - s|).

    With ``center = t1`` and ``rho = H`` this is the norm function
    ``||X(t1 - s)||`` of a self-similar (or asymptotically self-similar) process.
    """

    rho: float
    center: float = 0.0
    scale: float = 1.0
    ell: Callable = field(default=_unit, compare=False)

    def __call__(self, s):
        d = np.abs(self.center - np.asarray(s, dtype=float))
        return self.scale * d**self.rho * self.ell(d)

    def pieces(self, lo, hi):
        c, scale, ell = self.center, self.scale, self.ell
        out = []
        if lo < c < hi:
            out.append((lo, c, 0.0, self.rho, lambda s: scale * ell(c - s)))
            out.append((c, hi, self.rho, 0.0, lambda s: scale * ell(s - c)))
        elif c == lo:
            out.append((lo, hi, self.rho, 0.0, lambda s: scale * ell(s - c)))
        elif c == hi:
            out.append((lo, hi, 0.0, self.rho, lambda s: scale * ell(c - s)))
        else:
            out.append((lo, hi, 0.0, 0.0, self))
        return out

    def describe(self):
        return f"{self.scale:g} * |{self.center:g} - s|^{self.rho:g}"


@dataclass(frozen=True)
class RegularlyVarying:
    """Arbitrary locally bounded g with a caller-declared index ``rho``."""

    fn: Callable
    rho: float
    label: str = "g"

    def __call__(self, s):
        return np.asarray(self.fn(np.asarray(s, dtype=float)), dtype=float)

    def pieces(self, lo, hi):
        return [(lo, hi, 0.0, 0.0, self)]

    def describe(self):
        return f"{self.label} (rho={self.rho:g})"


@dataclass(frozen=True)
class Zero:
    """g identically zero."""

    rho: float = 0.0

    def __call__(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def pieces(self, lo, hi):
        return []

    def describe(self):
        return "0"


def reflected(g, t):
    """Pieces of s -> g(t - s) on [0, t], as produced by ``g.pieces``."""
    out = []
    for lo, hi, le, re, reg in g.pieces(0.0, t):
        out.append((t - hi, t - lo, re, le, (lambda r, reg=reg: reg(t - r))))
    return out[::-1]


def integrate_against(kernel, g_pieces, left_exp, right_exp, a, b, tol=1e-10):
    """Integrate ``kernel(s) * (s-a)**left_exp * (b-s)**right_exp * g(s)`` over [a, b].

    ``kernel`` is the regular part of the kernel; ``g_pieces`` comes from
    ``g.pieces(a, b)`` (or :func:`reflected`). The kernel exponents apply only at
    the outer endpoints ``a`` and ``b``.
    """
    total = 0.0
    error = 0.0
    for lo, hi, gl, gr, reg in g_pieces:
        le = gl + (left_exp if lo == a else 0.0)
        re = gr + (right_exp if hi == b else 0.0)
        extra_l = left_exp if lo != a and left_exp != 0.0 else None
        extra_r = right_exp if hi != b and right_exp != 0.0 else None

        def f(s, reg=reg, extra_l=extra_l, extra_r=extra_r):
            v = kernel(s) * reg(s)
            if extra_l is not None:
                v = v * (s - a) ** extra_l
            if extra_r is not None:
                v = v * (b - s) ** extra_r
            return v

        res = integrate_bounded(f, lo, hi, SingularWeight(le, re), tol)
        total += res.value
        error += res.error
    return total, error
