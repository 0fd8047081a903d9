import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baxterfbm.errors import DomainError, NonConvergenceError
from baxterfbm.quadrature import (
    SingularWeight,
    TailDecay,
    composite_rule,
    integrate_bounded,
    integrate_semiinfinite,
    uniform_edges,
)


def one(s):
    return np.ones_like(s)


def test_inverse_sqrt():
    res = integrate_bounded(one, 0.0, 1.0, SingularWeight(-0.5, 0.0))
    assert abs(res.value - 2.0) < 1e-12
    assert res.error < 1e-10


def test_symmetric_beta_weight():
    # B(1/4, 1/4) from the gamma ratio
    expected = math.gamma(0.25) ** 2 / math.gamma(0.5)
    res = integrate_bounded(one, 0.0, 1.0, SingularWeight(-0.75, -0.75))
    assert abs(res.value / expected - 1.0) < 1e-12


def test_constant():
    assert abs(integrate_bounded(one, 0.0, 1.0).value - 1.0) < 1e-15


def test_power_tail():
    res = integrate_semiinfinite(lambda s: s**-2.0, 1.0, TailDecay(-2.0))
    assert abs(res.value - 1.0) < 1e-9


@pytest.mark.parametrize("H", [0.1, 0.25, 0.4])
def test_regularly_varying_tail(H):
    res = integrate_semiinfinite(lambda s: s ** (-1.5 - H), 1.0, TailDecay(-1.5 - H))
    assert abs(res.value * (0.5 + H) - 1.0) < 1e-9


def test_exponential_from_zero():
    res = integrate_semiinfinite(lambda s: np.exp(-s), 0.0, TailDecay(-2.0, "exponential"))
    assert abs(res.value - 1.0) < 1e-10


def test_weight_exponent_must_exceed_minus_one():
    with pytest.raises(DomainError):
        SingularWeight(-1.0, 0.0)
    with pytest.raises(DomainError):
        SingularWeight(0.0, -1.5)


def test_tail_exponent_must_be_integrable():
    with pytest.raises(DomainError):
        TailDecay(-1.0)
    with pytest.raises(DomainError):
        integrate_semiinfinite(lambda s: s**-0.5, 1.0, -0.5)


def test_empty_interval_rejected():
    with pytest.raises(DomainError):
        integrate_bounded(one, 1.0, 1.0)


def test_budget_exhaustion_carries_estimate():
    # an undeclared interior singularity cannot be resolved in 200 evaluations
    with pytest.raises(NonConvergenceError) as info:
        integrate_bounded(lambda s: np.abs(s - 0.3) ** -0.5, 0.0, 1.0, tol=1e-14, max_evals=200)
    assert math.isfinite(info.value.estimate)
    assert info.value.evaluations <= 200


def test_nonfinite_integrand_is_reported():
    with pytest.raises(NonConvergenceError):
        integrate_bounded(lambda s: np.full_like(s, np.nan), 0.0, 1.0)


def test_composite_rule_is_exact_for_polynomials():
    x, w = composite_rule(uniform_edges(0.0, 3.0, 1.0), 10)
    assert abs(np.sum(w * x**7) - 3.0**8 / 8) < 1e-10


def test_uniform_edges_respects_width():
    edges = uniform_edges(0.0, 10.0, 2.5)
    assert np.max(np.diff(edges)) <= 2.5 + 1e-12
    assert edges[0] == 0.0 and edges[-1] == 10.0


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(-0.9, 1.0),
    beta=st.floats(-0.9, 1.0),
    a=st.floats(1.0, 3.0),
    b=st.floats(-2.0, 2.0),
)
def test_linearity(alpha, beta, a, b):
    w = SingularWeight(alpha, beta)
    f = integrate_bounded(lambda s: np.cos(s), 0.0, 1.0, w).value
    g = integrate_bounded(lambda s: np.exp(s), 0.0, 1.0, w).value
    fg = integrate_bounded(lambda s: a * np.cos(s) + b * np.exp(s), 0.0, 1.0, w).value
    assert abs(fg - (a * f + b * g)) < 1e-9 * (abs(a * f) + abs(b * g))


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.05, 0.95), alpha=st.floats(-0.9, 0.5))
def test_splitting(c, alpha):
    def f(s):
        return np.exp(-s) * s**alpha

    whole = integrate_bounded(lambda s: np.exp(-s), 0.0, 1.0, SingularWeight(alpha, 0.0)).value
    left = integrate_bounded(lambda s: np.exp(-s), 0.0, c, SingularWeight(alpha, 0.0)).value
    right = integrate_bounded(f, c, 1.0).value
    assert abs(left + right - whole) < 1e-9 * whole


def test_tighter_tolerance_does_not_increase_error():
    w = SingularWeight(-0.7, -0.3)
    f = lambda s: np.cos(3 * s)  # noqa: E731
    loose = integrate_bounded(f, 0.0, 1.0, w, tol=1e-6)
    tight = integrate_bounded(f, 0.0, 1.0, w, tol=5e-7)
    assert tight.error <= loose.error


def test_tiny_interval_with_endpoint_weights():
    # int_0^L s^-1/2 (L-s)^-1/2 ds = pi for any L, including subnormal widths
    res = integrate_bounded(lambda s: np.ones_like(s), 0.0, 1e-310, SingularWeight(-0.5, -0.5), tol=1e-12)
    assert abs(res.value - math.pi) < 1e-10
