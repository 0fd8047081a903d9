import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from baxterfbm.errors import DomainError
from baxterfbm.special_fns import (
    baxter_constant,
    beta_fn,
    f_k,
    f_k_quadrature,
    f_k_zero,
    f_series_bound,
    f_series_tails,
    gamma_fn,
    incomplete_beta,
    incomplete_beta_cf,
    validate_hurst,
    validate_rho,
)

# Oracle values (mpmath, 30 digits)
GAMMA_QUARTER = 3.6256099082219083119
BETA_HALF_QUARTER = 5.2441151085842396209
IBETA_HALF_075_05 = 0.90767430995019866526
C_QUARTER_QUARTER = 0.56299040761798003159
# Sum of f_k(0) 2**-k for k >= 3, from a separate Nystrom discretisation
# (16-point panels of width 1 on y in [0, 120])
F_SERIES_HALF_FROM_3 = 0.009959205441964663


def test_gamma_values():
    assert gamma_fn(1.0) == 1.0
    assert abs(gamma_fn(0.5) - math.sqrt(math.pi)) < 1e-15
    assert abs(gamma_fn(0.25) / GAMMA_QUARTER - 1) < 1e-13


def test_gamma_domain():
    with pytest.raises(DomainError):
        gamma_fn(0.0)
    with pytest.raises(DomainError):
        gamma_fn(-1.5)


def test_beta_values():
    assert abs(beta_fn(1, 1) - 1) < 1e-15
    assert abs(beta_fn(0.5, 0.5) - math.pi) < 1e-14
    assert abs(beta_fn(0.5, 0.25) / BETA_HALF_QUARTER - 1) < 1e-13
    with pytest.raises(DomainError):
        beta_fn(0.0, 1.0)


def test_incomplete_beta_examples():
    assert abs(incomplete_beta(1.0, 0.3, 0.6) - beta_fn(0.3, 0.6)) < 1e-12
    assert abs(incomplete_beta(0.5, 1, 2) - 0.375) < 1e-14
    val = incomplete_beta(0.5, 0.75, 0.5)
    assert abs(val - IBETA_HALF_075_05) < 1e-12
    assert abs(val - incomplete_beta_cf(0.5, 0.75, 0.5)) < 1e-10


def test_incomplete_beta_domain():
    with pytest.raises(DomainError):
        incomplete_beta(1.2, 1, 1)
    with pytest.raises(DomainError):
        incomplete_beta(-0.1, 1, 1)
    assert incomplete_beta(0.0, 0.5, 0.5) == 0.0


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0.0, 1.0), p=st.floats(0.05, 3.0), q=st.floats(0.05, 3.0))
def test_incomplete_beta_matches_oracles(s, p, q):
    val = incomplete_beta(s, p, q)
    ref = special.betainc(p, q, s) * special.beta(p, q)
    assert abs(val - ref) <= 1e-10 * max(1.0, abs(ref))
    assert abs(val - incomplete_beta_cf(s, p, q)) <= 1e-10 * max(1.0, abs(ref))


@settings(max_examples=40, deadline=None)
@given(s1=st.floats(0.0, 1.0), s2=st.floats(0.0, 1.0), H=st.floats(0.01, 0.49))
def test_incomplete_beta_monotone(s1, s2, H):
    lo, hi = sorted((s1, s2))
    assert incomplete_beta(lo, H + 0.5, 1 - 2 * H) <= incomplete_beta(hi, H + 0.5, 1 - 2 * H) + 1e-14


@pytest.mark.parametrize("H", [0.1, 0.25, 0.4])
def test_incomplete_beta_small_argument_trend(H):
    # B_x(H+1/2, 1-2H) x**-(1/2+H) -> 1/(1/2+H) as x -> 0
    errs = []
    for t in (1e2, 1e3, 1e4):
        x = 1.0 / (t + 1.0)
        errs.append(abs(incomplete_beta(x, H + 0.5, 1 - 2 * H) * x ** (-0.5 - H) * (0.5 + H) - 1))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_baxter_constant_values():
    for H in (0.01, 0.25, 0.4, 0.49):
        assert baxter_constant(H, 0.0) == 1.0
    assert abs(baxter_constant(0.25, 0.25) - C_QUARTER_QUARTER) < 1e-12
    gamma_ratio = 1 - 0.25 * math.gamma(0.5) * math.gamma(0.25) / math.gamma(0.75) / 3
    assert abs(baxter_constant(0.25, 0.25) - gamma_ratio) < 1e-12


def test_baxter_constant_domain():
    with pytest.raises(DomainError):
        baxter_constant(0.25, -0.25)
    with pytest.raises(DomainError):
        baxter_constant(0.5, 0.0)


def test_rho_window():
    assert validate_rho(0.25, 0.7, upper=True) == 0.7
    with pytest.raises(DomainError, match=r"\(H - 1/2, H \+ 1/2\)"):
        validate_rho(0.25, 0.75, upper=True)


@pytest.mark.parametrize("H", [0.0, 0.5, -0.1, 0.7])
def test_hurst_boundaries_rejected(H):
    with pytest.raises(DomainError):
        validate_hurst(H)


def test_f1_f2_closed_forms():
    assert abs(f_k(1, 0.0) - 1 / math.pi) < 1e-16
    assert abs(f_k(2, 0.0) - 1 / math.pi**2) < 1e-16
    u = np.array([0.1, 1.0, 10.0])
    assert np.allclose(f_k(2, u), np.log1p(u) / (math.pi**2 * u), rtol=0, atol=1e-15)


@pytest.mark.parametrize("u", [0.1, 1.0, 10.0])
def test_f2_quadrature_matches_closed_form(u):
    assert abs(f_k_quadrature(2, u) - math.log1p(u) / (math.pi**2 * u)) < 1e-10


def test_f3_closed_values():
    # int_0^inf log(1+w) / (w (1+w)) dw = pi^2/6 and its u = 1 analogue
    assert abs(f_k(3, 0.0) - 1 / (6 * math.pi)) < 1e-12
    assert abs(f_k(3, 1.0) - 1 / (8 * math.pi)) < 1e-12


def test_f3_against_mpmath():
    u = 2.5
    ref = mpmath.quad(lambda w: mpmath.log(1 + w) / (mpmath.pi**3 * w * (1 + u + w)), [0, 1, mpmath.inf])
    assert abs(f_k(3, u) - float(ref)) < 1e-12


def test_shifted_recursion_disagrees():
    # The shifted form int f_{k-1}(u+v) dv / (pi (1+v)) coincides with the chain
    # form at u = 0 but not at u = 1; the chain form is the one matching the
    # large-t limit of t delta_3 (see test_process_model).
    shifted = mpmath.quad(
        lambda v: mpmath.log(1 + v) / (mpmath.pi**2 * v) / (mpmath.pi * (1 + v)), [0, 1, mpmath.inf]
    )
    assert abs(float(shifted) - f_k(3, 0.0)) < 1e-12
    shifted_at_1 = mpmath.quad(
        lambda v: mpmath.log(2 + v) / (mpmath.pi**2 * (1 + v)) / (mpmath.pi * (1 + v)), [0, 1, mpmath.inf]
    )
    assert abs(float(shifted_at_1) - f_k(3, 1.0)) > 1e-3


def test_fk_domain():
    with pytest.raises(DomainError):
        f_k(0, 1.0)
    with pytest.raises(DomainError):
        f_k(2, -1.0)
    with pytest.raises(DomainError):
        f_k(1.5, 1.0)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 12), u=st.floats(0.0, 1e4), du=st.floats(1e-3, 1e3))
def test_fk_positive_decreasing(k, u, du):
    a, b = f_k(k, u), f_k(k, u + du)
    assert a > 0 and b > 0
    assert b < a


def test_fk_zero_nonincreasing():
    vals = [f_k_zero(k) for k in range(1, 120)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_series_bound_values():
    lower = f_k_zero(1) * 0.5 + f_k_zero(2) * 0.25
    assert f_series_bound(0.5, 1) >= lower
    assert abs(f_series_bound(0.5, 3) / F_SERIES_HALF_FROM_3 - 1) < 1e-8
    assert f_series_bound(1e-8, 1) < 1e-8


def test_series_bound_domain():
    with pytest.raises(DomainError):
        f_series_bound(1.0, 1)
    with pytest.raises(DomainError):
        f_series_bound(0.5, 0)


def test_series_tails_consistent():
    tails = f_series_tails(0.7, 50)
    for J in (1, 5, 20, 50):
        assert abs(tails[J] / f_series_bound(0.7, J) - 1) < 1e-10
    assert np.all(np.diff(tails[1:]) < 0)


@pytest.mark.parametrize("s", [5e-324, 1e-310, 1e-25, 1e-19])
def test_incomplete_beta_tiny_argument(s):
    ref = special.betainc(0.5, 1.0, s) * special.beta(0.5, 1.0)
    assert abs(incomplete_beta(s, 0.5, 1.0) / ref - 1) < 1e-12
