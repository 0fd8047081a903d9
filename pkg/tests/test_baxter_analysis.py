import json
import math

import numpy as np
import pytest

from baxterfbm.baxter_analysis import (
    SweepResult,
    baxter_lhs,
    baxter_rhs,
    norm_function,
    ratio_sweep,
    thm43b_constant,
    thm43b_sweep,
)
from baxterfbm.errors import DomainError
from baxterfbm.fbm_kernels import lemma21_lhs, psi0_infinite, remark22_constant
from baxterfbm.process_model import make_fbm_model
from baxterfbm.quadrature import TailDecay, integrate_semiinfinite
from baxterfbm.regvar import AbsPowerLaw, PowerLaw, Zero
from baxterfbm.special_fns import baxter_constant

H = 0.25
FBM = make_fbm_model(H)


def test_zero_weight_gives_zero():
    assert baxter_lhs(FBM, Zero(), 1.0, 10.0) == 0.0
    assert baxter_rhs(FBM, Zero(), 1.0, 10.0) == 0.0


@pytest.mark.parametrize("rho", [0.0, 0.25])
def test_lhs_series_matches_closed_form(rho):
    g = PowerLaw(rho)
    assert abs(baxter_lhs(FBM, g, 1.0, 20.0) / lemma21_lhs(g, 1.0, 20.0, H) - 1) < 1e-6


def test_lhs_with_interior_zero_matches_closed_form():
    g = AbsPowerLaw(rho=H, center=3.0)
    assert abs(baxter_lhs(FBM, g, 1.0, 20.0) / lemma21_lhs(g, 1.0, 20.0, H) - 1) < 1e-6


@pytest.mark.parametrize("rho", [0.0, 0.25, 0.6])
def test_rhs_matches_plain_integral(rho):
    t = 1e3
    ref = integrate_semiinfinite(
        lambda s: psi0_infinite(s, 1.0, H) * s**rho, t, TailDecay(-1.5 - H + rho), tol=1e-12, scale=t
    ).value
    assert abs(baxter_rhs(FBM, PowerLaw(rho), 1.0, t) / ref - 1) < 1e-8


def test_rhs_decreases_in_t():
    vals = [baxter_rhs(FBM, PowerLaw(0.25), 1.0, t) for t in (10.0, 100.0, 1000.0)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_rhs_power_law_asymptote():
    # int_t^inf psi0(s;T) s**rho ds ~ T**(1/2+H) cos(pi H)/pi t**(rho-1/2-H)/(1/2+H-rho)
    rho = 0.25
    errs = []
    for t in (1e2, 1e3, 1e4):
        approx = math.cos(math.pi * H) / math.pi * t ** (rho - 0.5 - H) / (0.5 + H - rho)
        errs.append(abs(baxter_rhs(FBM, PowerLaw(rho), 1.0, t) / approx - 1))
    assert errs[0] > errs[1] > errs[2]


def test_rhs_with_center_beyond_t():
    g = AbsPowerLaw(rho=H, center=15.0)
    ref = integrate_semiinfinite(
        lambda s: psi0_infinite(s, 1.0, H) * np.abs(15.0 - s) ** H, 30.0, TailDecay(-1.5), tol=1e-12, scale=30.0
    ).value
    direct = baxter_rhs(FBM, g, 1.0, 10.0)
    assert direct > ref


@pytest.mark.parametrize("rho", [-0.3, 0.75, 1.0])
def test_rho_outside_window(rho):
    with pytest.raises(DomainError, match="regular-variation index"):
        baxter_rhs(FBM, PowerLaw(rho), 1.0, 10.0)


def test_nonpositive_lengths():
    with pytest.raises(DomainError):
        baxter_lhs(FBM, PowerLaw(0.0), 0.0, 10.0)
    with pytest.raises(DomainError):
        baxter_rhs(FBM, PowerLaw(0.0), 1.0, -1.0)


def test_ratio_sweep_rho_zero_is_exact():
    sweep = ratio_sweep(FBM, PowerLaw(0.0), 1.0, (10.0, 100.0))
    assert np.all(sweep["asymptote"] == 1.0)
    assert np.allclose(sweep["ratio"], 1.0, atol=1e-6)
    assert sweep.metadata["m_hat"] == sweep.m_hat
    assert len(sweep.metadata["config_hash"]) == 16


def test_ratio_sweep_worker_independent():
    grid = (10.0, 30.0, 100.0)
    one = ratio_sweep(FBM, PowerLaw(0.25), 1.0, grid, workers=1)
    three = ratio_sweep(FBM, PowerLaw(0.25), 1.0, grid, workers=3)
    assert one.to_csv() == three.to_csv()
    assert one.metadata == three.metadata


def test_ratio_sweep_rho_h_approaches_constant():
    sweep = ratio_sweep(FBM, PowerLaw(0.25), 1.0, (10.0, 100.0, 1000.0))
    errs = np.abs(sweep["ratio"] - baxter_constant(H, H))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("grid", [(), (10.0, 5.0), (0.5, 10.0), ((1.0, 2.0),)])
def test_sweep_grid_validation(grid):
    with pytest.raises(DomainError):
        ratio_sweep(FBM, PowerLaw(0.0), 1.0, grid)


def test_sweep_result_serialisation():
    res = SweepResult(("t", "ratio"), [[1.0, 0.5], [2.0, 0.75]], {"kind": "x"})
    assert res.to_csv() == "t,ratio\n1.0,0.5\n2.0,0.75\n"
    payload = json.loads(res.to_json())
    assert payload["rows"] == [[1.0, 0.5], [2.0, 0.75]]
    assert res.m_hat == 0.75
    with pytest.raises(DomainError):
        SweepResult(("t", "ratio"), [[2.0, 0.5], [1.0, 0.75]])


def test_thm43b_constant():
    assert abs(thm43b_constant(FBM, 1.0) / remark22_constant(H, 1.0) - 1) < 1e-12
    assert abs(thm43b_constant(FBM, 1.0, 3.0) / thm43b_constant(FBM, 1.0) - 3) < 1e-13
    with pytest.raises(DomainError):
        thm43b_constant(FBM, 1.0, 0.0)


def test_norm_function():
    g = norm_function(FBM, 2.0, 1.5)
    assert abs(g(6.0) - 1.5 * 4.0**H) < 1e-14
    with pytest.raises(DomainError):
        norm_function(FBM, -1.0)


def test_thm43b_sweep_trend_with_offset_origin():
    # the ratio crosses 1 near t = 100 before settling, so compare past the crossing
    sweep = thm43b_sweep(FBM, 1.0, t1=0.5, t_grid=(1e3, 1e4))
    assert np.allclose(sweep["constant"], thm43b_constant(FBM, 1.0))
    errs = np.abs(sweep["ratio"] - 1)
    assert errs[0] > errs[1]
    assert errs[1] < 1e-3
    assert sweep.metadata["t1"] == 0.5
