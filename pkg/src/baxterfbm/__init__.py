"""Prediction kernels of fractional Brownian motion and fBm-type processes with
Hurst index H < 1/2, with numerical checks of the weighted Baxter inequality."""

from .baxter_analysis import SweepResult, baxter_lhs, baxter_rhs, ratio_sweep, thm43b_constant, thm43b_sweep
from .errors import DomainError, IllConditionedError, NonConvergenceError, TruncationError
from .fbm_kernels import (
    PredictionGeometry,
    lemma21_asymptote,
    lemma21_decomposition,
    lemma21_lhs,
    psi0_diff,
    psi0_finite,
    psi0_infinite,
    remark22_constant,
)
from .fbm_simulation import (
    PathEnsemble,
    SampleGrid,
    fbm_cov,
    gram_optimal_predictor,
    kernel_predictor_mse,
    mc_verify,
    simulate_paths,
)
from .process_model import (
    KernelSeriesConfig,
    NuMeasure,
    ProcessModel,
    b_k_iterated,
    b_k_prop32,
    b_kernel,
    beta_kernel,
    c_from_nu,
    delta_k,
    make_fbm_model,
    make_model,
    psi_diff_series,
    psi_finite_series,
)
from .quadrature import SingularWeight, TailDecay, integrate_bounded, integrate_semiinfinite
from .regvar import AbsPowerLaw, PowerLaw, RegularlyVarying, Zero
from .special_fns import baxter_constant, beta_fn, f_k, f_series_bound, gamma_fn, incomplete_beta

__version__ = "0.1.0"
