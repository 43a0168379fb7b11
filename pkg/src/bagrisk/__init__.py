"""Exact risk asymptotics and Monte Carlo tooling for bagged ridge regression.

The package is organized around five layers:

* :mod:`bagrisk.spectrum` — covariance / signal spectral distributions;
* :mod:`bagrisk.fixed_point` — the scalar self-consistency equation and the
  functionals built on its solution;
* :mod:`bagrisk.risk_theory` — asymptotic bias/variance/risk for subsample
  ensembles and the optimal-subsample search;
* :mod:`bagrisk.simulate` — finite-sample data generation, ensemble fitting,
  and exact conditional risk;
* :mod:`bagrisk.cv` — subsample-size selection on a held-out split.

``bagrisk.cli`` wires these into the ``bagrisk`` command.
"""

__version__ = "0.1.0"

from .cv import (CvCandidate, CvConfig, CvResult, build_grid,
                 default_test_size, estimate_risk, mom_fold_count, run_cv)
from .fixed_point import (FixedPointBundle, closed_form_v_isotropic,
                          evaluate_bundle, solve_v, tc_of, tv_b_of, tv_of,
                          tv_v_of)
from .risk_theory import (RiskComponents, RiskPoint, B_lam, C_lam, V_lam,
                          combine_M, optimal_ridge_risk_isotropic,
                          optimize_phis, risk_splag, risk_subag, theory_risk,
                          wor_correction)
from .simulate import (Dataset, EnsembleSpec, FittedEnsemble,
                       bias_variance_components, draw_indices,
                       exact_conditional_risk, fit_ensemble, fit_ridge,
                       fit_ridgeless, gen_ar1, gen_iso, gen_nonlinear,
                       load_external, testset_risk)
from .spectrum import (SignalDistribution, SpectralDistribution,
                       ar1_covariance, integrate, load_signal, load_spectrum,
                       make_ar1, make_empirical, make_isotropic,
                       make_isotropic_signal, save_spectrum)

__all__ = [
    "__version__",
    # spectrum
    "SpectralDistribution", "SignalDistribution", "integrate",
    "make_isotropic", "make_isotropic_signal", "ar1_covariance", "make_ar1",
    "make_empirical", "save_spectrum", "load_spectrum", "load_signal",
    # fixed point
    "solve_v", "closed_form_v_isotropic", "tv_of", "tc_of", "tv_b_of",
    "tv_v_of", "FixedPointBundle", "evaluate_bundle",
    # risk theory
    "RiskComponents", "RiskPoint", "B_lam", "V_lam", "C_lam", "combine_M",
    "wor_correction", "risk_subag", "risk_splag", "theory_risk",
    "optimize_phis", "optimal_ridge_risk_isotropic",
    # simulation
    "Dataset", "EnsembleSpec", "FittedEnsemble", "gen_iso", "gen_ar1",
    "gen_nonlinear", "load_external", "draw_indices", "fit_ridge",
    "fit_ridgeless", "fit_ensemble", "exact_conditional_risk", "testset_risk",
    "bias_variance_components",
    # cv
    "CvConfig", "CvCandidate", "CvResult", "default_test_size", "build_grid",
    "mom_fold_count", "estimate_risk", "run_cv",
]
