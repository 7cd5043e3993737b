"""Extreme value tools for non-stationary univariate and multivariate tails."""

__version__ = "0.1.0"

from evtkit.kernels import BACKEND
from evtkit.errors import DomainError, EvtError, EvtWarning, FitError, PreconditionError
from evtkit.gpd import GpdParams, gpd_cdf, gpd_crps, gpd_fit_mle, gpd_quantile, gpd_survival
from evtkit.margins import MarginScale, empirical_cdf, semiparametric_cdf, to_uniform_ranks, transform
from evtkit.series import Series
from evtkit.evgam import GpdFit, GpdSpec, QuantileThreshold, fit_nonstationary_gpd, fit_threshold_quantile
from evtkit.marginal import MarginalTail
from evtkit.threshold import eqd_select, loss_augmented_refit
from evtkit.scoring import competition_loss, crps, forward_select, k_fold_cv
from evtkit.dependence import ClusterResult, chi_matrix, chi_u, cluster_by_chi, eta_u, hill_lambda
from evtkit.minproj import SimplexRay, build_challenge_rays, fit_minproj, joint_survivor_probability
from evtkit.condex import fit_condext, group_exceedance_probability, laplace_quantile
from evtkit.resampling import semiparametric_response_bootstrap, stationary_bootstrap_indices
from evtkit.workflows import run_workflow

__all__ = [
    "BACKEND",
    "ClusterResult",
    "DomainError",
    "EvtError",
    "EvtWarning",
    "FitError",
    "GpdFit",
    "GpdParams",
    "GpdSpec",
    "MarginScale",
    "MarginalTail",
    "PreconditionError",
    "QuantileThreshold",
    "Series",
    "SimplexRay",
    "build_challenge_rays",
    "chi_matrix",
    "chi_u",
    "cluster_by_chi",
    "competition_loss",
    "crps",
    "empirical_cdf",
    "eqd_select",
    "eta_u",
    "fit_condext",
    "fit_minproj",
    "fit_nonstationary_gpd",
    "fit_threshold_quantile",
    "forward_select",
    "gpd_cdf",
    "gpd_crps",
    "gpd_fit_mle",
    "gpd_quantile",
    "gpd_survival",
    "group_exceedance_probability",
    "hill_lambda",
    "joint_survivor_probability",
    "k_fold_cv",
    "laplace_quantile",
    "loss_augmented_refit",
    "run_workflow",
    "semiparametric_cdf",
    "semiparametric_response_bootstrap",
    "stationary_bootstrap_indices",
    "to_uniform_ranks",
    "transform",
    "__version__",
]
