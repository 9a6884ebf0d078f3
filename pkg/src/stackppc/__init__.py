"""Bayesian stacking of logistic-regression candidate models, with grouped
posterior predictive checks and focal-grid predictive comparisons."""
from ._accel import NUMBA_ENABLED
from .comparisons import (build_profiles, contrast_gaps, focal_grid, gap_posterior,
                          predict_cells)
from .dataset import (Column, DataError, Dataset, generate_synthetic, load_csv, quartile_bin,
                      write_csv)
from .design import DesignMatrix, build_design
from .diagnostics import Diagnostics, diagnose
from .loo import LooResult, exact_loo, loglik_matrix, psis_loo
from .model import (ModelEnsemble, ModelSpec, PriorConfig, grad_log_posterior, log_posterior,
                    predict_prob)
from .ppc import holdout_check, p_lower, p_one_sided, ppc_report, replicate, run_ppc, tspppv
from .sampler import PosteriorDraws, SamplerConfig, sample
from .stacking import (LpdMatrix, StackingWeights, allocate, brier, stack_draws,
                       stack_weights_logscore, stack_weights_lsq, stacked_predictive)

__version__ = "0.1.0"
