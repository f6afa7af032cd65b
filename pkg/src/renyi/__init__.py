"""Improper priors and posteriors as Renyi conditional probability spaces.

Laws are handled as Renyi states: log-densities against a base measure,
defined up to an additive constant.  Probabilities exist only conditionally
on windows of finite positive mass.
"""
from .bayes import (CommutationReport, IcarExponent, JointModel, Likelihood, NotSigmaFinite,
                    PosteriorClassification, UndeterminedMassError, classify_posterior,
                    disintegrate_discrete, icar_normalization_exponent, kernel_state,
                    log_c_gauge, marginal_state, posterior_state, restriction_commutes,
                    sequential_update, update)
from .glue import (AlignmentError, ChainConfig, GlueResult, WindowScheme, align_offsets,
                   glue, kde_log_density, run_glue, sample_restricted)
from .measure import (MassValue, NotElementaryError, RenyiState, TailHint, check_bunch_axioms,
                      check_consistency, conditional_probability, is_elementary,
                      normalize_on_window, q_vague_limit_check, restrict, states_equivalent,
                      window_mass)
from .paradox import (bayes_test_posterior, focus_test_limit, improper_test_probability,
                      lindley_posterior_flat, lindley_repetition_curve, marginalization_pair,
                      p_value, scaled_prior_posterior, unimodal_lower_bound,
                      window_prior_posterior)
from .windows import BaseMeasure, WindowSet
from .zoo import MODELS, build_model

__version__ = "0.1.0"

__all__ = [
    "AlignmentError", "BaseMeasure", "ChainConfig", "CommutationReport", "GlueResult",
    "IcarExponent", "JointModel", "Likelihood", "MODELS", "MassValue", "NotElementaryError",
    "NotSigmaFinite", "PosteriorClassification", "RenyiState", "TailHint",
    "UndeterminedMassError", "WindowScheme", "WindowSet", "align_offsets",
    "bayes_test_posterior", "build_model", "check_bunch_axioms", "check_consistency",
    "classify_posterior", "conditional_probability", "disintegrate_discrete",
    "focus_test_limit", "glue", "icar_normalization_exponent", "improper_test_probability",
    "is_elementary", "kde_log_density", "kernel_state", "lindley_posterior_flat",
    "lindley_repetition_curve", "log_c_gauge", "marginal_state", "marginalization_pair",
    "normalize_on_window", "p_value", "posterior_state", "q_vague_limit_check", "restrict",
    "restriction_commutes", "run_glue", "sample_restricted", "scaled_prior_posterior",
    "sequential_update", "states_equivalent", "unimodal_lower_bound", "update",
    "window_mass", "window_prior_posterior",
]
