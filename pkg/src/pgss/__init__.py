"""Poisson-gamma state space models: filtering, exact and simulated predictives."""

__version__ = "0.1.0"

from .errors import InputError, InternalError, NumericError, PGSSError
from .model import (
    FilterState,
    ModelSpec,
    NegBinPredictive,
    b_closed_form,
    b_star,
    filter_series,
    one_step_predictive,
    propagate_prior,
    update,
)
from .rng import RngStream, StreamBank
from .simulate import (
    EnsembleSummary,
    PathSample,
    PredictiveEnsemble,
    build_ensemble,
    draw_beta,
    draw_gamma,
    draw_poisson,
    sample_marginal_chain,
    sample_path,
    summarize,
)
from .analytics import (
    MomentTrack,
    ZeroProbTable,
    check_monotone_in_b,
    check_monotone_in_t,
    first_crossing,
    pgf,
    pgf_unit,
    predictive_mean,
    tower_crosscheck,
    variance_track,
    zero_prob_sequence,
    zero_prob_table,
)
