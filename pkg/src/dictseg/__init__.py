"""Bayesian multiple change-point detection in signals corrupted by a
dictionary-expanded functional disturbance.

The model search integrates the coefficients and the noise variance
out of the posterior and samples the two inclusion vectors by
Metropolis-Hastings; coefficients are then drawn by a Gibbs sampler
conditionally on the selected model.
"""

from .benchmark import BenchmarkReport, ReplicateRow, run_benchmark
from .config import RunConfig, derive_seeds, load_config, parse_config, sensitivity_presets, serialize_config
from .dictionary import (
    Atom,
    DesignMatrix,
    Dictionary,
    atom_label,
    build_dictionary,
    evaluate_dictionary,
    exchange_dictionary,
    fourier_period_floor_dictionary,
    load_design_matrix,
    simulation_dictionary,
)
from .errors import ComputeError, DataError, DictsegError, ValidationError
from .gibbs import (
    FitResult,
    GibbsConfig,
    GibbsSampler,
    GibbsState,
    GibbsTrace,
    draw_beta,
    draw_lambda,
    draw_sigma2,
    run_gibbs,
)
from .io import (
    EventPriorFile,
    apply_event_priors,
    load_event_priors,
    load_selection,
    load_series,
    write_results,
    write_selection,
)
from .metrics import functional_metrics, segmentation_metrics
from .mh import (
    InclusionProbabilities,
    MHConfig,
    MHTrace,
    inclusion_probabilities,
    intersect_selections,
    propose_flip,
    run_metropolis_hastings,
    select_median_probability_model,
)
from .pipeline import FitOutput, build_context, fit_series
from .posterior import (
    MODE_P,
    MODE_SP,
    Hyperparameters,
    LatentState,
    PosteriorContext,
    log_integrated_posterior,
    log_integrated_posterior_dense,
    log_prior_inclusion,
)
from .simulate import SeriesTruth, disturbance, make_series, simulate_series, true_atom_indices
from .stepmodel import (
    Segmentation,
    SparseStepVector,
    TimeSeries,
    apply_step,
    beta_to_segmentation,
    segmentation_to_beta,
    step_gram,
    step_transpose_apply,
)

__version__ = "0.1.0"
