"""Two-stage fit: model search first, coefficients second.

Stage one runs the Metropolis-Hastings chain over inclusion vectors
and keeps the components whose posterior inclusion probability exceeds
1/2.  Stage two runs the Gibbs sampler conditionally on that selected
model.  Both stages are resumable separately through the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dictionary import DesignMatrix
from .gibbs import FitResult, GibbsConfig, run_gibbs
from .mh import (
    InclusionProbabilities,
    MHConfig,
    MHTrace,
    inclusion_probabilities,
    run_metropolis_hastings,
    select_median_probability_model,
)
from .posterior import MODE_SP, Hyperparameters, LatentState, PosteriorContext
from .stepmodel import TimeSeries


@dataclass(frozen=True)
class FitOutput:
    fit: FitResult
    mh_trace: MHTrace
    inclusion: InclusionProbabilities
    selection: LatentState


def build_context(series: TimeSeries, hyper: Hyperparameters,
                  design: DesignMatrix | None, mode: str) -> PosteriorContext:
    return PosteriorContext(series, hyper, design if mode == MODE_SP else None, mode)


def fit_series(series: TimeSeries, hyper: Hyperparameters,
               mh_config: MHConfig, gibbs_config: GibbsConfig,
               design: DesignMatrix | None = None,
               threshold: float = 0.5) -> FitOutput:
    ctx = build_context(series, hyper, design, mh_config.mode)
    trace = run_metropolis_hastings(ctx, mh_config)
    incl = inclusion_probabilities(trace, mh_config.burn_in)
    selection = select_median_probability_model(incl, threshold=threshold)
    fit = run_gibbs(ctx, selection, gibbs_config, inclusion=incl)
    return FitOutput(fit=fit, mh_trace=trace, inclusion=incl, selection=selection)
