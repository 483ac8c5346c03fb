"""Bayesian cognitive diagnosis models."""

from ._core import (
    DimensionError,
    ParseError,
    SamplerError,
    aic_bic,
    dic,
    discrepancy,
    effective_draws,
    enumerate_patterns,
    fit,
    models,
    prob_dina,
    prob_rdina,
    rdina_to_sg,
    rhat,
    run,
    simulate,
)

__version__ = "0.1.0"
