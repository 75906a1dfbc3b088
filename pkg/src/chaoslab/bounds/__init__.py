"""Stein-type bounds, quadrature evaluators and d₂ lower estimates."""

from chaoslab.bounds.d2 import TestFunctional, cosine_dictionary, d2_lower_estimate, gaussian_sampler
from chaoslab.bounds.quadrature import imp_bound_quadrature, improved_bound
from chaoslab.bounds.report import BoundReport, evaluate_bounds
from chaoslab.bounds.stein import (
    GammaSample,
    covariance_operator,
    gamma_mean,
    gamma_sample,
    improved_bounds,
    msbc_bound,
    second_order_bounds,
)
