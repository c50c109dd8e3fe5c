"""Laguerre spectral pricing for the power-variance diffusion dS = r S dt + sigma S^(k/2) dW."""

from .errors import NumericalError, ParameterError, PricerError
from .model import (
    GammaPayoff,
    PowerVarianceModel,
    decay_rate,
    eigenvalue,
    payoff_value,
    s_of_u,
    u_of_s,
)
from .quadrature import (
    GaussLaguerreRule,
    adaptive_integrate_s,
    build_composite_rule,
    build_rule,
    integrate,
)
from .spectral import (
    PriceSurface,
    SpectralSolution,
    evaluate,
    price_surface,
    project_coefficients,
    reconstruction_error,
    tail_report,
)

__all__ = [
    "NumericalError",
    "ParameterError",
    "PricerError",
    "GammaPayoff",
    "PowerVarianceModel",
    "decay_rate",
    "eigenvalue",
    "payoff_value",
    "s_of_u",
    "u_of_s",
    "GaussLaguerreRule",
    "adaptive_integrate_s",
    "build_composite_rule",
    "build_rule",
    "integrate",
    "PriceSurface",
    "SpectralSolution",
    "evaluate",
    "price_surface",
    "project_coefficients",
    "reconstruction_error",
    "tail_report",
]

__version__ = "0.1.0"
