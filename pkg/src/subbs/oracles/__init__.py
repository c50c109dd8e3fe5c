"""Independent pricers used to cross-check the spectral series."""

from .closed_form import VanillaContract, bs_call, bs_put
from .finite_difference import FdConfig, crank_nicolson_solve
from .monte_carlo import McConfig, McResult, monte_carlo_price

__all__ = [
    "VanillaContract",
    "bs_call",
    "bs_put",
    "FdConfig",
    "crank_nicolson_solve",
    "McConfig",
    "McResult",
    "monte_carlo_price",
]
