"""Classical Black-Scholes call and put written with the error function."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ParameterError
from ..specfun import erf


@dataclass(frozen=True)
class VanillaContract:
    K: float
    T: float
    kind: str = "call"

    def __post_init__(self):
        if not (self.K > 0.0 and math.isfinite(self.K)):
            raise ParameterError("NONPOSITIVE_STRIKE", f"K must be > 0, got {self.K}")
        if self.kind not in ("call", "put"):
            raise ParameterError("CONTRACT_KIND", f"kind must be 'call' or 'put', got {self.kind!r}")

    def price(self, S: float, r: float, sigma: float, t: float = 0.0) -> float:
        pricer = bs_call if self.kind == "call" else bs_put
        return pricer(S, self.K, r, sigma, self.T - t)


def _validate(S, K, r, sigma, tau):
    for name, v in (("S", S), ("K", K), ("r", r), ("sigma", sigma), ("tau", tau)):
        if not math.isfinite(v):
            raise ParameterError("NONFINITE_PARAMETER", f"{name} must be finite, got {v}")
    if S <= 0.0:
        raise ParameterError("DOMAIN_ERROR", f"S must be > 0, got {S}")
    if K <= 0.0:
        raise ParameterError("NONPOSITIVE_STRIKE", f"K must be > 0, got {K}")
    if sigma <= 0.0:
        raise ParameterError("NONPOSITIVE_SIGMA", f"sigma must be > 0, got {sigma}")
    if tau < 0.0:
        raise ParameterError("NEGATIVE_TAU", f"time to maturity must be >= 0, got {tau}")


def _half_erf_args(S, K, r, sigma, tau):
    vol = sigma * math.sqrt(tau)
    log_m = math.log(S / K)
    plus = (log_m + (r + 0.5 * sigma * sigma) * tau) / vol
    minus = (log_m + (r - 0.5 * sigma * sigma) * tau) / vol
    return plus / math.sqrt(2.0), minus / math.sqrt(2.0)


def bs_call(S: float, K: float, r: float, sigma: float, tau: float) -> float:
    """European call; ``tau`` is time to maturity. tau = 0 gives max(S - K, 0)."""
    _validate(S, K, r, sigma, tau)
    if tau == 0.0:
        return max(S - K, 0.0)
    a, b = _half_erf_args(S, K, r, sigma, tau)
    return S * (0.5 + 0.5 * erf(a)) - K * math.exp(-r * tau) * (0.5 + 0.5 * erf(b))


def bs_put(S: float, K: float, r: float, sigma: float, tau: float) -> float:
    """European put; tau = 0 gives max(K - S, 0)."""
    _validate(S, K, r, sigma, tau)
    if tau == 0.0:
        return max(K - S, 0.0)
    a, b = _half_erf_args(S, K, r, sigma, tau)
    return -S * (0.5 - 0.5 * erf(a)) + K * math.exp(-r * tau) * (0.5 - 0.5 * erf(b))
