"""Power-variance model parameters, the gamma-shaped payoff and the u(S) map.

The pricing PDE is

    V_t + r S V_S + 1/2 sigma^2 S^k V_SS - r V = 0,

i.e. local volatility sigma * S^(k/2). For k > 2 the substitution
u = 2 r S^(2-k) / ((k-2) sigma^2) turns the spatial operator into the
Laguerre operator of order 1/(k-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .specfun import log_gamma

__all__ = [
    "PowerVarianceModel",
    "GammaPayoff",
    "u_of_s",
    "s_of_u",
    "eigenvalue",
    "decay_rate",
    "payoff_value",
]


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError("NONFINITE_PARAMETER", f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class PowerVarianceModel:
    """Rate ``r``, volatility scale ``sigma`` and elasticity exponent ``k`` (> 2)."""

    r: float
    sigma: float
    k: float

    def __post_init__(self):
        r = _require_finite("r", self.r)
        sigma = _require_finite("sigma", self.sigma)
        k = _require_finite("k", self.k)
        if r <= 0.0:
            raise ParameterError("NONPOSITIVE_R", f"r must be > 0, got {r}")
        if sigma <= 0.0:
            raise ParameterError("NONPOSITIVE_SIGMA", f"sigma must be > 0, got {sigma}")
        if k <= 2.0:
            raise ParameterError(
                "K_OUT_OF_RANGE",
                f"k must be > 2 (the u(S) substitution is singular at k = 2 and negative below), got {k}",
            )
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "k", k)

    @property
    def laguerre_order(self) -> float:
        """Order 1/(k-2) of the Laguerre eigenbasis."""
        return 1.0 / (self.k - 2.0)

    @property
    def u_scale(self) -> float:
        """Constant c in u = c * S^(2-k)."""
        return 2.0 * self.r / ((self.k - 2.0) * self.sigma ** 2)


@dataclass(frozen=True)
class GammaPayoff:
    """Maturity condition A * alpha^(p+1) S^(p+1) exp(-alpha S) / Gamma(p+1)."""

    A: float
    alpha_rate: float
    p: float

    def __post_init__(self):
        A = _require_finite("A", self.A)
        rate = _require_finite("alpha", self.alpha_rate)
        p = _require_finite("p", self.p)
        if A <= 0.0:
            raise ParameterError("NONPOSITIVE_A", f"A must be > 0, got {A}")
        if rate <= 0.0:
            raise ParameterError("NONPOSITIVE_ALPHA", f"alpha must be > 0, got {rate}")
        if p <= -1.0:
            raise ParameterError("P_OUT_OF_RANGE", f"p must be > -1, got {p}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "alpha_rate", rate)
        object.__setattr__(self, "p", p)

    @property
    def peak(self) -> float:
        return (self.p + 1.0) / self.alpha_rate

    @property
    def total_mass(self) -> float:
        """Integral of the payoff over S in (0, inf)."""
        return self.A * (self.p + 1.0) / self.alpha_rate

    def log_shape_norm(self) -> float:
        """log of alpha^(p+1) / Gamma(p+1); A stays a plain factor so scaling it is exact."""
        return (self.p + 1.0) * math.log(self.alpha_rate) - log_gamma(self.p + 1.0)

    def from_log_s(self, log_s):
        """Payoff evaluated from log S; S = inf maps to 0 rather than nan."""
        log_s = np.asarray(log_s, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            s = np.exp(log_s)
            out = self.A * np.exp(self.log_shape_norm() + (self.p + 1.0) * log_s - self.alpha_rate * s)
        out = np.where(log_s == np.inf, 0.0, out)
        return out if out.ndim else float(out)

    def __call__(self, S):
        return payoff_value(self, S)


def _check_positive(name: str, x: np.ndarray):
    if np.any(~(x > 0.0)) or np.any(~np.isfinite(x)):
        raise ParameterError("DOMAIN_ERROR", f"{name} must be finite and > 0")


def u_of_s(model: PowerVarianceModel, S):
    """u = 2 r S^(2-k) / ((k-2) sigma^2); strictly decreasing in S."""
    S = np.asarray(S, dtype=float)
    _check_positive("S", S)
    u = model.u_scale * S ** (2.0 - model.k)
    return u if u.ndim else float(u)


def _log_s_of_u(model: PowerVarianceModel, u: np.ndarray) -> np.ndarray:
    return (np.log(model.u_scale) - np.log(u)) * model.laguerre_order


def s_of_u(model: PowerVarianceModel, u):
    """Inverse of :func:`u_of_s`: S = (c/u)^(1/(k-2))."""
    u = np.asarray(u, dtype=float)
    _check_positive("u", u)
    with np.errstate(over="ignore"):
        S = np.exp(_log_s_of_u(model, u))
    return S if S.ndim else float(S)


def payoff_at_u(model: PowerVarianceModel, payoff: GammaPayoff, u):
    """payoff(s_of_u(u)) computed in log space so extreme nodes underflow cleanly."""
    u = np.asarray(u, dtype=float)
    _check_positive("u", u)
    return payoff.from_log_s(_log_s_of_u(model, u))


def eigenvalue(model: PowerVarianceModel, n: int) -> float:
    """lambda_n = -n (k-2) r - r."""
    if n < 0 or int(n) != n:
        raise ParameterError("NEGATIVE_MODE", f"mode index must be a non-negative integer, got {n}")
    return -n * (model.k - 2.0) * model.r - model.r


def decay_rate(model: PowerVarianceModel, n) -> np.ndarray | float:
    """r (n (k-2) + 1), the rate at which mode n is discounted back from maturity."""
    n = np.asarray(n, dtype=float)
    out = model.r * (n * (model.k - 2.0) + 1.0)
    return out if out.ndim else float(out)


def payoff_value(payoff: GammaPayoff, S):
    """Gamma-type maturity value; 0 at S = 0, single maximum at S = (p+1)/alpha."""
    S = np.asarray(S, dtype=float)
    if np.any(S < 0.0) or np.any(np.isnan(S)):
        raise ParameterError("DOMAIN_ERROR", "payoff requires S >= 0")
    out = np.zeros_like(S)
    pos = S > 0.0
    with np.errstate(divide="ignore"):
        out[pos] = payoff.from_log_s(np.log(S[pos]))
    return out if out.ndim else float(out)
