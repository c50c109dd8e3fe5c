"""Special functions used by the pricer.

Generalized Laguerre polynomials, log-gamma, the error function and the
Whittaker M function. Nothing here depends on scipy; ``laguerre`` and
``laguerre_table`` accept numpy arrays, the rest are scalar.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError, ParameterError

__all__ = [
    "laguerre",
    "laguerre_table",
    "log_gamma",
    "erf",
    "erfc",
    "kummer_m",
    "whittaker_m",
]

# Godfrey's Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)

_SERIES_RTOL = 1e-16
_SERIES_PATIENCE = 3
_SERIES_MAX_TERMS = 10_000


def laguerre(n: int, alpha: float, x):
    """Generalized Laguerre polynomial L_n^(alpha)(x) by upward recurrence.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    if n < 0:
        raise ParameterError("NEGATIVE_DEGREE", f"Laguerre degree must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 + alpha - x) * cur - (m + alpha) * prev) / (m + 1)
    return cur if cur.ndim else float(cur)


def laguerre_table(n_max: int, alpha: float, x) -> np.ndarray:
    """All of L_0 .. L_{n_max} at ``x``, stacked along a new leading axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + alpha - x
    for m in range(1, n_max):
        out[m + 1] = ((2 * m + 1 + alpha - x) * out[m] - (m + alpha) * out[m - 1]) / (m + 1)
    return out


def _lanczos_log_gamma(x: float) -> float:
    # valid for x >= 0.5
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ParameterError("DOMAIN_ERROR", f"log_gamma requires finite x > 0, got {x}")
    if x == 1.0 or x == 2.0:
        return 0.0
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - _lanczos_log_gamma(1.0 - x)
    return _lanczos_log_gamma(x)


def _erf_series(x: float) -> float:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_m 2^m x^(2m+1) / (1*3*...*(2m+1)); all terms positive
    x2 = x * x
    term = x
    total = x
    m = 0
    while abs(term) > 1e-17 * abs(total):
        m += 1
        term *= 2.0 * x2 / (2 * m + 1)
        total += term
    return _TWO_OVER_SQRT_PI * math.exp(-x2) * total


def _erfc_continued_fraction(x: float) -> float:
    # x > 0; modified Lentz on erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    for j in range(1, 500):
        a = 0.5 * j
        d = x + a * d
        d = tiny if d == 0.0 else d
        c = x + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x * x) / (math.sqrt(math.pi) * f)


_ERF_SWITCH = 2.5


def erfc(x: float) -> float:
    """Complementary error function 1 - erf(x), accurate in the far tail."""
    x = float(x)
    if math.isnan(x):
        return math.nan
    if x < _ERF_SWITCH:
        return 1.0 - erf(x)
    return _erfc_continued_fraction(x)


def erf(x: float) -> float:
    """Error function, absolute accuracy ~1e-15 on the real line."""
    x = float(x)
    if math.isnan(x):
        return math.nan
    ax = abs(x)
    if ax < _ERF_SWITCH:
        val = _erf_series(ax)
    elif ax > 27.0:
        val = 1.0
    else:
        val = 1.0 - _erfc_continued_fraction(ax)
    return math.copysign(val, x)


def kummer_m(a: float, b: float, x: float) -> float:
    """Confluent hypergeometric M(a, b, x) by its power series.

    The sum stops once three consecutive terms fall below 1e-16 of the
    partial sum, or when the series terminates (a a non-positive integer).
    """
    if b <= 0 and float(b).is_integer():
        raise ParameterError("KUMMER_PARAMETER", f"M(a, b, x) undefined for b = {b}")
    term = 1.0
    total = 1.0
    quiet = 0
    for j in range(_SERIES_MAX_TERMS):
        term *= (a + j) / (b + j) * x / (j + 1)
        total += term
        if not math.isfinite(total):
            raise NumericalError("OVERFLOW", f"M({a}, {b}, {x}) overflowed after {j + 1} terms")
        if term == 0.0:
            return total
        if abs(term) < _SERIES_RTOL * abs(total):
            quiet += 1
            if quiet >= _SERIES_PATIENCE:
                return total
        else:
            quiet = 0
    raise NumericalError(
        "SERIES_NONCONVERGENCE",
        f"M({a}, {b}, {x}) not converged after {_SERIES_MAX_TERMS} terms",
    )


def whittaker_m(kappa: float, mu: float, x: float) -> float:
    """Whittaker M_{kappa,mu}(x) = exp(-x/2) x^(mu+1/2) M(mu - kappa + 1/2, 1 + 2 mu, x)."""
    if not x > 0.0:
        raise ParameterError("DOMAIN_ERROR", f"whittaker_m requires x > 0, got {x}")
    b = 1.0 + 2.0 * mu
    if b <= 0 and b.is_integer():
        raise ParameterError("WHITTAKER_PARAMETER", f"1 + 2*mu = {b} is a non-positive integer")
    m = kummer_m(mu - kappa + 0.5, b, x)
    try:
        prefactor = math.exp(-0.5 * x + (mu + 0.5) * math.log(x))
    except OverflowError:
        raise NumericalError("OVERFLOW", f"M_({kappa},{mu})({x}) prefactor overflowed") from None
    val = prefactor * m
    if not math.isfinite(val):
        raise NumericalError("OVERFLOW", f"M_({kappa},{mu})({x}) is not representable")
    return val
