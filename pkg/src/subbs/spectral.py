"""Laguerre eigenfunction expansion of the gamma-payoff price.

With u = u(S) and alpha_L = 1/(k-2) the price is

    V(t, S) = sum_n c_n L_n^(alpha_L)(u) exp(-r (n (k-2) + 1) (T - t)),

where c_n is the weighted-L2 projection of the payoff onto L_n,

    c_n = n! / Gamma(n + alpha_L + 1) * int_0^inf payoff(S(u)) L_n(u) u^alpha_L e^{-u} du.

Coefficients are stored without the maturity discount; evaluation applies
one combined factor per mode.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .model import GammaPayoff, PowerVarianceModel, decay_rate, payoff_at_u, payoff_value, u_of_s
from .quadrature import GaussLaguerreRule, adaptive_integrate_s, build_composite_rule, refine_rule
from .specfun import laguerre, laguerre_table, log_gamma

__all__ = [
    "SpectralSolution",
    "PriceSurface",
    "TailReport",
    "project_coefficients",
    "coefficient_by_s_integral",
    "evaluate",
    "price_surface",
    "tail_report",
    "reconstruction_error",
    "default_rule",
    "MAX_TERMS",
    "DEFAULT_TERMS",
]

log = logging.getLogger(__name__)

DEFAULT_TERMS = 64
MAX_TERMS = 256
SELF_CHECK_RTOL = 1e-9
TAIL_THRESHOLD = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    model: PowerVarianceModel
    payoff: GammaPayoff
    T: float
    raw_coeffs: np.ndarray
    tail_ratio: float = 0.0
    rule_method: str = "composite"
    diagnostics: tuple = ()

    @property
    def n_terms(self) -> int:
        return int(self.raw_coeffs.size)

    def discounted_coeffs(self, t: float = 0.0) -> np.ndarray:
        """The coefficients c_n of the time-dependent series, i.e. raw * exp(-rate_n (T - t))."""
        rates = decay_rate(self.model, np.arange(self.n_terms))
        return self.raw_coeffs * np.exp(-rates * (self.T - t))


@dataclass(frozen=True, eq=False)
class PriceSurface:
    """Prices on a rectangular (t, S) grid; ``values[i, j]`` is V(t_grid[i], s_grid[j])."""

    t_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray
    method_tag: str
    diagnostics: tuple = ()
    stderr: np.ndarray | None = None

    def __post_init__(self):
        if self.values.shape != (self.t_grid.size, self.s_grid.size):
            raise ParameterError(
                "SURFACE_SHAPE",
                f"values shape {self.values.shape} does not match grids ({self.t_grid.size}, {self.s_grid.size})",
            )

    def row(self, t: float) -> np.ndarray:
        idx = np.flatnonzero(np.isclose(self.t_grid, t, rtol=0.0, atol=1e-12))
        if idx.size == 0:
            raise ParameterError("T_NOT_ON_GRID", f"t={t} is not a grid time")
        return self.values[idx[0]]

    def at(self, t: float, S: float) -> float:
        """Value at grid time ``t``, linearly interpolated in S."""
        row = self.row(t)
        if not self.s_grid[0] <= S <= self.s_grid[-1]:
            raise ParameterError("S_OFF_GRID", f"S={S} outside [{self.s_grid[0]}, {self.s_grid[-1]}]")
        return float(np.interp(S, self.s_grid, row))

    def rows(self):
        for i, t in enumerate(self.t_grid):
            for j, s in enumerate(self.s_grid):
                yield float(t), float(s), float(self.values[i, j])


@dataclass(frozen=True)
class TailReport:
    magnitudes: np.ndarray
    tail_ratios: np.ndarray
    suggested_terms: int | None
    threshold: float = TAIL_THRESHOLD


@functools.lru_cache(maxsize=32)
def default_rule(alpha: float, n_terms: int) -> GaussLaguerreRule:
    """Composite rule resolving products of degree 2N-2 and payoffs piled up near u = 0."""
    return build_composite_rule(alpha, 2 * n_terms - 2)


def _norm_factors(alpha: float, n_terms: int) -> np.ndarray:
    # n! / Gamma(n + alpha + 1)
    return np.array([math.exp(log_gamma(n + 1.0) - log_gamma(n + alpha + 1.0)) for n in range(n_terms)])


def _project(model, payoff, n_terms, rule):
    g = payoff_at_u(model, payoff, rule.nodes)
    wg = rule.weights * g
    table = laguerre_table(n_terms - 1, rule.alpha, rule.nodes)
    with np.errstate(over="ignore", invalid="ignore"):
        raw = (table @ wg) * _norm_factors(rule.alpha, n_terms)
    return raw


def project_coefficients(
    model: PowerVarianceModel,
    payoff: GammaPayoff,
    T: float,
    n_terms: int = DEFAULT_TERMS,
    rule: GaussLaguerreRule | None = None,
    *,
    self_check: bool = True,
) -> SpectralSolution:
    """Project the payoff onto L_0 .. L_{N-1} of order 1/(k-2).

    ``rule`` defaults to :func:`default_rule`. A Gauss-Laguerre rule needs at
    least 2N nodes. With ``self_check`` the projection is repeated on
    :func:`~subbs.quadrature.refine_rule` and a disagreement above 1e-9
    (relative to the largest coefficient) is logged and recorded in
    ``diagnostics``.
    """
    T = float(T)
    if not math.isfinite(T):
        raise ParameterError("NONFINITE_PARAMETER", f"T must be finite, got {T}")
    if int(n_terms) != n_terms or not 1 <= n_terms <= MAX_TERMS:
        raise ParameterError("TERMS_OUT_OF_RANGE", f"n_terms must be an integer in [1, {MAX_TERMS}], got {n_terms}")
    n_terms = int(n_terms)
    alpha = model.laguerre_order
    if rule is None:
        rule = default_rule(alpha, n_terms)
    if not math.isclose(rule.alpha, alpha, rel_tol=1e-12, abs_tol=0.0):
        raise ParameterError("RULE_ORDER_MISMATCH", f"rule order {rule.alpha} != 1/(k-2) = {alpha}")
    if rule.method == "golub-welsch" and rule.n_nodes < 2 * n_terms:
        raise ParameterError(
            "NODE_SHORTAGE", f"{rule.n_nodes}-node Gauss rule cannot project {n_terms} terms (needs >= {2 * n_terms})"
        )
    if rule.method != "golub-welsch" and rule.exact_degree < 2 * n_terms - 2:
        raise ParameterError(
            "NODE_SHORTAGE", f"rule resolves degree {rule.exact_degree}, projection needs {2 * n_terms - 2}"
        )

    raw = _project(model, payoff, n_terms, rule)
    bad = np.flatnonzero(~np.isfinite(raw))
    if bad.size:
        raise NumericalError("NONFINITE_COEFFICIENT", f"coefficient of mode {int(bad[0])} is {raw[bad[0]]}")

    diagnostics = []
    u_peak = u_of_s(model, payoff.peak)
    if not rule.nodes[0] <= u_peak <= rule.nodes[-1]:
        msg = (
            f"payoff peak at S={payoff.peak:.6g} maps to u={u_peak:.3e}, outside the quadrature "
            f"support [{rule.nodes[0]:.3e}, {rule.nodes[-1]:.3e}]"
        )
        log.warning(msg)
        diagnostics.append(("PAYOFF_OUTSIDE_NODES", msg))
    if self_check:
        finer = _project(model, payoff, n_terms, refine_rule(rule))
        scale = float(np.max(np.abs(raw))) or 1.0
        drift = float(np.max(np.abs(finer - raw))) / scale
        if not drift <= SELF_CHECK_RTOL:
            msg = (
                f"projection changes by {drift:.3e} (relative) under quadrature refinement; "
                f"the {rule.method} rule with {rule.n_nodes} nodes does not resolve this payoff"
            )
            log.warning(msg)
            diagnostics.append(("QUADRATURE_UNRESOLVED", msg))

    peak = float(np.max(np.abs(raw)))
    tail = float(abs(raw[-1]) / peak) if peak > 0.0 else 0.0
    raw = np.array(raw)
    raw.setflags(write=False)
    return SpectralSolution(
        model=model,
        payoff=payoff,
        T=T,
        raw_coeffs=raw,
        tail_ratio=tail,
        rule_method=rule.method,
        diagnostics=tuple(diagnostics),
    )


def coefficient_by_s_integral(
    model: PowerVarianceModel, payoff: GammaPayoff, m: int, rel_tol: float = 1e-11
) -> float:
    """c_m from an adaptive integral in S, without passing through u-space quadrature.

    Writing the weighted inner product in S gives

        c_m = m! / (Gamma(m + alpha + 1) K) * int_0^inf payoff(S) L_m(u) u^(k/(k-2)) e^{-u} dS

    with u = u(S) and K = c^alpha / (k - 2), c the :attr:`u_scale`.
    """
    if int(m) != m or m < 0:
        raise ParameterError("NEGATIVE_MODE", f"mode index must be a non-negative integer, got {m}")
    alpha = model.laguerre_order
    power = model.k / (model.k - 2.0)
    log_K = alpha * math.log(model.u_scale) - math.log(model.k - 2.0)

    def integrand(S):
        S = np.asarray(S, dtype=float)
        out = np.zeros_like(S)
        pos = S > 0.0
        u = u_of_s(model, S[pos])
        with np.errstate(under="ignore", over="ignore"):
            w = np.exp(power * np.log(u) - u - log_K)
        w = np.where(np.isfinite(w), w, 0.0)
        out[pos] = payoff_value(payoff, S[pos]) * laguerre(int(m), alpha, u) * w
        return out

    integral = adaptive_integrate_s(integrand, 0.0, math.inf, rel_tol, abs_tol=1e-300)
    return math.exp(log_gamma(m + 1.0) - log_gamma(m + alpha + 1.0)) * integral


def _check_time(sol: SpectralSolution, t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise ParameterError("NONFINITE_PARAMETER", f"t must be finite, got {t}")
    if t > sol.T:
        raise ParameterError("T_AFTER_MATURITY", f"t={t} is after maturity T={sol.T}")
    return t


def evaluate(sol: SpectralSolution, t: float, S):
    """V(t, S) from the truncated series; ``S`` may be an array."""
    t = _check_time(sol, t)
    u = np.asarray(u_of_s(sol.model, S), dtype=float)
    n = sol.n_terms
    alpha = sol.model.laguerre_order
    if np.any(u > 4.0 * n + 2.0 * alpha + 2.0):
        log.debug("some S map beyond the oscillatory range of L_%d; series values there are unreliable", n - 1)
    weights = sol.raw_coeffs * np.exp(-decay_rate(sol.model, np.arange(n)) * (sol.T - t))
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.tensordot(weights, laguerre_table(n - 1, alpha, u), axes=1)
    if not np.all(np.isfinite(out)):
        j = int(np.argmax(~np.isfinite(np.atleast_1d(out))))
        raise NumericalError("NONFINITE_PRICE", f"series overflowed at S index {j} (u = {np.atleast_1d(u)[j]:.3e})")
    return out if out.ndim else float(out)


def price_surface(sol: SpectralSolution, t_grid, s_grid) -> PriceSurface:
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if t_grid.ndim != 1 or s_grid.ndim != 1 or t_grid.size == 0 or s_grid.size == 0:
        raise ParameterError("INVALID_GRID", "t_grid and s_grid must be non-empty 1-d sequences")
    for j, s in enumerate(s_grid):
        if not (s > 0.0 and math.isfinite(s)):
            raise ParameterError("DOMAIN_ERROR", f"s_grid[{j}] = {s} must be finite and > 0")
    values = np.empty((t_grid.size, s_grid.size))
    for i, t in enumerate(t_grid):
        try:
            values[i] = evaluate(sol, t, s_grid)
        except ParameterError as exc:
            raise ParameterError(exc.code, f"t_grid[{i}]: {exc.message}") from exc
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        i, j = bad[0]
        raise NumericalError("NONFINITE_PRICE", f"non-finite value at t_grid[{i}], s_grid[{j}]")
    return PriceSurface(t_grid=t_grid, s_grid=s_grid, values=values, method_tag="spectral",
                        diagnostics=sol.diagnostics)


def tail_report(sol: SpectralSolution, threshold: float = TAIL_THRESHOLD) -> TailReport:
    """Per-mode size of |c_n| * max_u e^{-u/2} |L_n(u)| and the smallest adequate truncation.

    For alpha >= 0 the bound max_u e^{-u/2}|L_n^(alpha)(u)| = binom(n + alpha, n)
    is used. ``tail_ratios[j]`` is the share of the summed magnitudes carried
    by modes j+1 .. N-1, so ``suggested_terms`` is the smallest N' whose
    discarded modes stay below ``threshold``; ``None`` means the computed
    modes never get there.
    """
    alpha = sol.model.laguerre_order
    n = np.arange(sol.n_terms)
    binom = np.exp([log_gamma(m + alpha + 1.0) - log_gamma(m + 1.0) - log_gamma(alpha + 1.0) for m in n])
    mags = np.abs(sol.raw_coeffs) * binom
    total = float(np.sum(mags))
    # suffix sums over modes N' .. N-1 for N' = 1 .. N-1
    suffix = np.cumsum(mags[::-1])[::-1][1:]
    ratios = suffix / total if total > 0.0 else np.zeros_like(suffix)
    hits = np.flatnonzero(ratios < threshold)
    if total == 0.0:
        suggested = 1
    elif hits.size:
        suggested = int(hits[0]) + 1
    else:
        suggested = None
    return TailReport(magnitudes=mags, tail_ratios=ratios, suggested_terms=suggested, threshold=threshold)


def reconstruction_error(sol: SpectralSolution, rule: GaussLaguerreRule | None = None) -> float:
    """Relative weighted-L2 distance between the series at t = T and the payoff.

    The norm is ||g||^2 = int g(S(u))^2 u^alpha e^{-u} du, evaluated on the
    mapped quadrature nodes where the Laguerre basis is orthogonal.
    """
    alpha = sol.model.laguerre_order
    if rule is None:
        rule = default_rule(alpha, max(sol.n_terms, DEFAULT_TERMS))
    g = payoff_at_u(sol.model, sol.payoff, rule.nodes)
    series = np.tensordot(sol.raw_coeffs, laguerre_table(sol.n_terms - 1, alpha, rule.nodes), axes=1)
    root_w = np.sqrt(rule.weights)
    num = np.sum((root_w * (series - g)) ** 2)
    den = np.sum((root_w * g) ** 2)
    return float(math.sqrt(num / den))
