"""Crank-Nicolson solver for V_t + r S V_S + 1/2 sigma^2 S^k V_SS - r V = 0.

Marches backward from the terminal payoff on a uniform grid over [0, s_max].
At S = 0 the equation degenerates to V_t = r V. At s_max two far-field
conditions are available:

* ``"asymptotic"`` (default): for k > 2 the point S = inf is an entrance
  boundary, V approaches a finite limit like V_inf + C S^(2-k), so
  V_SS ~ -(k-1) V_S / S. The boundary row is the PDE with that closure and a
  second-order one-sided V_S.
* ``"zero"``: Dirichlet V = 0. Only correct when s_max is far enough out
  that V itself has died away, which for k > 2 typically it has not.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from ..errors import NumericalError, ParameterError
from ..model import GammaPayoff, PowerVarianceModel, payoff_value
from ..spectral import PriceSurface

log = logging.getLogger(__name__)

FAR_FIELDS = ("asymptotic", "zero")


@dataclass(frozen=True)
class FdConfig:
    """``n_space`` and ``n_time`` count intervals; rows are kept every ``time_stride`` steps."""

    s_max: float = 300.0
    n_space: int = 3000
    n_time: int = 2000
    far_field: str = "asymptotic"
    time_stride: int = 1

    def __post_init__(self):
        if not (self.s_max > 0.0 and math.isfinite(self.s_max)):
            raise ParameterError("FD_GRID", f"s_max must be finite and > 0, got {self.s_max}")
        if int(self.n_space) != self.n_space or self.n_space < 3:
            raise ParameterError("FD_GRID", f"n_space must be an integer >= 3, got {self.n_space}")
        if int(self.n_time) != self.n_time or self.n_time < 1:
            raise ParameterError("FD_GRID", f"n_time must be an integer >= 1, got {self.n_time}")
        if self.far_field not in FAR_FIELDS:
            raise ParameterError("FD_GRID", f"far_field must be one of {FAR_FIELDS}, got {self.far_field!r}")
        if int(self.time_stride) != self.time_stride or self.time_stride < 1:
            raise ParameterError("FD_GRID", f"time_stride must be an integer >= 1, got {self.time_stride}")


def _terminal(payoff, S: np.ndarray) -> np.ndarray:
    if isinstance(payoff, GammaPayoff):
        return payoff_value(payoff, S)
    vals = np.asarray(payoff(S), dtype=float)
    return np.broadcast_to(vals, S.shape).copy()


def crank_nicolson_solve(
    model: PowerVarianceModel,
    payoff: GammaPayoff | Callable[[np.ndarray], np.ndarray],
    T: float,
    cfg: FdConfig = FdConfig(),
) -> PriceSurface:
    """Price surface on the FD grid; ``payoff`` may also be any callable of S."""
    if not (math.isfinite(T) and T > 0.0):
        raise ParameterError("NONPOSITIVE_T", f"T must be finite and > 0, got {T}")
    k, r, sig = model.k, model.r, model.sigma
    M, nt = int(cfg.n_space), int(cfg.n_time)
    S = np.linspace(0.0, cfg.s_max, M + 1)
    h = cfg.s_max / M
    dt = T / nt

    V = _terminal(payoff, S)
    diagnostics = []
    vmax = float(np.max(np.abs(V)))
    if vmax > 0.0 and abs(V[-1]) > 1e-12 * vmax:
        msg = f"payoff at s_max={cfg.s_max} is {abs(V[-1]) / vmax:.2e} of its maximum; grid may be too small"
        log.info(msg)
        diagnostics.append(("GRID_TOO_SMALL", msg))

    # L V_j = lo_j V_{j-1} + di_j V_j + up_j V_{j+1}
    diff = 0.5 * sig * sig * S ** k / (h * h)
    conv = r * S / (2.0 * h)
    lo = diff - conv
    di = -2.0 * diff - r
    up = diff + conv
    lo[0], di[0], up[0] = 0.0, -r, 0.0
    lo2 = 0.0  # coefficient of V_{M-2} in the boundary row
    if cfg.far_field == "asymptotic":
        e = (r * cfg.s_max - 0.5 * sig * sig * (k - 1.0) * cfg.s_max ** (k - 1.0)) / (2.0 * h)
        lo2, lo[-1], di[-1], up[-1] = e, -4.0 * e, 3.0 * e - r, 0.0
    else:
        lo[-1], di[-1], up[-1] = 0.0, 0.0, 0.0

    # implicit matrix A = I - dt/2 L, tridiagonal after folding V_{M-2} out of the last row
    a_lo = -0.5 * dt * lo[1:]
    a_di = 1.0 - 0.5 * dt * di
    a_up = -0.5 * dt * up[:-1]
    fold = 0.0
    if cfg.far_field == "asymptotic":
        fold = (-0.5 * dt * lo2) / a_lo[-2]
        a_lo[-1] -= fold * a_di[-2]
        a_di[-1] -= fold * a_up[-1]
    else:
        a_lo[-1], a_di[-1] = 0.0, 1.0

    off = np.zeros(M + 1)
    off[1:] += np.abs(a_lo)
    off[:-1] += np.abs(a_up)
    weak = int(np.count_nonzero(np.abs(a_di) < off))
    if weak:
        msg = f"{weak} rows of the implicit matrix are not diagonally dominant"
        log.warning(msg)
        diagnostics.append(("NOT_DIAGONALLY_DOMINANT", msg))

    dl, d, du, du2, ipiv, info = lapack.dgttrf(a_lo, a_di, a_up)
    if info != 0:
        raise NumericalError("SINGULAR_SYSTEM", f"tridiagonal factorisation failed (info={info})")

    kept_t = [T]
    kept_v = [V.copy()]
    for n in range(1, nt + 1):
        LV = di * V
        LV[1:] += lo[1:] * V[:-1]
        LV[:-1] += up[:-1] * V[1:]
        rhs = V + 0.5 * dt * LV
        if cfg.far_field == "asymptotic":
            rhs[-1] += 0.5 * dt * lo2 * V[-3]
            rhs[-1] -= fold * rhs[-2]
        else:
            rhs[-1] = 0.0
        V, info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
        if info != 0:
            raise NumericalError("SINGULAR_SYSTEM", f"tridiagonal solve failed at step {n} (info={info})")
        if n % cfg.time_stride == 0 or n == nt:
            kept_t.append(T - n * dt if n < nt else 0.0)
            kept_v.append(V.copy())

    if not np.all(np.isfinite(V)):
        raise NumericalError("NONFINITE_PRICE", "Crank-Nicolson produced non-finite values")
    t_grid = np.array(kept_t[::-1])
    values = np.array(kept_v[::-1])
    return PriceSurface(t_grid=t_grid, s_grid=S, values=values, method_tag="crank_nicolson",
                        diagnostics=tuple(diagnostics))
