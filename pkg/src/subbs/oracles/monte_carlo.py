"""Euler-Maruyama Monte Carlo for dS = r S dt + sigma S^(k/2) dW.

Random numbers are counter-based so that results do not depend on how the
paths are split across workers:

* paths are grouped in fixed blocks of ``BLOCK_PATHS``; block b uses a
  Philox4x64-10 stream keyed by ``seed + b * 2**64`` with counter 0;
* within a block, step j consumes the raw 64-bit words
  j*n .. j*n + n - 1 (n = paths in the block), one per path;
* a word x becomes a uniform ((x >> 11) + 0.5) / 2**53 in (0, 1) and a
  normal through the inverse normal CDF.

Per-block payoff arrays are concatenated in block order before reduction.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from ..errors import ParameterError
from ..model import GammaPayoff, PowerVarianceModel, payoff_value

log = logging.getLogger(__name__)

BLOCK_PATHS = 4096
_SEED_LIMIT = 2 ** 64


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 200_000
    n_steps: int = 500
    seed: int = 20240101
    workers: int = 1

    def __post_init__(self):
        for name in ("n_paths", "n_steps", "workers"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParameterError("MC_CONFIG", f"{name} must be a positive integer, got {v}")
        if int(self.seed) != self.seed or not 0 <= self.seed < _SEED_LIMIT:
            raise ParameterError("MC_CONFIG", f"seed must be an integer in [0, 2**64), got {self.seed}")


@dataclass(frozen=True)
class McResult:
    mean: float
    stderr: float
    n_paths: int
    blowups: int

    def __iter__(self):
        # allows ``mean, stderr = monte_carlo_price(...)``
        yield self.mean
        yield self.stderr


def _uniforms(bitgen: np.random.Philox, n: int) -> np.ndarray:
    raw = bitgen.random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def _simulate_block(model, S0, tau, n_steps, seed, block, n):
    bitgen = np.random.Philox(key=seed + block * _SEED_LIMIT)
    dt = tau / n_steps
    sq = math.sqrt(dt)
    half_k = 0.5 * model.k
    S = np.full(n, float(S0))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            z = ndtri(_uniforms(bitgen, n))
            S = S + model.r * S * dt + model.sigma * np.maximum(S, 0.0) ** half_k * sq * z
    blown = ~np.isfinite(S)
    return np.where(blown, 0.0, np.maximum(S, 0.0)), int(np.count_nonzero(blown))


def simulate_terminal(model: PowerVarianceModel, S0: float, tau: float, cfg: McConfig):
    """Terminal states (non-finite paths replaced by 0) and the blow-up count."""
    n_blocks = -(-cfg.n_paths // BLOCK_PATHS)
    sizes = [min(BLOCK_PATHS, cfg.n_paths - b * BLOCK_PATHS) for b in range(n_blocks)]

    def run(b):
        return _simulate_block(model, S0, tau, cfg.n_steps, cfg.seed, b, sizes[b])

    if cfg.workers == 1 or n_blocks == 1:
        parts = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    terminal = np.concatenate([p[0] for p in parts])
    return terminal, sum(p[1] for p in parts)


def monte_carlo_price(
    model: PowerVarianceModel,
    payoff: GammaPayoff,
    t: float,
    S0: float,
    T: float,
    cfg: McConfig = McConfig(),
) -> McResult:
    """Discounted sample mean of the payoff and its standard error."""
    if not (S0 > 0.0 and math.isfinite(S0)):
        raise ParameterError("DOMAIN_ERROR", f"S0 must be finite and > 0, got {S0}")
    if not (math.isfinite(t) and math.isfinite(T)):
        raise ParameterError("NONFINITE_PARAMETER", "t and T must be finite")
    if t > T:
        raise ParameterError("T_AFTER_MATURITY", f"t={t} is after maturity T={T}")
    tau = T - t
    disc = math.exp(-model.r * tau)
    if tau == 0.0:
        return McResult(mean=float(payoff_value(payoff, S0)), stderr=0.0, n_paths=cfg.n_paths, blowups=0)
    terminal, blowups = simulate_terminal(model, S0, tau, cfg)
    vals = payoff_value(payoff, terminal)
    if blowups:
        log.warning("%d of %d paths left the representable range and were counted as payoff 0",
                    blowups, cfg.n_paths)
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return McResult(
        mean=disc * float(np.mean(vals)),
        stderr=disc * std / math.sqrt(vals.size),
        n_paths=cfg.n_paths,
        blowups=blowups,
    )
