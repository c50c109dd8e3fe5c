"""Quadrature for the Laguerre weight u^alpha e^{-u} on (0, inf), plus an
adaptive Gauss-Kronrod rule in the original S variable used as an oracle.

Two rules are offered for the weighted integral:

* :func:`build_rule` - classical Gauss-Laguerre nodes/weights from the
  Jacobi matrix (Golub-Welsch). Exact for polynomials of degree 2n-1.
* :func:`build_composite_rule` - panels of Gauss-Legendre nodes, geometric
  in u below ``u_split`` and uniform above. Not a Gauss rule in the strict
  sense, but resolves integrands that vary on scales far below the
  smallest Gauss-Laguerre node (payoffs concentrated near u = 0).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import NumericalError, ParameterError
from .specfun import log_gamma

__all__ = [
    "GaussLaguerreRule",
    "build_rule",
    "build_composite_rule",
    "refine_rule",
    "integrate",
    "adaptive_integrate_s",
    "MAX_GAUSS_NODES",
]

MAX_GAUSS_NODES = 512


@dataclass(frozen=True, eq=False)
class GaussLaguerreRule:
    """Nodes and weights with sum(w * f(x)) ~ int_0^inf f(u) u^alpha e^{-u} du.

    ``exact_degree`` is the polynomial degree the rule integrates to
    machine precision (exactly, for ``method == "golub-welsch"``).
    """

    alpha: float
    nodes: np.ndarray
    weights: np.ndarray
    method: str = "golub-welsch"
    exact_degree: int = 0
    params: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    def __repr__(self):
        return (
            f"GaussLaguerreRule(alpha={self.alpha!r}, n_nodes={self.n_nodes}, "
            f"method={self.method!r}, exact_degree={self.exact_degree})"
        )


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > -1.0) or not math.isfinite(alpha):
        raise ParameterError("ALPHA_OUT_OF_RANGE", f"Laguerre order must be > -1, got {alpha}")
    return alpha


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _first_component_squared(x: np.ndarray, diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """Squared first component of the normalised Jacobi eigenvector at each eigenvalue x.

    The eigenvector for x is (q_0(x), ..., q_{n-1}(x)) with q_j the orthonormal
    polynomials of the recurrence, so the squared first component is
    1 / sum_j q_j(x)^2. Summing positive terms keeps the tiny weights of the
    outer nodes accurate to relative precision, where the eigensolver's
    vectors are only accurate in absolute terms and underflow to 0.
    """
    q_prev = np.zeros_like(x)
    q = np.ones_like(x)
    total = np.ones_like(x)
    log_scale = np.zeros_like(x)  # the true q_j and total are exp(log_scale) and exp(2 log_scale) times these
    for j in range(diag.size - 1):
        b_prev = off[j - 1] if j > 0 else 0.0
        q_next = ((x - diag[j]) * q - b_prev * q_prev) / off[j]
        q_prev, q = q, q_next
        total += q * q
        big = np.abs(q) > 1e100
        if np.any(big):
            f = np.where(big, 1e-100, 1.0)
            q, q_prev, total = q * f, q_prev * f, total * f * f
            log_scale -= np.log(f)
    return np.exp(-np.log(total) - 2.0 * log_scale)


def build_rule(alpha: float, n: int) -> GaussLaguerreRule:
    """Generalized Gauss-Laguerre rule of ``n`` nodes via the Jacobi matrix.

    Diagonal 2i + alpha + 1, off-diagonal sqrt(i (i + alpha)); nodes are the
    eigenvalues and the weights Gamma(alpha + 1) times the squared first
    eigenvector components.
    """
    alpha = _check_alpha(alpha)
    if int(n) != n or not 1 <= n <= MAX_GAUSS_NODES:
        raise ParameterError("NODE_COUNT", f"n must be an integer in [1, {MAX_GAUSS_NODES}], got {n}")
    n = int(n)
    mass = math.exp(log_gamma(alpha + 1.0))
    if n == 1:
        nodes = np.array([alpha + 1.0])
        weights = np.array([mass])
    else:
        i = np.arange(n, dtype=float)
        diag = 2.0 * i + alpha + 1.0
        j = np.arange(1, n, dtype=float)
        off = np.sqrt(j * (j + alpha))
        try:
            nodes = eigh_tridiagonal(diag, off, eigvals_only=True)
        except LinAlgError as exc:
            raise NumericalError(
                "EIGENSOLVER_NONCONVERGENCE", f"Jacobi eigensolve failed for alpha={alpha}, n={n}: {exc}"
            ) from exc
        weights = mass * _first_component_squared(nodes, diag, off)
    if np.any(np.diff(nodes) <= 0.0) or nodes[0] <= 0.0:
        raise NumericalError("NODE_ORDER", f"nodes not strictly increasing and positive for alpha={alpha}, n={n}")
    bound = 4.0 * n + 2.0 * alpha + 4.0
    if nodes[-1] >= bound:
        raise NumericalError("NODE_BOUND", f"largest node {nodes[-1]} exceeds {bound}")
    if np.any(weights < 0.0):
        raise NumericalError("NEGATIVE_WEIGHT", f"negative weight for alpha={alpha}, n={n}")
    return GaussLaguerreRule(
        alpha=alpha,
        nodes=_frozen(nodes),
        weights=_frozen(weights),
        method="golub-welsch",
        exact_degree=2 * n - 1,
        params={"n": n},
    )


def build_composite_rule(
    alpha: float,
    degree: int,
    *,
    u_min: float = 1e-15,
    u_split: float = 1.0,
    head_points: int = 16,
    body_points: int = 24,
    body_width: float = 1.0,
    margin: float = 40.0,
) -> GaussLaguerreRule:
    """Composite rule for the weight u^alpha e^{-u}, resolving small-u structure.

    Below ``u_split`` the panels are [u, 2u] in log u (down to ``u_min``);
    above it they have width ``body_width`` up to a cutoff chosen so the
    weighted tail of any polynomial of ``degree`` is below double precision.
    """
    alpha = _check_alpha(alpha)
    if degree < 0:
        raise ParameterError("NODE_COUNT", f"degree must be >= 0, got {degree}")
    u_max = 2.0 * degree + 2.0 * alpha + 12.0 * math.sqrt(degree + alpha + 1.0) + margin
    u_max = max(u_max, u_split + body_width)

    x_h, w_h = leggauss(head_points)
    s_lo, s_hi = math.log(u_min), math.log(u_split)
    n_head = max(1, math.ceil((s_hi - s_lo) / math.log(2.0)))
    edges = np.linspace(s_lo, s_hi, n_head + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    s = (mid + half * x_h).ravel()
    head_nodes = np.exp(s)
    # du = u ds, folded into the weight together with u^alpha e^{-u}
    head_w = (half * w_h).ravel() * np.exp((alpha + 1.0) * s - head_nodes)

    x_b, w_b = leggauss(body_points)
    n_body = math.ceil((u_max - u_split) / body_width)
    edges = u_split + body_width * np.arange(n_body + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    body_nodes = (mid + half * x_b).ravel()
    body_w = (half * w_b).ravel() * np.exp(alpha * np.log(body_nodes) - body_nodes)

    nodes = np.concatenate([head_nodes, body_nodes])
    weights = np.concatenate([head_w, body_w])
    return GaussLaguerreRule(
        alpha=alpha,
        nodes=_frozen(nodes),
        weights=_frozen(weights),
        method="composite",
        exact_degree=int(degree),
        params=dict(
            degree=int(degree),
            u_min=u_min,
            u_split=u_split,
            head_points=head_points,
            body_points=body_points,
            body_width=body_width,
            margin=margin,
        ),
    )


def refine_rule(rule: GaussLaguerreRule) -> GaussLaguerreRule:
    """A more accurate companion rule, used for convergence self-checks.

    Gauss rules double their node count (or halve it at the 512 cap);
    composite rules halve every panel and extend the cutoff.
    """
    if rule.method == "golub-welsch":
        n = rule.n_nodes
        m = 2 * n if 2 * n <= MAX_GAUSS_NODES else max(1, n // 2)
        return build_rule(rule.alpha, m)
    p = dict(rule.params)
    p["u_min"] = p["u_min"] * 1e-3
    p["body_width"] = p["body_width"] / 2.0
    p["margin"] = p["margin"] + 20.0
    degree = p.pop("degree")
    return build_composite_rule(rule.alpha, degree, **p)


def integrate(rule: GaussLaguerreRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """sum_i w_i f(x_i). ``f`` is called once on the full node array."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise NumericalError(
            "INTEGRAND_FAILURE", f"integrand is {vals[i]} at node {i} (u={rule.nodes[i]!r})"
        )
    return float(np.dot(rule.weights, vals))


# Gauss-Kronrod 7/15 pair on [-1, 1]; the Gauss nodes are the odd-indexed Kronrod nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_K15_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_K15_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G7_W = np.zeros(15)
# Gauss nodes sit at Kronrod indices 1, 3, 5, 7 (and mirrors)
_G7_W[[1, 3, 5]] = _WG[:3]
_G7_W[7] = _WG[3]
_G7_W[[9, 11, 13]] = _WG[2::-1]


def _gk15(g, a: float, b: float):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = np.asarray(g(c + h * _K15_X), dtype=float)
    if not np.all(np.isfinite(y)):
        raise NumericalError("INTEGRAND_FAILURE", f"non-finite integrand on [{a}, {b}]")
    k = h * float(np.dot(_K15_W, y))
    gs = h * float(np.dot(_G7_W, y))
    return k, abs(k - gs)


def adaptive_integrate_s(
    f: Callable[[np.ndarray], np.ndarray],
    s_lo: float,
    s_hi: float,
    rel_tol: float = 1e-10,
    *,
    abs_tol: float = 0.0,
    max_subdivisions: int = 5000,
) -> float:
    """Globally adaptive G7/K15 integral of ``f`` over [s_lo, s_hi].

    An infinite ``s_hi`` is mapped through S = s_lo + v/(1-v), v in [0, 1).
    ``f`` must accept a numpy array. The interval with the largest
    |K15 - G7| estimate is bisected until the summed estimate meets
    max(abs_tol, rel_tol * |integral|).
    """
    if rel_tol < 1e-12:
        raise ParameterError("TOLERANCE", f"rel_tol must be >= 1e-12, got {rel_tol}")
    if s_lo < 0.0 or not math.isfinite(s_lo):
        raise ParameterError("DOMAIN_ERROR", f"s_lo must be finite and >= 0, got {s_lo}")
    if s_hi <= s_lo:
        raise ParameterError("DOMAIN_ERROR", f"need s_hi > s_lo, got [{s_lo}, {s_hi}]")

    if math.isinf(s_hi):
        def g(v):
            one_minus = 1.0 - v
            return f(s_lo + v / one_minus) / (one_minus * one_minus)
        a, b = 0.0, 1.0
    else:
        g = f
        a, b = float(s_lo), float(s_hi)

    val, err = _gk15(g, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    for _ in range(max_subdivisions):
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            return math.fsum(item[3] for item in heap)
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(g, lo, mid)
        v2, e2 = _gk15(g, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # re-sum to shed accumulated cancellation before the final verdict
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    if total_err <= max(abs_tol, rel_tol * abs(total)):
        return total
    raise NumericalError(
        "ADAPTIVE_NONCONVERGENCE",
        f"no convergence after {max_subdivisions} subdivisions; error estimate {total_err:.3e} "
        f"vs target {max(abs_tol, rel_tol * abs(total)):.3e}",
    )
