"""Command-line front end.

Subcommands: price, coeffs, validate, converge. Settings come from, in
decreasing priority: command-line flags, a ``--config`` file of
``key=value`` lines (keys are the flag names), built-in defaults.

Exit codes: 0 ok, 1 I/O failure, 2 invalid parameters, 3 numerical
failure, 4 validation failure (the report is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import NumericalError, ParameterError, PricerError
from .model import GammaPayoff, PowerVarianceModel, decay_rate
from .oracles.finite_difference import FAR_FIELDS, FdConfig, crank_nicolson_solve
from .oracles.monte_carlo import McConfig, monte_carlo_price
from .quadrature import build_rule
from .spectral import evaluate, project_coefficients, reconstruction_error
from .validation import run_all

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARAMS = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

METHODS = ("spectral", "crank_nicolson", "monte_carlo")
QUADS = ("composite", "gauss")
FORMATS = ("json", "csv")

# CSV column order per command; also the key order of JSON rows
COLUMNS = {
    "price": ("t", "S", "value", "method", "n_terms", "tail_ratio", "stderr"),
    "coeffs": ("n", "raw_coeff", "discounted_coeff", "decay_rate"),
    "validate": ("name", "passed", "measured", "tolerance", "detail"),
    "converge": ("n_terms", "reconstruction_error", "t", "S", "value", "delta_vs_largest", "fd_value",
                 "rel_diff_fd"),
}

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("subbs")


@dataclass
class RunConfig:
    k: float = 3.0
    r: float = 0.05
    sigma: float = 0.2
    A: float = 1.0
    alpha: float = 0.05
    p: float = 2.0
    T: float = 1.0
    t: list = field(default_factory=lambda: [0.0])
    s: list = field(default_factory=lambda: [30.0, 60.0, 90.0])
    terms: int = 64
    terms_list: list = field(default_factory=lambda: [8, 16, 32, 64])
    method: str = "spectral"
    quad: str = "composite"
    quad_nodes: int = 200
    s_max: float = 300.0
    n_space: int = 3000
    n_time: int = 2000
    far_field: str = "asymptotic"
    paths: int = 200_000
    steps: int = 500
    seed: int = 20240101
    workers: int = 1
    format: str = "json"
    output: str | None = None

    def model(self) -> PowerVarianceModel:
        return PowerVarianceModel(self.r, self.sigma, self.k)

    def payoff(self) -> GammaPayoff:
        return GammaPayoff(self.A, self.alpha, self.p)

    def fd(self) -> FdConfig:
        return FdConfig(s_max=self.s_max, n_space=self.n_space, n_time=self.n_time, far_field=self.far_field)

    def mc(self) -> McConfig:
        return McConfig(n_paths=self.paths, n_steps=self.steps, seed=self.seed, workers=self.workers)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d


_FLOAT_KEYS = {"k", "r", "sigma", "A", "alpha", "p", "T", "s_max"}
_INT_KEYS = {"terms", "quad_nodes", "n_space", "n_time", "paths", "steps", "seed", "workers"}
_FLOAT_LIST_KEYS = {"t", "s"}
_INT_LIST_KEYS = {"terms_list"}
_CHOICES = {"method": METHODS, "quad": QUADS, "format": FORMATS, "far_field": FAR_FIELDS}


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParameterError("BAD_VALUE", f"{key} expects an integer, got {text!r}") from None


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParameterError("BAD_VALUE", f"{key} expects a number, got {text!r}") from None


def _coerce(key: str, value):
    """Turn a config-file string (or a parsed flag value) into the field's type."""
    if key in _FLOAT_LIST_KEYS or key in _INT_LIST_KEYS:
        parse = _parse_float if key in _FLOAT_LIST_KEYS else _parse_int
        items = value.split(",") if isinstance(value, str) else value
        out = [parse(key, str(v).strip()) if isinstance(v, str) else v for v in items if str(v).strip()]
        if not out:
            raise ParameterError("EMPTY_GRID", f"{key} needs at least one value")
        return out
    if key in _FLOAT_KEYS:
        return _parse_float(key, value) if isinstance(value, str) else float(value)
    if key in _INT_KEYS:
        return _parse_int(key, value) if isinstance(value, str) else int(value)
    if key in _CHOICES:
        if value not in _CHOICES[key]:
            raise ParameterError("BAD_VALUE", f"{key} must be one of {_CHOICES[key]}, got {value!r}")
        return value
    return value


def read_config_file(path: str) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment, keys may use - or _."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError("CONFIG_SYNTAX", f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in known:
                raise ParameterError("CONFIG_KEY", f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _coerce(key, value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subbs",
        description="Laguerre spectral pricing of the gamma-shaped payoff under dS = r S dt + sigma S^(k/2) dW.",
        epilog=(
            "Precedence: command-line flags override --config file values, which override built-in defaults. "
            "Exit codes: 0 ok, 1 I/O, 2 invalid parameters, 3 numerical failure, 4 validation failure. "
            "Set PRICER_LOG to error|warn|info|debug for diagnostics on stderr."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS  # unset flags stay absent so file values can show through
    g = common.add_argument_group("model and payoff")
    g.add_argument("--k", type=float, default=S, help="elasticity exponent, > 2 (default 3)")
    g.add_argument("--r", type=float, default=S, help="risk-free rate (default 0.05)")
    g.add_argument("--sigma", type=float, default=S, help="volatility scale (default 0.2)")
    g.add_argument("--A", type=float, default=S, help="payoff scale (default 1)")
    g.add_argument("--alpha", type=float, default=S, help="payoff decay rate (default 0.05)")
    g.add_argument("--p", type=float, default=S, help="payoff shape, > -1 (default 2)")
    g.add_argument("--T", type=float, default=S, help="maturity (default 1)")
    g.add_argument("--t", type=float, nargs="+", default=S, help="valuation time(s) (default 0)")
    g.add_argument("--s", type=float, nargs="+", default=S, help="spot value(s) (default 30 60 90)")
    n = common.add_argument_group("numerics")
    n.add_argument("--terms", type=int, default=S, help="series terms N (default 64)")
    n.add_argument("--terms-list", type=int, nargs="+", default=S, dest="terms_list",
                   help="N values for converge (default 8 16 32 64)")
    n.add_argument("--method", choices=METHODS, default=S, help="pricer for price (default spectral)")
    n.add_argument("--quad", choices=QUADS, default=S,
                   help="projection rule: composite (default) or gauss with --quad-nodes")
    n.add_argument("--quad-nodes", type=int, default=S, dest="quad_nodes", help="Gauss nodes (default 200)")
    n.add_argument("--s-max", type=float, default=S, dest="s_max", help="FD grid cap (default 300)")
    n.add_argument("--n-space", type=int, default=S, dest="n_space", help="FD space intervals (default 3000)")
    n.add_argument("--n-time", type=int, default=S, dest="n_time", help="FD time steps (default 2000)")
    n.add_argument("--far-field", choices=FAR_FIELDS, default=S, dest="far_field",
                   help="FD condition at s_max (default asymptotic)")
    n.add_argument("--paths", type=int, default=S, help="MC paths (default 200000)")
    n.add_argument("--steps", type=int, default=S, help="MC time steps (default 500)")
    n.add_argument("--seed", type=int, default=S, help="MC seed (default 20240101)")
    n.add_argument("--workers", type=int, default=S, help="MC worker threads (default 1)")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=FORMATS, default=S, help="json (default) or csv")
    o.add_argument("--output", default=S, help="write here instead of stdout")
    o.add_argument("--config", default=None, help="key=value file with defaults for any flag")

    sub.add_parser("price", parents=[common], help="price at (t, S) points")
    sub.add_parser("coeffs", parents=[common], help="dump projection coefficients")
    sub.add_parser("validate", parents=[common], help="run cross-checks; exit 4 if any fail")
    sub.add_parser("converge", parents=[common], help="truncation study over --terms-list")
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config is not None:
        values.update(read_config_file(ns.config))
    for f in fields(RunConfig):
        if hasattr(ns, f.name):
            values[f.name] = _coerce(f.name, getattr(ns, f.name))
    return RunConfig(**values)


# ---------------------------------------------------------------- serialisation

def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise NumericalError("NONFINITE_OUTPUT", f"cannot serialise {v}")
        text = format(v, ".17g")
        if not any(c in text for c in ".en"):
            text += ".0"
        return text
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=True)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{_json_value(str(key))}: {_json_value(val)}" for key, val in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def to_json(doc: dict) -> str:
    """One key per line at the top level and one row per line; floats at 17 significant digits."""
    parts = []
    for key, val in doc.items():
        if isinstance(val, list) and val and isinstance(val[0], dict):
            body = ",\n".join("    " + _json_value(row) for row in val)
            parts.append(f"  {_json_value(key)}: [\n{body}\n  ]")
        else:
            parts.append(f"  {_json_value(key)}: {_json_value(val)}")
    return "{\n" + ",\n".join(parts) + "\n}\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise NumericalError("NONFINITE_OUTPUT", f"cannot serialise {v}")
        return format(float(v), ".12g")
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row[c]) for c in columns])
    return buf.getvalue()


def render(command: str, cfg: RunConfig, rows: list[dict], extra: dict | None = None) -> str:
    if cfg.format == "csv":
        return to_csv(COLUMNS[command], rows)
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "config_echo": cfg.echo()}
    if extra:
        doc.update(extra)
    if command == "validate":
        doc["report"] = {"passed": all(r["passed"] for r in rows), "checks": rows}
    else:
        doc["rows"] = rows
    return to_json(doc)


# ---------------------------------------------------------------- commands

def _spectral_solution(cfg: RunConfig, n_terms: int):
    model = cfg.model()
    rule = build_rule(model.laguerre_order, cfg.quad_nodes) if cfg.quad == "gauss" else None
    return project_coefficients(model, cfg.payoff(), cfg.T, n_terms, rule)


def _fd_row_index(surface, t: float, T: float) -> int:
    idx = int(np.argmin(np.abs(surface.t_grid - t)))
    if abs(surface.t_grid[idx] - t) > 1e-9 * max(1.0, abs(T)):
        raise ParameterError("FD_TIME_OFF_GRID", f"t={t} is not a multiple of the FD step from T={T}")
    return idx


def _check_points(cfg: RunConfig):
    for t in cfg.t:
        if not math.isfinite(t) or t > cfg.T:
            raise ParameterError("T_AFTER_MATURITY", f"t={t} must be finite and <= T={cfg.T}")
    for s in cfg.s:
        if not (math.isfinite(s) and s > 0.0):
            raise ParameterError("DOMAIN_ERROR", f"S={s} must be finite and > 0")


def cmd_price(cfg: RunConfig) -> tuple[list[dict], dict]:
    model, payoff = cfg.model(), cfg.payoff()
    _check_points(cfg)
    rows = []
    if cfg.method == "spectral":
        sol = _spectral_solution(cfg, cfg.terms)
        for t in cfg.t:
            vals = np.atleast_1d(evaluate(sol, t, np.array(cfg.s)))
            for s, v in zip(cfg.s, vals):
                rows.append(dict(t=t, S=s, value=float(v), method="spectral", n_terms=sol.n_terms,
                                 tail_ratio=sol.tail_ratio, stderr=None))
    elif cfg.method == "crank_nicolson":
        if max(cfg.s) > cfg.s_max:
            raise ParameterError("S_OFF_GRID", f"S={max(cfg.s)} exceeds s_max={cfg.s_max}")
        surf = crank_nicolson_solve(model, payoff, cfg.T, cfg.fd())
        for t in cfg.t:
            row = surf.values[_fd_row_index(surf, t, cfg.T)]
            for s in cfg.s:
                rows.append(dict(t=t, S=s, value=float(np.interp(s, surf.s_grid, row)), method="crank_nicolson",
                                 n_terms=None, tail_ratio=None, stderr=None))
    else:
        mc = cfg.mc()
        for t in cfg.t:
            for s in cfg.s:
                res = monte_carlo_price(model, payoff, t, s, cfg.T, mc)
                rows.append(dict(t=t, S=s, value=res.mean, method="monte_carlo", n_terms=None,
                                 tail_ratio=None, stderr=res.stderr))
    return rows, {}


def cmd_coeffs(cfg: RunConfig) -> tuple[list[dict], dict]:
    sol = _spectral_solution(cfg, cfg.terms)
    n = np.arange(sol.n_terms)
    rates = np.atleast_1d(decay_rate(sol.model, n))
    disc = sol.raw_coeffs * np.exp(-rates * sol.T)
    rows = [dict(n=int(i), raw_coeff=float(c), discounted_coeff=float(d), decay_rate=float(q))
            for i, c, d, q in zip(n, sol.raw_coeffs, disc, rates)]
    return rows, {"tail_ratio": sol.tail_ratio}


def cmd_validate(cfg: RunConfig) -> tuple[list[dict], dict]:
    model, payoff = cfg.model(), cfg.payoff()
    _check_points(cfg)
    checks = run_all(model, payoff, cfg.T, cfg.t[0], cfg.s, cfg.terms, cfg.fd(), cfg.mc())
    return [c.as_dict() for c in checks], {}


def cmd_converge(cfg: RunConfig) -> tuple[list[dict], dict]:
    model, payoff = cfg.model(), cfg.payoff()
    _check_points(cfg)
    ns = sorted(set(cfg.terms_list))
    sols = {n: _spectral_solution(cfg, n) for n in ns}
    errs = {n: reconstruction_error(sols[n]) for n in ns}
    surf = crank_nicolson_solve(model, payoff, cfg.T, cfg.fd()) if max(cfg.s) <= cfg.s_max else None
    rows = []
    for t in cfg.t:
        ref = np.atleast_1d(evaluate(sols[ns[-1]], t, np.array(cfg.s)))
        fd = None
        if surf is not None:
            fd = np.interp(cfg.s, surf.s_grid, surf.values[_fd_row_index(surf, t, cfg.T)])
        for n in ns:
            vals = np.atleast_1d(evaluate(sols[n], t, np.array(cfg.s)))
            for j, s in enumerate(cfg.s):
                fd_v = None if fd is None else float(fd[j])
                rel = None if fd_v in (None, 0.0) else float(abs(vals[j] - fd_v) / abs(fd_v))
                rows.append(dict(n_terms=n, reconstruction_error=errs[n], t=t, S=s, value=float(vals[j]),
                                 delta_vs_largest=float(vals[j] - ref[j]), fd_value=fd_v, rel_diff_fd=rel))
    return rows, {}


COMMANDS = {"price": cmd_price, "coeffs": cmd_coeffs, "validate": cmd_validate, "converge": cmd_converge}


def _setup_logging():
    level_name = os.environ.get("PRICER_LOG", "warn").strip().lower()
    level = LOG_LEVELS.get(level_name, logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("subbs")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False
    if level_name not in LOG_LEVELS:
        root.warning("unknown PRICER_LOG value %r, using warn", level_name)


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        rows, extra = COMMANDS[ns.command](cfg)
        text = render(ns.command, cfg, rows, extra)
    except OSError as exc:
        print(f"error: IO_ERROR: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"error: {exc if isinstance(exc, PricerError) else 'NUMERICAL_FAILURE: ' + str(exc)}",
              file=sys.stderr)
        return EXIT_NUMERIC

    try:
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except OSError as exc:
        print(f"error: IO_ERROR: {exc}", file=sys.stderr)
        return EXIT_IO

    if ns.command == "validate" and not all(r["passed"] for r in rows):
        failed = [r["name"] for r in rows if not r["passed"]]
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
