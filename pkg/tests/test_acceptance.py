"""One test per acceptance criterion.

Each test prints what it measured; ``conftest.py`` adds a PASS/FAIL line per
criterion to the terminal summary. Run with ``pytest tests/test_acceptance.py -s``
to see the measurements inline.
"""

import itertools
import json
import math
import time

from subbs.cli import COLUMNS, SCHEMA_VERSION, main
from subbs.oracles import FdConfig, McConfig, bs_call, bs_put, crank_nicolson_solve, monte_carlo_price
from subbs.validation import (
    agreement_checks,
    check_eigenfunctions,
    check_orthogonality,
    check_reconstruction,
    check_route_equivalence,
    three_way_prices,
)

T = 1.0


def report(checks):
    for c in checks:
        print(f"  {c.name}: measured={c.measured:.6g} tol={c.tolerance:.3g} "
              f"{'ok' if c.passed else 'FAILED'} ({c.detail})")


def test_criterion_1_orthogonality():
    start = time.perf_counter()
    check = check_orthogonality((0.5, 1.0, 2.0), n_max=10, n_nodes=200)
    elapsed = time.perf_counter() - start
    report([check])
    print(f"  runtime {elapsed:.3f} s")
    assert check.passed
    assert elapsed < 1.0


def test_criterion_2_eigenfunction_residual(ref_model):
    start = time.perf_counter()
    check = check_eigenfunctions(ref_model, n_max=8, s_lo=0.1, s_hi=100.0)
    elapsed = time.perf_counter() - start
    report([check])
    print(f"  runtime {elapsed:.3f} s")
    assert check.passed
    assert elapsed < 1.0


def test_criterion_3_maturity_reconstruction(ref_model, ref_payoff):
    start = time.perf_counter()
    checks = check_reconstruction(ref_model, ref_payoff, T, n_terms=64, ladder=(8, 16, 32, 64))
    elapsed = time.perf_counter() - start
    report(checks)
    print(f"  runtime {elapsed:.3f} s")
    assert elapsed < 5.0
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]


def test_criterion_4_coefficient_routes(ref_model, ref_payoff):
    start = time.perf_counter()
    check = check_route_equivalence(ref_model, ref_payoff, T, m_max=8)
    elapsed = time.perf_counter() - start
    report([check])
    print(f"  runtime {elapsed:.3f} s")
    assert check.passed
    assert elapsed < 10.0


def test_criterion_5_three_way_agreement(ref_model, ref_payoff):
    start = time.perf_counter()
    prices = three_way_prices(
        ref_model, ref_payoff, T, 0.0, [30.0, 60.0, 90.0], n_terms=64,
        fd_cfg=FdConfig(s_max=300.0, n_space=3000, n_time=2000),
        mc_cfg=McConfig(n_paths=200_000, n_steps=500, seed=20240101),
    )
    checks = agreement_checks(prices)
    elapsed = time.perf_counter() - start
    report(checks)
    print(f"  runtime {elapsed:.1f} s")
    assert elapsed < 120.0
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]


def test_criterion_6_classical_oracles():
    start = time.perf_counter()
    atm = bs_call(100.0, 100.0, 0.05, 0.2, 1.0)
    K, r = 100.0, 0.05
    worst_parity = 0.0
    for S, tau, sig in itertools.product([60.0, 80.0, 100.0, 120.0, 140.0], [0.1, 0.5, 1.0, 2.0, 5.0],
                                         [0.1, 0.2, 0.4]):
        lhs = bs_call(S, K, r, sig, tau) - bs_put(S, K, r, sig, tau)
        worst_parity = max(worst_parity, abs(lhs - (S - K * math.exp(-r * tau))))
    expiry_ok = all(
        bs_call(S, K, r, sig, 0.0) == max(S - K, 0.0) and bs_put(S, K, r, sig, 0.0) == max(K - S, 0.0)
        for S, sig in itertools.product([60.0, 80.0, 100.0, 120.0, 140.0], [0.1, 0.2, 0.4])
    )
    elapsed = time.perf_counter() - start
    print(f"  bs_call ATM = {atm:.12f} (|diff from 10.4506| = {abs(atm - 10.4506):.2e}, tol 5e-5)")
    print(f"  worst parity residual on 5x5x3 grid = {worst_parity:.2e} (tol 1e-12)")
    print(f"  expiry rows equal payoffs: {expiry_ok}; runtime {elapsed:.3f} s")
    assert abs(atm - 10.4506) <= 5e-5
    assert worst_parity <= 1e-12
    assert expiry_ok
    assert elapsed < 1.0


def test_criterion_7_scheme_order(ref_model, ref_payoff):
    start = time.perf_counter()
    # Crank-Nicolson: successive differences under mesh halving, at the reference point
    grids = [(1500, 1000), (3000, 2000), (6000, 4000)]
    v = [crank_nicolson_solve(ref_model, ref_payoff, T, FdConfig(s_max=300.0, n_space=m, n_time=n,
                                                                 time_stride=n)).at(0.0, 60.0)
         for m, n in grids]
    contraction = abs(v[0] - v[1]) / abs(v[1] - v[2])
    print(f"  CN values at S=60: {v}; contraction {contraction:.3f} (need >= 3)")

    # Monte Carlo: tripling the paths divides the standard error by about sqrt(3)
    base = McConfig(n_paths=20_000, n_steps=100, seed=20240101)
    se1 = monte_carlo_price(ref_model, ref_payoff, 0.0, 60.0, T, base).stderr
    se3 = monte_carlo_price(ref_model, ref_payoff, 0.0, 60.0, T,
                            McConfig(n_paths=60_000, n_steps=100, seed=20240101)).stderr
    ratio = se1 / se3
    print(f"  MC stderr ratio {ratio:.4f} vs sqrt(3) = {math.sqrt(3):.4f} (tol 10%)")

    # bit-determinism across runs and worker counts
    runs = [monte_carlo_price(ref_model, ref_payoff, 0.0, 60.0, T, base) for _ in range(2)]
    runs += [monte_carlo_price(ref_model, ref_payoff, 0.0, 60.0, T,
                               McConfig(n_paths=base.n_paths, n_steps=base.n_steps, seed=base.seed, workers=w))
             for w in (2, 4)]
    identical = len({(r.mean, r.stderr) for r in runs}) == 1
    elapsed = time.perf_counter() - start
    print(f"  MC identical across 2 runs and workers 1/2/4: {identical}; runtime {elapsed:.1f} s")

    assert contraction >= 3.0
    assert abs(ratio / math.sqrt(3.0) - 1.0) <= 0.10
    assert identical
    assert elapsed < 180.0


def _run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_criterion_8_cli_contract(capsys, tmp_path):
    start = time.perf_counter()
    small = ["--paths", "4000", "--steps", "50", "--n-space", "600", "--n-time", "100"]
    commands = {
        "price": ["--s", "30", "60", "90"],
        "coeffs": ["--terms", "16"],
        "validate": ["--terms", "8", *small],
        "converge": ["--terms-list", "8", "16", "--n-space", "600", "--n-time", "100"],
    }
    problems = []
    for command, extra in commands.items():
        for fmt in ("json", "csv"):
            first = _run_cli([command, *extra, "--format", fmt], capsys)
            second = _run_cli([command, *extra, "--format", fmt], capsys)
            if first != second:
                problems.append(f"{command}/{fmt} not byte-deterministic")
            code, out, _ = first
            if code not in (0, 4) or (code == 4 and command != "validate"):
                problems.append(f"{command}/{fmt} exit {code}")
                continue
            if fmt == "json":
                doc = json.loads(out)
                expected = {"schema_version", "command", "config_echo", "report" if command == "validate" else "rows"}
                if not expected <= set(doc) or doc["schema_version"] != SCHEMA_VERSION:
                    problems.append(f"{command}/json keys {sorted(doc)}")
                rows = doc["report"]["checks"] if command == "validate" else doc["rows"]
                if any(tuple(r) != COLUMNS[command] for r in rows):
                    problems.append(f"{command}/json row fields")
            elif out.splitlines()[0] != ",".join(COLUMNS[command]):
                problems.append(f"{command}/csv header {out.splitlines()[0]}")

    exit_cases = {
        0: ["price", "--s", "60"],
        1: ["price", "--config", str(tmp_path / "absent.cfg")],
        2: ["price", "--k", "2"],
        3: ["price", "--r", "1e10", "--s", "60"],
        4: ["validate", "--terms", "2", *small],
    }
    for expected, argv in exit_cases.items():
        code, _, err = _run_cli(argv, capsys)
        print(f"  exit {code} for {' '.join(argv[:3])} ... (expected {expected})")
        if code != expected:
            problems.append(f"{argv} exited {code}, expected {expected}")
        if expected == 2 and "K_OUT_OF_RANGE" not in err:
            problems.append("k=2 rejection lacks K_OUT_OF_RANGE")
    elapsed = time.perf_counter() - start
    print(f"  problems: {problems or 'none'}; runtime {elapsed:.1f} s")
    assert not problems
    assert elapsed < 10.0
