"""Acceptance criteria, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary (see
conftest.py). Runs shared between criteria are cached so criterion 7 can
inspect every trace produced by criteria 1-6.
"""

import functools
import math
import time

import numpy as np
import pytest

from afm.amplitude import DiscriminationPair, identity_gap
from afm.engine import (
    ACCOUNTING_TOL,
    RECURSION_TOL,
    elitzur_vaidman_preset,
    run_pair,
    verify_bound,
)
from afm.fabry_perot import FPConfig, build_fp_protocol, closed_form_fL, simulate_fp
from afm.amplitude import object_from_alpha
from afm.optimizer import OptimizerConfig, schedule_protocol, search_lambda
from afm.sweep import property_sweep
from afm.zeno import build_zeno_real, gamma, solve_theta

ZENO_ALPHAS = (0.0, 0.3, 0.82)
ZENO_NS = (10, 100, 1000)
FP_GRID = [(c, a) for c in (0.9, 0.99) for a in (0.5, 0.8)]


@functools.cache
def near_pair_run():
    start = time.perf_counter()
    report = search_lambda(OptimizerConfig(0.8, 0.82, epsilon=1e-4))
    elapsed = time.perf_counter() - start
    trace = run_pair(schedule_protocol(report.schedule, 1e-4), DiscriminationPair.from_alphas(0.8, 0.82))
    return report, trace, elapsed


@functools.cache
def ev_run():
    return run_pair(elitzur_vaidman_preset(), DiscriminationPair.from_alphas(1.0, 0.0))


@functools.cache
def zeno_run(alpha2, n):
    return run_pair(build_zeno_real(alpha2, n), DiscriminationPair.from_alphas(1.0, alpha2))


@functools.cache
def fp_run(c, alpha):
    return simulate_fp(FPConfig.auto(c, alpha), object_from_alpha(alpha))


@functools.cache
def sweep_run():
    start = time.perf_counter()
    result = property_sweep(1000, dim_max=8, seed=2024, max_steps=20)
    return result, time.perf_counter() - start


# -- 1 ---------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_c1_near_pair_product_near_eta_sq():
    report, _, elapsed = near_pair_run()
    assert report.success
    assert abs(report.product - 0.996620) <= 5e-5
    assert elapsed <= 60.0


@pytest.mark.criterion(1)
def test_c1_near_pair_lambda_star():
    report, _, _ = near_pair_run()
    assert abs(report.lambda_star - 1.049996) <= 5e-3


# -- 2 ---------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_c2_identity_gap_random_complex_pairs():
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    mags = np.sqrt(rng.random((10_000, 2)))
    phases = rng.uniform(-math.pi, math.pi, (10_000, 2))
    worst = 0.0
    for (m1, m2), (p1, p2) in zip(mags, phases):
        pair = DiscriminationPair.from_alphas(m1 * complex(math.cos(p1), math.sin(p1)),
                                              m2 * complex(math.cos(p2), math.sin(p2)))
        worst = max(worst, abs(identity_gap(pair)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12
    assert elapsed <= 1.0


# -- 3 ---------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_c3_elitzur_vaidman_opaque():
    trace = ev_run()
    assert abs(trace.trace2.p_ident - 0.25) <= 1e-12
    assert abs(trace.trace2.p_interact - 0.5) <= 1e-12


# -- 4 ---------------------------------------------------------------------


@pytest.mark.criterion(4)
@pytest.mark.parametrize("n", ZENO_NS)
@pytest.mark.parametrize("alpha2", ZENO_ALPHAS)
def test_c4_zeno_engine_matches_closed_form(alpha2, n):
    # (0.82, 10) has no rotation angle that completes in 10 rounds; build raises
    trace = zeno_run(alpha2, n)
    theta = solve_theta(alpha2, n)
    p1, p2 = trace.p_ident
    assert abs(p2 - gamma(theta, alpha2) ** (2 * n)) <= 1e-10
    assert abs(p1 - 1.0) <= 1e-12


@pytest.mark.criterion(4)
def test_c4_zeno_opaque_limit():
    _, p2 = zeno_run(0.0, 1000).p_ident
    assert p2 >= 1.0 - 2.6e-3


@pytest.mark.criterion(4)
def test_c4_runtime():
    start = time.perf_counter()
    for alpha2 in ZENO_ALPHAS:
        for n in ZENO_NS:
            try:
                run_pair(build_zeno_real(alpha2, n), DiscriminationPair.from_alphas(1.0, alpha2))
            except ValueError:
                pass
    assert time.perf_counter() - start <= 5.0


# -- 5 ---------------------------------------------------------------------


@pytest.mark.criterion(5)
@pytest.mark.parametrize("c,alpha", FP_GRID)
def test_c5_fp_matches_closed_form(c, alpha):
    report = fp_run(c, alpha)
    assert abs(report.fL_sim - closed_form_fL(c, alpha)) <= 1e-6


@pytest.mark.criterion(5)
@pytest.mark.parametrize("c", [0.9, 0.99])
def test_c5_fp_no_reflection_when_empty(c):
    assert abs(fp_run(c, 1.0).fL_sim) <= 1e-12


@pytest.mark.criterion(5)
def test_c5_fp_reflection_rises_towards_one():
    values = [abs(fp_run(c, 0.8).fL_sim) ** 2 for c in (0.9, 0.99, 0.999)]
    assert values[0] < values[1] < values[2] < 1.0


@pytest.mark.criterion(5)
def test_c5_runtime():
    start = time.perf_counter()
    for c, alpha in FP_GRID + [(0.9, 1.0), (0.99, 1.0), (0.999, 0.8)]:
        simulate_fp(FPConfig.auto(c, alpha), object_from_alpha(alpha))
    assert time.perf_counter() - start <= 30.0


# -- 6 ---------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_c6_property_sweep_no_violations():
    result, elapsed = sweep_run()
    assert result["trials"] == 1000
    assert result["failures"] == 0
    assert result["worst_slack"] >= -1e-9
    assert elapsed <= 30.0


# -- 7 ---------------------------------------------------------------------


def _engine_traces():
    yield "near_pair", near_pair_run()[1]
    yield "ev", ev_run()
    for alpha2 in ZENO_ALPHAS:
        for n in ZENO_NS:
            try:
                yield f"zeno {alpha2} {n}", zeno_run(alpha2, n)
            except ValueError:
                continue
    pair = DiscriminationPair.from_alphas(1.0, 0.8)
    yield "fp engine", run_pair(build_fp_protocol(0.9, 512, 700), pair)


@pytest.mark.criterion(7)
def test_c7_engine_runs_account_for_every_photon():
    for name, trace in _engine_traces():
        for t in (trace.trace1, trace.trace2):
            assert t.accounting_error <= ACCOUNTING_TOL, name
        assert trace.recursion_residual <= RECURSION_TOL, name
        assert verify_bound(trace).theorem_holds, name


@pytest.mark.criterion(7)
def test_c7_optimizer_report_accounting():
    report = near_pair_run()[0]
    assert report.accounting_error <= ACCOUNTING_TOL
    assert report.recursion_residual <= RECURSION_TOL


@pytest.mark.criterion(7)
def test_c7_fp_simulation_accounting():
    for c, alpha in FP_GRID + [(0.9, 1.0), (0.99, 1.0), (0.999, 0.8)]:
        assert fp_run(c, alpha).accounting_error <= ACCOUNTING_TOL


@pytest.mark.criterion(7)
def test_c7_sweep_accounting():
    result, _ = sweep_run()
    assert result["worst_accounting_error"] <= ACCOUNTING_TOL
    assert result["worst_recursion_residual"] <= RECURSION_TOL
