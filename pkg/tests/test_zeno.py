import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afm.amplitude import DiscriminationPair
from afm.engine import run_pair
from afm.zeno import (
    NoRootError,
    ZenoSchedule,
    build_zeno_complex,
    build_zeno_real,
    gamma,
    gamma_asymptotic,
    omega,
    peak_theta,
    predict_p_ident2,
    rotation,
    solve_theta,
    solve_theta_complex,
    theta_prime,
    zeno_schedule_complex,
    zeno_schedule_real,
)


def test_rotation_convention():
    r = rotation(0.3)
    v = r @ np.array([1.0, 0.0])
    assert v[1] == pytest.approx(math.sin(0.3))
    assert np.allclose(rotation(-0.3) @ r, np.eye(2))


def test_opaque_angle_is_exact():
    assert solve_theta(0.0, 10) == math.pi / 20


@pytest.mark.parametrize("alpha2,n", [(0.3, 10), (0.3, 1000), (0.82, 16), (0.82, 100), (0.5, 5)])
def test_solved_angle_completes_quarter_turn(alpha2, n):
    theta = solve_theta(alpha2, n)
    assert n * (theta - theta_prime(theta, alpha2)) == pytest.approx(math.pi / 2, abs=1e-12)
    assert theta < peak_theta(alpha2)


def test_theta_prime_matches_arccos_form():
    theta, a = 0.4, 0.6
    assert theta_prime(theta, a) == pytest.approx(math.acos(math.cos(theta) / gamma(theta, a)), abs=1e-14)


def test_no_root_when_rounds_too_few():
    with pytest.raises(NoRootError, match="need n >= 16"):
        solve_theta(0.82, 10)
    assert solve_theta(0.82, 16) > 0


@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5])
def test_alpha_range(bad):
    with pytest.raises(ValueError):
        solve_theta(bad, 10)


def test_n_must_be_positive():
    with pytest.raises(ValueError):
        solve_theta(0.3, 0)


@pytest.mark.parametrize("alpha2", [0.0, 0.3, 0.82])
def test_engine_matches_gamma_power(alpha2):
    n = 100
    trace = run_pair(build_zeno_real(alpha2, n), DiscriminationPair.from_alphas(1.0, alpha2))
    p1, p2 = trace.p_ident
    assert p2 == pytest.approx(predict_p_ident2(alpha2, n), abs=1e-10)
    assert p1 == pytest.approx(1.0, abs=1e-12)
    assert trace.trace2.accounting_error <= 1e-12


def test_identification_improves_with_rounds():
    values = [predict_p_ident2(0.3, n) for n in (10, 100, 1000)]
    assert values[0] < values[1] < values[2] < 1.0


def test_asymptotic_form_is_a_diagnostic():
    # the closed-form large-n expression is looser than the exact gamma by about 2x in 1 - gamma
    n, a = 1000, 0.3
    exact = 1.0 - gamma(solve_theta(a, n), a)
    approx = 1.0 - gamma_asymptotic(a, n)
    assert approx / exact == pytest.approx(2.0, rel=1e-2)


def test_schedule_rows():
    sched = zeno_schedule_real(0.3, 4)
    assert sched.n_steps == 4
    rows = sched.rotations()
    assert len(rows) == 8
    assert rows[0] > 0 > rows[1]


def test_schedule_rejects_empty():
    with pytest.raises(ValueError):
        ZenoSchedule(())


@pytest.mark.parametrize("alpha2", [0.5 * cmath.exp(1j * math.pi), 0.7 * cmath.exp(1j), 0.3j])
def test_complex_variant(alpha2):
    n = 50
    trace = run_pair(build_zeno_complex(alpha2, n), DiscriminationPair.from_alphas(1.0, alpha2))
    p1, p2 = trace.p_ident
    assert p1 == pytest.approx(1.0, abs=1e-12)
    theta = solve_theta_complex(alpha2, n)
    assert p2 == pytest.approx(gamma(theta, alpha2) ** (2 * n), abs=1e-10)
    # object-present state comes back along v each round
    assert abs(trace.trace2.final_state[1]) < 1e-12


def test_complex_variant_reduces_to_real():
    a = zeno_schedule_complex(0.4, 20)
    b = zeno_schedule_real(0.4, 20)
    assert a.thetas == b.thetas
    assert np.allclose(a.closing, rotation(b.closing), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(-math.pi, math.pi))
def test_complex_round_advance_within_window(mag, phase):
    alpha2 = cmath.rect(mag, phase)
    theta = 0.05
    tp = theta_prime(theta, mag)
    assert theta - tp - 1e-12 <= omega(theta, alpha2) <= theta + tp + 1e-12
