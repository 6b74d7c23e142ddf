import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afm.amplitude import (
    DiscriminationPair,
    ObjectModel,
    bound_rhs,
    eta,
    format_complex,
    identity_gap,
    object_from_alpha,
    parse_complex,
)

mags = st.floats(0.0, 1.0)
phases = st.floats(-math.pi, math.pi)
alphas = st.builds(cmath.rect, mags, phases)


@pytest.mark.parametrize(
    "text,expected",
    [
        ("0.8", 0.8),
        ("-1", -1.0),
        ("0.5+0.25i", 0.5 + 0.25j),
        ("0.5 - 0.25i", 0.5 - 0.25j),
        ("1e-3+2e-3I", 1e-3 + 2e-3j),
        ("0.3j", 0.3j),
        ("1@0deg", 1.0),
        ("2@180deg", -2.0),
        ("0.5@-90deg", -0.5j),
    ],
)
def test_parse_complex(text, expected):
    assert abs(parse_complex(text) - expected) < 1e-15


@pytest.mark.parametrize("text", ["", "abc", "1+2i+3i", "nan", "inf", "1@deg", "--1"])
def test_parse_complex_rejects(text):
    with pytest.raises(ValueError):
        parse_complex(text)


@given(alphas)
def test_format_parse_roundtrip(z):
    assert parse_complex(format_complex(z)) == z


def test_object_from_alpha_normalises():
    obj = object_from_alpha(0.6)
    assert obj.beta_mag == pytest.approx(0.8, abs=1e-15)
    assert obj.absorption == pytest.approx(0.64, abs=1e-15)


def test_object_from_alpha_snaps_to_unit_circle():
    obj = object_from_alpha(1.0 - 1e-14)
    assert obj.alpha == 1.0
    assert obj.beta_mag == 0.0


@pytest.mark.parametrize("alpha", [1.1, 2j, complex(1.0, 1.0)])
def test_object_from_alpha_rejects_gain(alpha):
    with pytest.raises(ValueError):
        object_from_alpha(alpha)


def test_object_model_checks_normalisation():
    with pytest.raises(ValueError):
        ObjectModel(0.5, 0.5)
    with pytest.raises(ValueError):
        ObjectModel(float("nan"), 0.0)


def test_eta_reference_values():
    assert bound_rhs(DiscriminationPair.from_alphas(0.8, 0.82)) == pytest.approx(0.996620, abs=5e-7)
    # opaque against transparent: no absorption on one side, bound vanishes
    assert eta(DiscriminationPair.from_alphas(1.0, 0.0)) == 0.0
    assert eta(DiscriminationPair.from_alphas(0.0, 0.0)) == 1.0


@given(alphas, alphas)
def test_eta_in_unit_interval_and_symmetric(a1, a2):
    pair = DiscriminationPair.from_alphas(a1, a2)
    assert 0.0 <= eta(pair) <= 1.0
    assert eta(pair) == pytest.approx(eta(pair.swapped()), abs=1e-12)


@settings(max_examples=500)
@given(alphas, alphas)
def test_identity_gap_vanishes(a1, a2):
    assert abs(identity_gap(DiscriminationPair.from_alphas(a1, a2))) <= 1e-12


@given(alphas)
def test_eta_phase_invariance(a):
    # a common phase on both transparencies leaves the bound alone
    rot = cmath.exp(0.7j)
    p = DiscriminationPair.from_alphas(a, 0.5)
    q = DiscriminationPair.from_alphas(a * rot, 0.5 * rot)
    assert eta(p) == pytest.approx(eta(q), abs=1e-12)


def test_docstring_examples():
    import doctest

    import afm.amplitude

    assert doctest.testmod(afm.amplitude).failed == 0
