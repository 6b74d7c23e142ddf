import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afm.serialize import SCHEMA_NAMES, dumps, format_float, load_schema


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip(x):
    assert float(format_float(x)) == x


@pytest.mark.parametrize("x", [math.nan, math.inf, -math.inf])
def test_non_finite_is_null(x):
    assert format_float(x) == "null"


def test_seventeen_digits():
    assert format_float(0.1) == "0.10000000000000001"


def test_dumps_structures():
    doc = {"a": [1, 2.5, True, None], "z": 1 + 2j, "n": np.float64(0.25), "e": {}, "l": []}
    parsed = json.loads(dumps(doc))
    assert parsed == {"a": [1, 2.5, True, None], "z": {"re": 1, "im": 2}, "n": 0.25, "e": {}, "l": []}
    assert dumps(doc).endswith("\n")


def test_dumps_rejects_objects():
    with pytest.raises(TypeError):
        dumps({"x": object()})


@pytest.mark.parametrize("name", SCHEMA_NAMES)
def test_schemas_load(name):
    schema = load_schema(name)
    assert schema["type"] == "object"
    assert set(schema["required"]) == set(schema["properties"])


def test_unknown_schema():
    with pytest.raises(KeyError):
        load_schema("nope")
