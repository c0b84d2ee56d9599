from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core import __version__
from core.util import chunked, config_hash, dumps, format_db, from_db, to_db, version_string


def test_chunked_splits_sequence_into_expected_sublists():
    sequence = [1, 2, 3, 4, 5]
    result = list(chunked(sequence, 2))
    assert result == [[1, 2], [3, 4], [5]]


@pytest.mark.parametrize("size", [0, -1])
def test_chunked_raises_value_error_for_non_positive_size(size):
    with pytest.raises(ValueError):
        list(chunked([1, 2, 3], size))


def test_chunked_accepts_ranges():
    assert list(chunked(range(4), 4)) == [[0, 1, 2, 3]]


@pytest.mark.parametrize("value, expected", [(1.0, 0.0), (10.0, 10.0), (0.01, -20.0)])
def test_to_db_and_back(value, expected):
    assert to_db(value) == pytest.approx(expected)
    assert from_db(expected) == pytest.approx(value)


def test_to_db_of_zero_is_minus_inf():
    assert to_db(0.0) == -math.inf


def test_to_db_rejects_negative_ratios():
    with pytest.raises(ValueError):
        to_db(-1.0)


@pytest.mark.parametrize(
    "value, expected",
    [(-math.inf, "-inf"), (math.inf, "inf"), (-3.5, "-3.500000")],
)
def test_format_db_uses_portable_sentinels(value, expected):
    assert format_db(value) == expected


def test_dumps_handles_numpy_values():
    text = dumps({"a": np.arange(3), "b": np.float64(0.5), "c": (np.int64(2),)})
    assert text == '{"a": [0, 1, 2], "b": 0.5, "c": [2]}'


def test_config_hash_ignores_key_order():
    assert config_hash({"x": 1, "y": [1, 2]}) == config_hash({"y": [1, 2], "x": 1})
    assert config_hash({"x": 1}) != config_hash({"x": 2})


def test_version_string_falls_back_to_package_version(monkeypatch):
    import core.util as util

    def fail(*args, **kwargs):
        raise OSError("git not installed")

    monkeypatch.setattr(util.subprocess, "run", fail)
    assert version_string() == __version__
