from __future__ import annotations

import math

from hypothesis import given
from hypothesis import strategies as st

from cfkac.csvio import fmt, read_csv, write_csv


@given(st.floats(allow_nan=False))
def test_float_roundtrip(x):
    assert float(fmt(x)) == x


def test_header_only_for_empty_rows(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["a", "b"], [])
    assert p.read_bytes() == b"a,b\r\n"


def test_quoting_and_cells(tmp_path):
    p = write_csv(tmp_path / "q.csv", ["x", "y", "z"], [["a,b", None, True], ['q"t', 1, 0.1]])
    assert read_csv(p) == [["x", "y", "z"], ["a,b", "", "true"], ['q"t', "1", "0.1"]]
    assert fmt(math.inf) == "inf"


def test_row_width_checked(tmp_path):
    import pytest
    with pytest.raises(ValueError):
        write_csv(tmp_path / "w.csv", ["a"], [[1, 2]])
