from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfkac.scenario import (ConfigError, load_scenario, load_scenarios, scenario_from_dict,
                            scenario_pack_dir)

BASE = {"id": "s", "grid": {"t0": 0.0, "T": 1.0, "N": 4}, "h": [[0, 0], [1, 0]]}


def cfg(**kw):
    d = json.loads(json.dumps(BASE))
    d.update(kw)
    return d


def test_minimal_defaults():
    sc = scenario_from_dict(cfg())
    assert sc.grid.n_cells == 4 and sc.x0 == 0
    assert np.all(sc.coeffs.sigma == 0) and sc.g_tilde[0].is_zero
    assert sc.basis_degree == 2 and sc.mc.n_paths == 100_000


def test_coefficient_forms():
    sc = scenario_from_dict(cfg(coefficients={
        "sigma": 2, "gamma": [0, 1], "alpha": [[1, 0], [2, 0], [3, 0], [4, 1]],
        "beta": {"piecewise": [[0.5, 1], [1.0, [0, -1]]]}}))
    assert np.all(sc.coeffs.sigma == 2) and np.all(sc.coeffs.gamma == 1j)
    assert sc.coeffs.alpha[3] == 4 + 1j
    assert list(sc.coeffs.beta) == [1, 1, -1j, -1j]


@pytest.mark.parametrize("patch,key", [
    ({"grid": {"t0": 0, "T": -1, "N": 4}}, "grid.T"),
    ({"grid": {"t0": 0, "T": 1}}, "grid.N"),
    ({"coefficients": {"sigma": [1, 2, 3]}}, "coefficients.sigma"),
    ({"coefficients": {"sigma": [[1, 0], [1, 0]]}}, "coefficients.sigma"),
    ({"coefficients": {"kappa": 1}}, "coefficients.kappa"),
    ({"h": [[1, 0]] * 10}, "h"),
    ({"h": "x"}, "h"),
    ({"g_tilde": {"cells": [[[1, 0]]]}}, "g_tilde.cells"),
    ({"mc": {"n_paths": 0}}, "mc.n_paths"),
    ({"mc": {"basis_degree": 12}}, "mc.basis_degree"),
    ({"x0": [1, 2, 3]}, "x0"),
    ({"bogus": 1}, "bogus"),
    ({"id": ""}, "id"),
    ({"coefficients": {"sigma": {"piecewise": [[0.5, 1]]}}}, "coefficients.sigma.piecewise"),
])
def test_errors_carry_key_path(patch, key):
    with pytest.raises(ConfigError) as e:
        scenario_from_dict(cfg(**patch))
    assert e.value.key == key


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(p)


def test_pack_loads_and_roundtrips():
    scs = load_scenarios(scenario_pack_dir())
    assert len(scs) >= 9
    validated = [s for s in scs if "validated" in s.tags]
    assert len(validated) >= 5 and all(s.coeffs.sigma_gamma_zero for s in validated)
    assert max(s.data_degree for s in validated) == 4
    for s in scs:
        again = scenario_from_dict(s.to_dict())
        assert again.to_dict() == s.to_dict()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=9))
def test_canonical_form_is_a_fixed_point(n, x0, h):
    sc = scenario_from_dict(cfg(grid={"t0": 0.0, "T": 2.0, "N": n}, x0=x0,
                                h=[list(c) for c in h], coefficients={"sigma": [0.5, 0.1]}))
    d = sc.to_dict()
    assert scenario_from_dict(d).to_dict() == d
    assert len(d["grid"]["knots"]) == n + 1
