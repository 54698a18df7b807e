"""Scenario configuration: one FBSDE/PDE instance as a JSON document.

Schema (keys marked * are required)::

    {
      "id"*: "name",
      "grid"*: {"t0": 0.0, "T": 1.0, "N": 64}   or   {"knots": [t0, ..., T]},
      "coefficients": {"sigma": C, "gamma": C, "alpha": C, "beta": C, "theta": C},
      "h"*: [[re, im], ...],                     # lowest degree first
      "g_tilde": [[re, im], ...]  or  {"cells": [[[re, im], ...], ...]},
      "x0": [re, im],
      "ito_F": [[[re, im], ...], ...],           # row j multiplies t**j
      "mc": {"n_paths": 100000, "seed": 1, "basis_degree": null},
      "tags": ["validated", ...]                 # roles in the acceptance suite
    }

A coefficient ``C`` is a number, an ``[re, im]`` pair, a list of pairs (one
per cell), or ``{"piecewise": [[t_end, value], ...]}`` where each value holds
on cells ending at or before ``t_end``. Missing coefficients default to 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import MAX_DEGREE, AnalyticPoly, SpaceTimePoly, TimeVaryingPoly
from .paths import CoefficientTable, TimeGrid


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` is the dotted path to the problem."""

    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class McSettings:
    n_paths: int = 100_000
    seed: int = 20240601
    basis_degree: int | None = None


@dataclass(eq=False)
class Scenario:
    id: str
    coeffs: CoefficientTable
    h: AnalyticPoly
    g_tilde: TimeVaryingPoly
    x0: complex = 0j
    mc: McSettings = field(default_factory=McSettings)
    ito_F: SpaceTimePoly | None = None
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.g_tilde) != self.grid.n_cells:
            raise ValueError("g_tilde must have one polynomial per grid cell")

    @property
    def grid(self) -> TimeGrid:
        return self.coeffs.grid

    @property
    def data_degree(self) -> int:
        return max(self.h.degree, self.g_tilde.degree)

    @property
    def basis_degree(self) -> int:
        if self.mc.basis_degree is not None:
            return self.mc.basis_degree
        return self.data_degree + 1

    def coarsen(self, factor: int) -> Scenario:
        return Scenario(self.id, self.coeffs.coarsen(factor), self.h,
                        self.g_tilde.coarsen(factor), self.x0, self.mc, self.ito_F, self.tags)

    def sub(self, k0: int) -> Scenario:
        """The same problem restricted to ``[t_k0, T]``."""
        return Scenario(self.id, self.coeffs.sub(k0), self.h,
                        TimeVaryingPoly(self.g_tilde.polys[k0:]), self.x0, self.mc, self.ito_F,
                        self.tags)

    def head(self, k1: int, h: AnalyticPoly) -> Scenario:
        """The problem on ``[t0, t_k1]`` with terminal data ``h`` at ``t_k1``."""
        return Scenario(self.id, self.coeffs.head(k1), h,
                        TimeVaryingPoly(self.g_tilde.polys[:k1]), self.x0, self.mc, self.ito_F,
                        self.tags)

    def replace(self, **kw) -> Scenario:
        d = dict(id=self.id, coeffs=self.coeffs, h=self.h, g_tilde=self.g_tilde,
                 x0=self.x0, mc=self.mc, ito_F=self.ito_F, tags=self.tags)
        d.update(kw)
        return Scenario(**d)

    def to_dict(self) -> dict:
        """Canonical normalized form: explicit knots, per-cell tables."""
        pair = lambda z: [float(np.real(z)), float(np.imag(z))]
        d = {
            "id": self.id,
            "grid": {"knots": [float(t) for t in self.grid.times]},
            "coefficients": {n: [pair(v) for v in getattr(self.coeffs, n)]
                             for n in CoefficientTable.NAMES},
            "h": self.h.to_pairs(),
            "g_tilde": {"cells": [p.to_pairs() for p in self.g_tilde.polys]},
            "x0": pair(self.x0),
            "mc": {"n_paths": self.mc.n_paths, "seed": self.mc.seed,
                   "basis_degree": self.mc.basis_degree},
        }
        if self.tags:
            d["tags"] = list(self.tags)
        if self.ito_F is not None:
            d["ito_F"] = [[pair(c) for c in row] for row in self.ito_F.coeffs]
        return d


def _complex(v, key) -> complex:
    if isinstance(v, bool):
        raise ConfigError(key, "expected a number or [re, im] pair")
    if isinstance(v, (int, float)):
        return complex(float(v), 0.0)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(u, (int, float)) and not isinstance(u, bool) for u in v):
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(key, f"expected a number or [re, im] pair, got {v!r}")


def _is_scalar(v) -> bool:
    try:
        _complex(v, "")
        return True
    except ConfigError:
        return False


def _coefficient(v, grid: TimeGrid, key: str) -> np.ndarray:
    n = grid.n_cells
    if v is None:
        return np.zeros(n, dtype=np.complex128)
    if _is_scalar(v):
        return np.full(n, _complex(v, key))
    if isinstance(v, dict):
        if set(v) != {"piecewise"}:
            raise ConfigError(key, "dict form must be {'piecewise': [[t_end, value], ...]}")
        pieces = v["piecewise"]
        if not isinstance(pieces, list) or not pieces:
            raise ConfigError(f"{key}.piecewise", "expected a non-empty list")
        out = np.empty(n, dtype=np.complex128)
        ends = grid.times[1:]
        assigned = np.zeros(n, dtype=bool)
        for i, piece in enumerate(pieces):
            if not isinstance(piece, list) or len(piece) != 2:
                raise ConfigError(f"{key}.piecewise[{i}]", "expected [t_end, value]")
            t_end, val = float(piece[0]), _complex(piece[1], f"{key}.piecewise[{i}][1]")
            sel = (ends <= t_end + 1e-12) & ~assigned
            out[sel] = val
            assigned |= sel
        if not assigned.all():
            raise ConfigError(f"{key}.piecewise", "pieces do not cover the whole grid")
        return out
    if isinstance(v, list):
        if len(v) != n:
            raise ConfigError(key, f"per-cell table has {len(v)} entries, grid has {n} cells")
        return np.array([_complex(u, f"{key}[{i}]") for i, u in enumerate(v)])
    raise ConfigError(key, f"unsupported coefficient value {v!r}")


def _poly(v, key) -> AnalyticPoly:
    if not isinstance(v, list) or not v:
        raise ConfigError(key, "expected a non-empty list of [re, im] coefficient pairs")
    coeffs = [_complex(c, f"{key}[{i}]") for i, c in enumerate(v)]
    try:
        return AnalyticPoly(coeffs)
    except ValueError as e:
        raise ConfigError(key, str(e)) from None


def _grid(v) -> TimeGrid:
    if not isinstance(v, dict):
        raise ConfigError("grid", "expected an object")
    try:
        if "knots" in v:
            return TimeGrid(np.asarray(v["knots"], dtype=float))
        for k in ("t0", "T", "N"):
            if k not in v:
                raise ConfigError(f"grid.{k}", "missing")
        if not isinstance(v["N"], int) or isinstance(v["N"], bool):
            raise ConfigError("grid.N", "must be an integer")
        if not float(v["T"]) > float(v["t0"]):
            raise ConfigError("grid.T", "must exceed t0")
        return TimeGrid.uniform(float(v["t0"]), float(v["T"]), v["N"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError("grid", str(e)) from None


def scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError("<root>", "expected a JSON object")
    known = {"id", "grid", "coefficients", "h", "g_tilde", "x0", "ito_F", "mc", "description",
             "tags"}
    for k in d:
        if k not in known:
            raise ConfigError(k, "unknown key")
    if not isinstance(d.get("id"), str) or not d["id"]:
        raise ConfigError("id", "required non-empty string")
    if "grid" not in d:
        raise ConfigError("grid", "missing")
    grid = _grid(d["grid"])

    cd = d.get("coefficients", {})
    if not isinstance(cd, dict):
        raise ConfigError("coefficients", "expected an object")
    for k in cd:
        if k not in CoefficientTable.NAMES:
            raise ConfigError(f"coefficients.{k}", "unknown coefficient")
    coeffs = CoefficientTable(grid, *(_coefficient(cd.get(n), grid, f"coefficients.{n}")
                                      for n in CoefficientTable.NAMES))

    if "h" not in d:
        raise ConfigError("h", "missing")
    h = _poly(d["h"], "h")

    gv = d.get("g_tilde", [[0, 0]])
    if isinstance(gv, dict):
        cells = gv.get("cells")
        if not isinstance(cells, list) or len(cells) != grid.n_cells:
            raise ConfigError("g_tilde.cells", f"expected {grid.n_cells} per-cell polynomials")
        g = TimeVaryingPoly([_poly(c, f"g_tilde.cells[{i}]") for i, c in enumerate(cells)])
    else:
        g = TimeVaryingPoly.constant(_poly(gv, "g_tilde"), grid.n_cells)

    x0 = _complex(d.get("x0", 0), "x0")

    F = None
    if "ito_F" in d:
        rows = d["ito_F"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) and r for r in rows):
            raise ConfigError("ito_F", "expected a list of coefficient rows")
        width = max(len(r) for r in rows)
        if width - 1 > MAX_DEGREE:
            raise ConfigError("ito_F", f"x-degree exceeds maximum {MAX_DEGREE}")
        arr = np.zeros((len(rows), width), dtype=np.complex128)
        for j, r in enumerate(rows):
            for m, c in enumerate(r):
                arr[j, m] = _complex(c, f"ito_F[{j}][{m}]")
        F = SpaceTimePoly(arr)

    md = d.get("mc", {})
    if not isinstance(md, dict):
        raise ConfigError("mc", "expected an object")
    mc = McSettings()
    for k, v in md.items():
        if k not in ("n_paths", "seed", "basis_degree"):
            raise ConfigError(f"mc.{k}", "unknown key")
        if k == "basis_degree" and v is None:
            continue
        if not isinstance(v, int) or isinstance(v, bool) or v < (1 if k == "n_paths" else 0):
            raise ConfigError(f"mc.{k}", "must be a non-negative integer" if k != "n_paths"
                              else "must be a positive integer")
        setattr(mc, k, v)
    if mc.basis_degree is not None and mc.basis_degree > MAX_DEGREE + 1:
        raise ConfigError("mc.basis_degree", f"must not exceed {MAX_DEGREE + 1}")
    tags = d.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ConfigError("tags", "expected a list of strings")
    return Scenario(d["id"], coeffs, h, g, x0, mc, F, tuple(tags))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError("<root>", f"{path}: invalid JSON ({e})") from None
    return scenario_from_dict(d)


def load_scenarios(path) -> list[Scenario]:
    """A single scenario file, or every ``*.json`` in a directory (sorted)."""
    path = Path(path)
    if path.is_dir():
        return [load_scenario(p) for p in sorted(path.glob("*.json"))]
    return [load_scenario(path)]


def scenario_pack_dir() -> Path:
    return Path(__file__).parent / "scenarios"
