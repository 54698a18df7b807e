"""Complex Brownian increments and the forward process.

``B = B1 + i B2`` with independent real Brownian components, so that
``dB dB = 0`` and ``dB dB~ = 2 dt``. The forward process

    X_{k+1} = X_k + sigma_k dB_k + gamma_k conj(dB_k)

is exact on the grid because the coefficients are deterministic and constant
on each cell.

Random numbers: path ``j`` belongs to block ``j // BLOCK_SIZE``; each block
draws from its own Philox stream keyed by ``(seed, label, block)``. Normals
come from Box-Muller on ``(0, 1]`` uniforms, one uniform pair per (path, cell)
giving the pair ``(dB1, dB2)``. The partition is fixed, so the worker count
never changes a single bit of output.
"""
from __future__ import annotations

import csv
import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

BLOCK_SIZE = 8192
DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes
WORKERS_ENV = "CFKAC_WORKERS"
GAUSSIAN_TRANSFORM = "box-muller"


class ResourceError(MemoryError):
    """Requested batch would exceed the configured memory budget."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("time grid needs at least two knots")
        if not np.all(np.isfinite(t)) or t[0] < 0:
            raise ValueError("time grid knots must be finite with t0 >= 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid knots must be strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, t0: float, T: float, n: int) -> TimeGrid:
        if n < 1:
            raise ValueError("grid needs N >= 1 cells")
        return cls(np.linspace(t0, T, n + 1))

    @property
    def n_cells(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)

    def __hash__(self):
        return hash(self.times.tobytes())

    def node_index(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t))
        if k >= self.times.size or not np.isclose(self.times[k], t, rtol=0, atol=1e-12):
            raise ValueError(f"t={t} is not a grid knot")
        return k

    def cell_index(self, t: float) -> int:
        """Cell ``k`` with ``t_k <= t < t_{k+1}``; ``t = T`` maps to the last cell."""
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside [{self.t0}, {self.T}]")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(k, 0), self.n_cells - 1)

    def coarsen(self, factor: int) -> TimeGrid:
        if factor < 1 or self.n_cells % factor:
            raise ValueError(f"cannot coarsen {self.n_cells} cells by {factor}")
        return TimeGrid(self.times[::factor])

    def sub(self, k0: int) -> TimeGrid:
        return TimeGrid(self.times[k0:])

    def head(self, k1: int) -> TimeGrid:
        return TimeGrid(self.times[: k1 + 1])


@dataclass(eq=False)
class CoefficientTable:
    """Per-cell complex coefficients of the forward process and the linear driver."""

    grid: TimeGrid
    sigma: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    theta: np.ndarray

    NAMES = ("sigma", "gamma", "alpha", "beta", "theta")

    def __post_init__(self):
        n = self.grid.n_cells
        for name in self.NAMES:
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=np.complex128), (n,)).copy()
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite entry in coefficient {name!r}")
            setattr(self, name, v)

    @classmethod
    def constant(cls, grid, sigma=0, gamma=0, alpha=0, beta=0, theta=0) -> CoefficientTable:
        return cls(grid, sigma, gamma, alpha, beta, theta)

    @property
    def sigma_gamma_zero(self) -> bool:
        """True iff the complex product sigma*gamma vanishes on every cell."""
        return bool(np.all(self.sigma * self.gamma == 0))

    @property
    def drift_speed(self) -> np.ndarray:
        """Characteristic speed ``beta*sigma + theta*gamma`` per cell."""
        return self.beta * self.sigma + self.theta * self.gamma

    def coarsen(self, factor: int) -> CoefficientTable:
        g = self.grid.coarsen(factor)
        return CoefficientTable(g, *(getattr(self, n)[::factor] for n in self.NAMES))

    def sub(self, k0: int) -> CoefficientTable:
        return CoefficientTable(self.grid.sub(k0), *(getattr(self, n)[k0:] for n in self.NAMES))

    def head(self, k1: int) -> CoefficientTable:
        return CoefficientTable(self.grid.head(k1), *(getattr(self, n)[:k1] for n in self.NAMES))


@dataclass(eq=False)
class PathBatch:
    seed: int
    n_paths: int
    grid: TimeGrid
    dB1: np.ndarray  # (n_paths, N)
    dB2: np.ndarray
    label: str = "paths"
    meta: dict = field(default_factory=dict)

    @property
    def dB(self) -> np.ndarray:
        return self.dB1 + 1j * self.dB2

    @property
    def dBbar(self) -> np.ndarray:
        return self.dB1 - 1j * self.dB2

    def coarsen(self, factor: int) -> PathBatch:
        """Same Brownian paths observed on every ``factor``-th knot."""
        g = self.grid.coarsen(factor)
        shape = (self.n_paths, g.n_cells, factor)
        return PathBatch(self.seed, self.n_paths, g,
                         self.dB1.reshape(shape).sum(axis=2),
                         self.dB2.reshape(shape).sum(axis=2),
                         self.label, {**self.meta, "coarsened_by": factor})

    def sub(self, k0: int) -> PathBatch:
        """Increments from knot ``k0`` onwards (paths restarted at t_k0)."""
        return PathBatch(self.seed, self.n_paths, self.grid.sub(k0),
                         self.dB1[:, k0:], self.dB2[:, k0:], self.label, dict(self.meta))


def stream_key(label: str) -> int:
    """Stable 64-bit key for a substream label (process-independent)."""
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _fill_block(seed, key, b, lo, hi, sqdt, dB1, dB2):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(key, b))
    rng = np.random.Generator(np.random.Philox(ss))
    u = rng.random((hi - lo, sqdt.size, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[..., 0]))  # 1 - u lies in (0, 1]
    phi = 2.0 * np.pi * u[..., 1]
    dB1[lo:hi] = r * np.cos(phi) * sqdt
    dB2[lo:hi] = r * np.sin(phi) * sqdt


def sample_increments(seed: int, n_paths: int, grid: TimeGrid, label: str = "paths",
                      memory_budget: int = DEFAULT_MEMORY_BUDGET) -> PathBatch:
    """Draw ``(dB1, dB2)``, each Normal(0, dt_k), for every path and cell."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    seed = int(seed) % 2**64
    need = n_paths * grid.n_cells * 8 * 4  # two outputs plus the uniform scratch
    if need > memory_budget:
        raise ResourceError(f"{n_paths} paths x {grid.n_cells} cells needs ~{need} bytes, "
                            f"budget is {memory_budget}")
    dB1 = np.empty((n_paths, grid.n_cells))
    dB2 = np.empty((n_paths, grid.n_cells))
    sqdt = np.sqrt(grid.dt)
    key = stream_key(label)
    blocks = [(b, lo, min(lo + BLOCK_SIZE, n_paths))
              for b, lo in enumerate(range(0, n_paths, BLOCK_SIZE))]
    workers = _worker_count()
    if workers == 1 or len(blocks) == 1:
        for b, lo, hi in blocks:
            _fill_block(seed, key, b, lo, hi, sqdt, dB1, dB2)
    else:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(lambda blk: _fill_block(seed, key, *blk, sqdt, dB1, dB2), blocks))
    return PathBatch(seed, n_paths, grid, dB1, dB2, label,
                     {"gaussian_transform": GAUSSIAN_TRANSFORM, "block_size": BLOCK_SIZE})


def _check_grids(coeffs: CoefficientTable, batch: PathBatch):
    if coeffs.grid != batch.grid:
        raise GridMismatchError("coefficient table and path batch use different grids")


def simulate_forward(x0: complex, coeffs: CoefficientTable, batch: PathBatch) -> np.ndarray:
    """Forward paths ``X[j, k]`` on every knot, shape ``(n_paths, N + 1)``."""
    _check_grids(coeffs, batch)
    # sigma dB + gamma dB~ = (sigma + gamma) dB1 + i (sigma - gamma) dB2
    dX = (coeffs.sigma + coeffs.gamma) * batch.dB1 + (1j * (coeffs.sigma - coeffs.gamma)) * batch.dB2
    X = np.empty((batch.n_paths, batch.grid.n_cells + 1), dtype=np.complex128)
    X[:, 0] = x0
    np.cumsum(dX, axis=1, out=X[:, 1:])
    X[:, 1:] += x0
    return X


def ito_integral(f, batch: PathBatch, against: str = "dB", X: np.ndarray | None = None):
    """Per-path ``sum_k f_k dB_k`` (or against ``dB~``).

    ``f`` is either an array broadcastable to ``(n_paths, N)``, or a callable
    ``f(k, past)`` that only ever sees ``past = X[:, :k+1]``; the callable
    form makes a non-adapted integrand impossible to express.
    """
    if against not in ("dB", "dBbar"):
        raise ValueError("against must be 'dB' or 'dBbar'")
    inc = batch.dB if against == "dB" else batch.dBbar
    if callable(f):
        if X is None:
            raise ValueError("callable integrand needs the forward paths X")
        vals = np.empty_like(inc)
        for k in range(batch.grid.n_cells):
            vals[:, k] = f(k, X[:, : k + 1])
    else:
        vals = np.broadcast_to(np.asarray(f, dtype=np.complex128), inc.shape)
    return (vals * inc).sum(axis=1)


def mean_stderr(v) -> tuple[complex, float]:
    """Sample mean and its standard error ``sqrt((var Re + var Im) / n)``."""
    v = np.asarray(v)
    n = v.shape[0]
    m = v.mean(axis=0)
    if n < 2:
        return m, float("inf")
    var = np.var(v.real, axis=0, ddof=1) + np.var(v.imag, axis=0, ddof=1)
    return m, float(np.sqrt(var / n))


def write_paths_csv(path, X: np.ndarray, grid: TimeGrid, max_paths: int | None = None):
    n = X.shape[0] if max_paths is None else min(max_paths, X.shape[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "k", "t_k", "Re X", "Im X"])
        for j in range(n):
            for k, t in enumerate(grid.times):
                w.writerow([j, k, repr(float(t)), repr(float(X[j, k].real)), repr(float(X[j, k].imag))])
