"""Dataset files, result files and a synthetic heat-equation generator.

File layout
-----------
mass matrix
    Matrix Market, coordinate or array format (``.mtx``).
snapshots
    CSV with one column per snapshot (optional non-numeric header row), or
    raw little-endian float64 stored column by column with a sidecar
    ``<path>.shape`` holding ``"m s"``.
times
    One time point per line (any whitespace separation is accepted).
"""

import json
import logging
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .exceptions import DataFormatError, DimensionMismatchError, GridError
from .linalg import TimeGrid
from .validation import check_mass_matrix

logger = logging.getLogger(__name__)

__all__ = [
    "SnapshotRecord",
    "Dataset",
    "read_mass_matrix",
    "read_times",
    "read_snapshots",
    "write_dataset",
    "write_results",
    "read_results",
    "generate_heat_fem_data",
    "heat_fem_matrices",
]

BINARY_SUFFIXES = {".bin", ".f64", ".raw"}
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class SnapshotRecord:
    column: np.ndarray
    delta: float


class Dataset:
    """Mass matrix, time grid and a column source delivered one snapshot at a time."""

    def __init__(self, mass, grid, columns, m, s):
        self.mass = mass
        self.grid = grid
        self._columns = columns
        self.m = m
        self.s = s
        if grid.n_steps != s:
            raise DimensionMismatchError(
                f"snapshot file has {s} columns but the time grid has {grid.n_steps} steps"
            )
        if mass.shape[0] != m:
            raise DimensionMismatchError(
                f"snapshots have {m} rows but the mass matrix is {mass.shape[0]}x{mass.shape[0]}"
            )

    @classmethod
    def from_matrix(cls, U, mass, grid):
        U = np.asarray(U, dtype=float)

        def columns():
            for j in range(U.shape[1]):
                yield U[:, j]

        ds = cls(mass, grid, columns, U.shape[0], U.shape[1])
        ds._matrix = U
        return ds

    def snapshots(self, prefetch=0):
        """Yield :class:`SnapshotRecord` objects in file order.

        With ``prefetch > 0`` columns are read on a producer thread through a
        bounded queue of that size.
        """
        if prefetch <= 0:
            for col, delta in zip(self._columns(), self.grid.deltas):
                yield SnapshotRecord(np.asarray(col, dtype=float), float(delta))
            return
        q = queue.Queue(maxsize=prefetch)
        done = object()

        def produce():
            try:
                for item in zip(self._columns(), self.grid.deltas):
                    q.put(item)
            except BaseException as exc:  # surfaced in the consumer
                q.put(exc)
            q.put(done)

        threading.Thread(target=produce, daemon=True).start()
        while (item := q.get()) is not done:
            if isinstance(item, BaseException):
                raise item
            col, delta = item
            yield SnapshotRecord(np.asarray(col, dtype=float), float(delta))

    def matrix(self):
        U = getattr(self, "_matrix", None)
        if U is None:
            U = np.column_stack(list(self._columns())) if self.s else np.zeros((self.m, 0))
            self._matrix = U
        return U


def read_mass_matrix(path):
    """Read and validate a symmetric positive definite Matrix Market file.

    Coordinate files are returned as CSR, array files as dense arrays.
    """
    try:
        M = scipy.io.mmread(str(path))
    except (ValueError, IndexError, TypeError) as exc:
        raise DataFormatError(f"{path}: cannot parse Matrix Market file ({exc})") from None
    if sp.issparse(M):
        M = M.tocsr()
    return check_mass_matrix(M)


def read_times(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        points = np.array(text.split(), dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    try:
        return TimeGrid(points)
    except GridError as exc:
        raise GridError(f"{path}: {exc}") from None


def _read_csv(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [ln for ln in lines if ln.strip()]
    if rows:
        try:
            [float(v) for v in rows[0].split(",")]
        except ValueError:
            rows = rows[1:]
    try:
        U = np.array([[float(v) for v in ln.split(",")] for ln in rows], dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    if U.ndim != 2:
        raise DataFormatError(f"{path}: rows have inconsistent lengths")
    return U


def _binary_columns(path, m, s):
    def columns():
        with open(path, "rb") as fh:
            for _ in range(s):
                buf = fh.read(8 * m)
                if len(buf) != 8 * m:
                    raise DataFormatError(f"{path}: truncated binary snapshot file")
                yield np.frombuffer(buf, dtype="<f8").copy()

    return columns


def read_snapshots(path, grid_path, mass):
    """Open a snapshot file as a streaming :class:`Dataset`.

    Binary files (``.bin``, ``.f64``, ``.raw``) are read one column at a
    time; CSV files are parsed up front.
    """
    path = Path(path)
    grid = read_times(grid_path)
    if path.suffix in BINARY_SUFFIXES:
        shape_path = Path(str(path) + ".shape")
        try:
            m, s = (int(v) for v in shape_path.read_text(encoding="utf-8").split())
        except ValueError:
            raise DataFormatError(f"{shape_path}: expected a line 'm s'") from None
        size = path.stat().st_size
        if size != 8 * m * s:
            raise DimensionMismatchError(
                f"{path}: {size} bytes does not match shape {m}x{s} of float64"
            )
        return Dataset(mass, grid, _binary_columns(path, m, s), m, s)
    U = _read_csv(path)
    return Dataset.from_matrix(U, mass, grid)


def _write_matrix_market(path, M):
    """Symmetric coordinate Matrix Market (lower triangle) at full precision."""
    C = sp.tril(sp.coo_matrix(M)).tocoo()
    order = np.lexsort((C.row, C.col))
    lines = [
        "%%MatrixMarket matrix coordinate real symmetric",
        f"{C.shape[0]} {C.shape[1]} {C.nnz}",
    ]
    lines += [
        f"{i + 1} {j + 1} {FLOAT_FMT % v}"
        for i, j, v in zip(C.row[order], C.col[order], C.data[order])
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_dataset(out, mass, U, grid, fmt="csv"):
    """Write ``mass.mtx``, ``snapshots.csv`` (or ``.bin``) and ``times.txt`` into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix_market(out / "mass.mtx", mass)
    if fmt == "csv":
        snap = out / "snapshots.csv"
        np.savetxt(snap, U, fmt=FLOAT_FMT, delimiter=",")
    elif fmt == "bin":
        snap = out / "snapshots.bin"
        snap.write_bytes(np.asarray(U, dtype="<f8").tobytes(order="F"))
        Path(str(snap) + ".shape").write_text(f"{U.shape[0]} {U.shape[1]}\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")
    np.savetxt(out / "times.txt", grid.points, fmt=FLOAT_FMT)
    return {"mass": out / "mass.mtx", "snapshots": snap, "times": out / "times.txt"}


def _orth_defect(G):
    return float(np.abs(G - np.eye(G.shape[0])).max()) if G.size else 0.0


def write_results(basis, temps, state, path, *, tol=None, tol_sv=None, branches=None,
                  extra=None):
    """Write POD results into directory ``path``.

    Files: ``singular_values.csv``, ``modes.csv``, ``temporal.csv`` (only when
    ``temps`` is given; plain-indicator coefficients) and ``summary.json``.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    sigma = np.asarray(basis.sigma, dtype=float)
    energy = sigma**2
    total = energy.sum()
    cum = np.cumsum(energy) / total if total > 0 else np.zeros_like(energy)
    with open(out / "singular_values.csv", "w", encoding="utf-8") as fh:
        fh.write("index,sigma,sigma_squared,cumulative_energy_fraction\n")
        for i, (s_, e_, c_) in enumerate(zip(sigma, energy, cum), start=1):
            fh.write(f"{i},{FLOAT_FMT % s_},{FLOAT_FMT % e_},{FLOAT_FMT % c_}\n")
    np.savetxt(out / "modes.csv", basis.modes, fmt=FLOAT_FMT, delimiter=",")

    M = basis.mass
    orth_W = None
    if temps is not None:
        plain = temps.plain()
        np.savetxt(out / "temporal.csv", plain, fmt=FLOAT_FMT, delimiter=",")
        orth_W = _orth_defect(plain.T @ (plain * temps.grid.deltas[:, None]))
        s = temps.grid.n_steps
    else:
        stale = out / "temporal.csv"
        if stale.exists():
            stale.unlink()
        s = getattr(state, "ell", None)
    summary = {
        "k": int(sigma.shape[0]),
        "m": int(basis.modes.shape[0]),
        "s": None if s is None else int(s),
        "tol": tol,
        "tol_sv": tol_sv,
        "branches": dict(branches) if branches is not None else None,
        "orth_defect_V": _orth_defect(basis.modes.T @ (M @ basis.modes)),
        "orth_defect_W": orth_W,
        "temporal": "written" if temps is not None else "absent (right vectors not tracked)",
    }
    variant = getattr(state, "variant", None)
    if variant is not None:
        summary["variant"] = variant.value
    if extra:
        summary.update(extra)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote results (k=%d) to %s", summary["k"], out)
    return summary


def read_results(path):
    """Read a results directory written by :func:`write_results`."""
    path = Path(path)
    sv = np.loadtxt(path / "singular_values.csv", delimiter=",", skiprows=1, ndmin=2)
    modes = np.loadtxt(path / "modes.csv", delimiter=",", ndmin=2)
    temporal = None
    if (path / "temporal.csv").exists():
        temporal = np.loadtxt(path / "temporal.csv", delimiter=",", ndmin=2)
    summary = json.loads((path / "summary.json").read_text(encoding="utf-8"))
    k = summary["k"]
    return {
        "sigma": sv[:, 1],
        "modes": modes.reshape(summary["m"], k),
        "temporal": None if temporal is None else temporal.reshape(-1, k),
        "summary": summary,
    }


def heat_fem_matrices(n):
    """Mass and stiffness matrices of linear elements on ``(0, 1)`` with Dirichlet ends.

    Unknowns are the ``n - 1`` interior nodes, ``h = 1/n``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 elements, got n={n}")
    h = 1.0 / n
    m = n - 1
    ones = np.ones(m)
    mass = sp.diags([ones[1:], 4 * ones, ones[1:]], [-1, 0, 1], format="csr") * (h / 6.0)
    stiff = sp.diags([-ones[1:], 2 * ones, -ones[1:]], [-1, 0, 1], format="csr") / h
    return mass, stiff


def _time_points(steps, T, grid, ratio):
    if grid == "uniform":
        pts = np.linspace(0.0, T, steps + 1)
    elif grid == "geometric":
        if ratio <= 0:
            raise ValueError("geometric ratio must be positive")
        widths = ratio ** np.arange(steps)
        pts = np.concatenate([[0.0], np.cumsum(widths)]) * (T / widths.sum())
        pts[-1] = T
    else:
        raise ValueError(f"unknown grid kind {grid!r}")
    return TimeGrid(pts)


def generate_heat_fem_data(n, steps, T=1.0, diffusivity=1.0, seed=0, grid="uniform",
                           ratio=1.05, modes=None):
    """Backward-Euler snapshots of the 1-D heat equation ``u_t = kappa u_xx``.

    Snapshot ``j`` is the discrete solution on ``(t_j, t_{j+1})``; the first
    one is the nodal interpolant of a random smooth initial condition built
    from ``modes`` sine modes (default: all ``n - 1``) with ``1/q^2``
    decaying amplitudes. Returns an in-memory :class:`Dataset`.
    """
    if n < 2:
        raise ValueError(f"need at least 2 elements, got n={n}")
    if steps < 1:
        raise ValueError(f"need at least 1 time step, got steps={steps}")
    if not T > 0:
        raise ValueError("final time T must be positive")
    if diffusivity < 0:
        raise ValueError("diffusivity must be nonnegative")
    mass, stiff = heat_fem_matrices(n)
    tgrid = _time_points(steps, T, grid, ratio)

    rng = np.random.default_rng(seed)
    modes = n - 1 if modes is None else modes
    q = np.arange(1, modes + 1)
    amp = rng.standard_normal(modes) / q**2
    x = np.arange(1, n) / n
    u = np.sin(np.pi * np.outer(x, q)) @ amp

    U = np.empty((n - 1, steps))
    U[:, 0] = u
    lu_cache = {}
    for j in range(1, steps):
        delta = tgrid.deltas[j - 1]
        lu = lu_cache.get(delta)
        if lu is None:
            lu = splu((mass + (delta * diffusivity) * stiff).tocsc())
            lu_cache[delta] = lu
        u = lu.solve(mass @ u)
        U[:, j] = u
    return Dataset.from_matrix(U, mass, tgrid)
