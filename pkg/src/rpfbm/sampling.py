"""Gaussian path sampling from kernel descriptors and Monte Carlo covariance checks."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .definiteness import Verdict, check_pd, gram
from .errors import JitterExceededError, NotPSDError, ParamError, ShapeError, StabilizerError
from .kernels import KernelSpec
from .projline import INF, MoebiusMap, act, points_equal

JITTER_START = 1e-14
JITTER_MAX = 1e-6
SE_GATE = 5.0
_ZERO_VAR = 1e-14


def _grid_repr(grid) -> list:
    out = []
    for p in grid:
        if p is INF:
            out.append("inf")
        elif np.ndim(p) == 0:
            out.append(float(p))
        else:
            out.append([float(v) for v in np.ravel(p)])
    return out


@dataclass
class PathBatch:
    """n_paths × n_points sample, reproducible from (seed, grid, kernel)."""

    grid: tuple
    paths: np.ndarray
    seed: int
    kernel: KernelSpec
    jitter_used: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "grid": _grid_repr(self.grid),
            "kernel": self.kernel.to_dict(),
            "jitter_used": self.jitter_used,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        for row in self.paths:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def write(self, csv_path: str) -> str:
        """Write the CSV and a ``.json`` sidecar next to it; returns the sidecar path."""
        with open(csv_path, "w", newline="") as fh:
            fh.write(self.to_csv())
        side = csv_path.rsplit(".", 1)[0] + ".json"
        with open(side, "w") as fh:
            json.dump(self.sidecar(), fh)
        return side


def cholesky_jittered(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor of m, adding diagonal jitter from 1e-14 to 1e-6 (relative) if needed."""
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    eye = np.eye(m.shape[0])
    try:
        return np.linalg.cholesky(m), 0.0
    except np.linalg.LinAlgError:
        pass
    j = JITTER_START
    while j <= JITTER_MAX * (1 + 1e-9):
        try:
            return np.linalg.cholesky(m + j * scale * eye), j * scale
        except np.linalg.LinAlgError:
            j *= 10.0
    raise JitterExceededError(f"matrix is not positive definite even with jitter {JITTER_MAX:g}·scale")


def path_normals(seed: int, index: int, dim: int) -> np.ndarray:
    """Standard normals for one path from a Philox stream keyed by (seed, path index)."""
    bitgen = np.random.Philox(key=seed, counter=[index, 0, 0, 0])
    return np.random.Generator(bitgen).standard_normal(dim)


def _normals(seed: int, n_paths: int, dim: int, jobs: int) -> np.ndarray:
    z = np.empty((n_paths, dim))

    def fill(lo: int, hi: int):
        for i in range(lo, hi):
            z[i] = path_normals(seed, i, dim)

    if jobs <= 1 or n_paths < 2 * jobs:
        fill(0, n_paths)
    else:
        edges = np.linspace(0, n_paths, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(lambda k: fill(edges[k], edges[k + 1]), range(jobs)))
    return z


def sample(spec: KernelSpec, grid: Sequence, n_paths: int, seed: int, jobs: int = 1, tol: float = 1e-9) -> PathBatch:
    """Centered Gaussian paths with covariance Gram(spec, grid).

    Grid points of zero variance give identically zero columns.  The result does
    not depend on ``jobs``: normals are keyed by path index and the product with
    the Cholesky factor is one matrix multiplication.
    """
    if int(n_paths) != n_paths or n_paths < 1:
        raise ParamError("n_paths must be a positive integer")
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise ParamError("seed must be a 64-bit unsigned integer")
    grid = tuple(grid)
    if not grid:
        raise ShapeError("grid must be nonempty")
    m = gram(spec, grid)
    report = check_pd(m, tol)
    if report.verdict is Verdict.NOT_PSD:
        raise NotPSDError(f"Gram matrix is not PSD (min eig {report.min_eigenvalue:.3g})")
    scale = max(1.0, float(np.max(np.abs(m))))
    live = np.flatnonzero(np.diag(m) > _ZERO_VAR * scale)
    paths = np.zeros((int(n_paths), len(grid)))
    jitter = 0.0
    if live.size:
        L, jitter = cholesky_jittered(m[np.ix_(live, live)])
        z = _normals(int(seed), int(n_paths), live.size, max(1, int(jobs)))
        paths[:, live] = z @ L.T
    return PathBatch(grid, paths, int(seed), spec, jitter)


def empirical_cov(batch) -> np.ndarray:
    """Unbiased sample covariance of the columns."""
    x = batch.paths if isinstance(batch, PathBatch) else np.asarray(batch, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeError("need a 2-D array with at least two paths")
    return np.atleast_2d(np.cov(x, rowvar=False, ddof=1))


def standard_errors(cov: np.ndarray, n: int) -> np.ndarray:
    """SE of the sample covariance: sqrt((C_ii C_jj + C_ij²)/n) for centered Gaussians."""
    d = np.diag(cov)
    return np.sqrt((np.outer(d, d) + cov * cov) / n)


@dataclass
class GateResult:
    ok: bool
    max_z: float
    max_abs_error: float


def se_gate(emp: np.ndarray, cov: np.ndarray, n: int, k: float = SE_GATE) -> GateResult:
    """Every entry of ``emp`` within k standard errors of ``cov``."""
    se = standard_errors(cov, n)
    err = np.abs(emp - cov)
    degenerate = se == 0
    z = np.where(degenerate, 0.0, err / np.where(degenerate, 1.0, se))
    ok = bool(np.all(z <= k) and np.all(err[degenerate] <= 1e-12))
    return GateResult(ok, float(z.max()), float(err.max()))


@dataclass
class InvarianceReport:
    deterministic_residual: float
    deterministic_ok: bool
    gate: GateResult

    @property
    def ok(self) -> bool:
        return self.deterministic_ok and self.gate.ok

    def to_dict(self) -> dict:
        return {
            "deterministic_residual": self.deterministic_residual,
            "deterministic_ok": self.deterministic_ok,
            "max_z": self.gate.max_z,
            "statistical_ok": self.gate.ok,
            "ok": self.ok,
        }


def invariance_test(
    spec: KernelSpec, g: MoebiusMap, grid: Sequence, n_paths: int, seed: int, jobs: int = 1, det_tol: float = 1e-10
) -> InvarianceReport:
    """Stabilizer invariance of the normalized kernel, exactly and in distribution."""
    if spec.family != "normalized_fbm":
        raise ParamError("invariance_test expects a normalized_fbm kernel")
    alpha, gamma = spec.params["alpha"], spec.params["gamma"]
    ga, gc = act(g, alpha), act(g, gamma)
    fixed = points_equal(ga, alpha, 1e-9) and points_equal(gc, gamma, 1e-9)
    swapped = points_equal(ga, gamma, 1e-9) and points_equal(gc, alpha, 1e-9)
    if not (fixed or swapped):
        raise StabilizerError("g does not preserve the pair {alpha, gamma}")
    grid = tuple(grid)
    image = tuple(act(g, x) for x in grid)
    base = gram(spec, grid)
    moved = gram(spec, image)
    resid = float(np.max(np.abs(base - moved)))
    batch = sample(spec, image, n_paths, seed, jobs)
    gate = se_gate(empirical_cov(batch), base, n_paths)
    return InvarianceReport(resid, resid <= det_tol, gate)


def stationarity_test(spec: KernelSpec, grid: Sequence[float], h: float) -> float:
    """max |Gram(grid) - Gram(grid + h)|."""
    g = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(gram(spec, g) - gram(spec, g + h))))


def variogram(spec: KernelSpec, s: float, t: float) -> float:
    """D(s, t) = C(s, s) + C(t, t) - 2C(s, t)."""
    return spec(s, s) + spec(t, t) - 2.0 * spec(s, t)


def time_inversion_gram(H: float, grid: Sequence[float]) -> np.ndarray:
    """Gram of X_t = |t|^{2H} B_{1/t}, i.e. |s|^{2H}|t|^{2H} C^H(1/s, 1/t)."""
    spec = KernelSpec.of("fbm", H=H)
    g = np.asarray(grid, dtype=float)
    if np.any(g == 0):
        raise ParamError("time inversion needs nonzero times")
    w = np.abs(g) ** (2 * H)
    return w[:, None] * gram(spec, 1.0 / g) * w[None, :]
