"""Finite-sample certificates for positive, negative and reflection definiteness."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import null_space

from .errors import NotNDError, ParamError, RangeError, ShapeError
from .kernels import KernelSpec
from .projline import INF, MoebiusMap, act, canonical_map, involution, points_equal

DEFAULT_TOL = 1e-9
RANK_TOL = 1e-9


class Verdict(str, Enum):
    PSD = "PSD"
    NOT_PSD = "NotPSD"
    ND = "ND"
    NOT_ND = "NotND"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass
class GramReport:
    """Eigen-diagnostics of a (projected) quadratic form.

    For ``kind == "nd"`` the eigenvalues are those of the negated form restricted
    to the sum-zero hyperplane, so ``min_eigenvalue >= 0`` still means "passes".
    """

    matrix: np.ndarray
    min_eigenvalue: float
    numerical_rank: int
    verdict: Verdict
    tolerance: float
    eigenvalues: np.ndarray = field(repr=False)
    kind: str = "pd"

    @property
    def ok(self) -> bool:
        return self.verdict in (Verdict.PSD, Verdict.ND)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.matrix)))) if self.matrix.size else 1.0

    @property
    def max_projected_eigenvalue(self) -> float:
        """Largest eigenvalue of the projected form (ND reports only)."""
        return -self.min_eigenvalue

    def to_dict(self) -> dict:
        return {
            "min_eigenvalue": float(self.min_eigenvalue),
            "rank": int(self.numerical_rank),
            "verdict": str(self.verdict),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _as_square(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ShapeError(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeError("matrix has non-finite entries")
    return 0.5 * (m + m.T)


def _classify(eigs: np.ndarray, scale: float, tol: float, good: Verdict, bad: Verdict) -> Verdict:
    lo = float(eigs.min()) if eigs.size else 0.0
    if lo >= -tol * scale:
        return good
    if lo < -10.0 * tol * scale:
        return bad
    return Verdict.INDETERMINATE


def _rank(eigs: np.ndarray, rank_tol: float) -> int:
    if eigs.size == 0:
        return 0
    top = float(eigs.max())
    if top <= 0.0:
        return 0
    return int(np.sum(eigs > rank_tol * top))


def check_pd(matrix, tol: float = DEFAULT_TOL, rank_tol: float = RANK_TOL) -> GramReport:
    m = _as_square(matrix)
    eigs = np.linalg.eigvalsh(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    verdict = _classify(eigs, scale, tol, Verdict.PSD, Verdict.NOT_PSD)
    return GramReport(m, float(eigs[0]), _rank(eigs, rank_tol), verdict, tol, eigs, "pd")


def sum_zero_basis(n: int) -> np.ndarray:
    """Orthonormal basis (n × (n-1)) of the hyperplane orthogonal to the ones vector."""
    return null_space(np.ones((1, n)))


def check_nd(matrix, tol: float = DEFAULT_TOL, rank_tol: float = RANK_TOL) -> GramReport:
    """Negative definiteness: the form restricted to {Σc = 0} must be ≼ 0."""
    m = _as_square(matrix)
    n = m.shape[0]
    scale = max(1.0, float(np.max(np.abs(m))))
    if n == 1:
        eigs = np.zeros(0)
    else:
        q = sum_zero_basis(n)
        proj = -(q.T @ m @ q)
        eigs = np.linalg.eigvalsh(0.5 * (proj + proj.T))
    verdict = _classify(eigs, scale, tol, Verdict.ND, Verdict.NOT_ND)
    lo = float(eigs.min()) if eigs.size else 0.0
    return GramReport(m, lo, _rank(eigs, rank_tol), verdict, tol, eigs, "nd")


def gram(kernel: Callable, points: Sequence, others: Sequence | None = None) -> np.ndarray:
    """M[i, j] = K(p_i, q_j); with ``others`` omitted only the upper triangle is evaluated."""
    pts = list(points)
    if others is not None:
        qs = list(others)
        return np.array([[kernel(p, q) for q in qs] for p in pts], dtype=float)
    n = len(pts)
    m = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            m[i, j] = m[j, i] = kernel(pts[i], pts[j])
    return m


def _apply(tau, x):
    return act(tau, x) if isinstance(tau, MoebiusMap) else tau(x)


def twisted_gram(kernel: Callable, points: Sequence, tau) -> np.ndarray:
    """M[i, j] = K(x_i, τ(x_j))."""
    images = [_apply(tau, x) for x in points]
    return gram(kernel, points, images)


def check_nd_semigroup(psi: Callable[[float], float], points: Sequence[float], tol: float = DEFAULT_TOL) -> GramReport:
    """ψ(s_i + s_j) on the additive semigroup (0, ∞) with involution s♯ = s."""
    pts = np.asarray(points, dtype=float)
    if np.any(pts <= 0):
        raise RangeError("semigroup points must be positive")
    m = np.array([[psi(a + b) for b in pts] for a in pts], dtype=float)
    return check_nd(m, tol)


@dataclass(frozen=True)
class ReflectionSetup:
    """Base points X, positive part X₊ ⊆ X, and an involution τ of X."""

    points: tuple
    positive_points: tuple
    involution: object

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "positive_points", tuple(self.positive_points))
        if not self.positive_points:
            raise ParamError("X+ must be nonempty")
        for x in self.positive_points:
            if not any(points_equal(x, y, 1e-12) for y in self.points):
                raise ParamError(f"positive point {x} is not in X")
        for x in self.points:
            back = _apply(self.involution, _apply(self.involution, x))
            if not points_equal(back, x, 1e-9):
                raise ParamError(f"tau is not an involution at {x}")

    @classmethod
    def from_positive(cls, positive_points: Sequence, tau) -> "ReflectionSetup":
        """X = X₊ ∪ τ(X₊)."""
        pos = tuple(positive_points)
        return cls(pos + tuple(_apply(tau, x) for x in pos), pos, tau)


class ReflectionResult(NamedTuple):
    full: GramReport
    twisted: GramReport

    @property
    def ok(self) -> bool:
        return self.full.ok and self.twisted.ok


def check_reflection_positive(kernel: Callable, setup: ReflectionSetup, tol: float = DEFAULT_TOL) -> ReflectionResult:
    full = check_pd(gram(kernel, setup.points), tol)
    tw = check_pd(twisted_gram(kernel, setup.positive_points, setup.involution), tol)
    return ReflectionResult(full, tw)


def check_reflection_negative(
    psi: Callable[[float], float], points_G: Sequence[float], points_S: Sequence[float], tol: float = DEFAULT_TOL
) -> ReflectionResult:
    g = np.asarray(points_G, dtype=float)
    m = np.array([[psi(a - b) for b in g] for a in g], dtype=float)
    return ReflectionResult(check_nd(m, tol), check_nd_semigroup(psi, points_S, tol))


@dataclass
class SchoenbergReport:
    nd: GramReport
    pd: list[tuple[float, GramReport]]

    @property
    def all_pd(self) -> bool:
        return all(r.ok for _, r in self.pd)

    @property
    def consistent(self) -> bool:
        """ND of Q forces every exp(-hQ) to be PSD.

        The converse needs all h > 0, so a finite h list that happens to pass
        for a non-ND Q is not a contradiction.
        """
        if self.nd.verdict is Verdict.ND:
            return all(r.verdict is not Verdict.NOT_PSD for _, r in self.pd)
        return True


def schoenberg_check(Q: Callable, points: Sequence, h_values: Sequence[float], tol: float = DEFAULT_TOL) -> SchoenbergReport:
    """Check exp(-hQ) for each h alongside the negative definiteness of Q."""
    hs = [float(h) for h in h_values]
    if not hs or any(not (h > 0 and math.isfinite(h)) for h in hs):
        raise ParamError("h values must be finite and positive")
    q = gram(Q, points)
    return SchoenbergReport(check_nd(q, tol), [(h, check_pd(np.exp(-h * q), tol)) for h in hs])


# ---------------------------------------------------------------------------
# the measure μ = δ_{2H} + Σ binom(2H, k)(-1)^{k-1} δ_k


def mu_coefficients(H: float, n_terms: int) -> list[tuple[float, float]]:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise ParamError("H must lie in (0, 1)")
    if int(n_terms) != n_terms or n_terms < 1:
        raise ParamError("n_terms must be a positive integer")
    a = 2.0 * H
    out = [(a, 1.0)]
    binom = 1.0
    for k in range(1, int(n_terms) + 1):
        binom *= (a - k + 1) / k
        out.append((float(k), (binom if k % 2 == 1 else -binom) + 0.0))  # + 0.0 drops -0.0
    return out


def mu_measure(H: float, n_terms: int) -> dict[float, float]:
    """Atoms of μ with coincident support points merged and zero weights dropped."""
    atoms: dict[float, float] = {}
    for x, w in mu_coefficients(H, n_terms):
        atoms[x] = atoms.get(x, 0.0) + w
    return {x: w for x, w in atoms.items() if w != 0.0}


# ---------------------------------------------------------------------------
# helix embedding


def helix_embed(D, i0: int = 0, tol: float = 1e-12, nd_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Points η_i with ‖η_i - η_j‖² = D[i, j] and η_{i0} = 0.

    Factorizes C[i, j] = ½(D[i, i0] + D[j, i0] - D[i, j]) and keeps the
    eigen-directions above ``tol`` relative to the largest eigenvalue.
    """
    d = np.asarray(D, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
        raise ShapeError("distance matrix must be square and nonempty")
    n = d.shape[0]
    scale = max(1.0, float(np.max(np.abs(d))))
    if np.max(np.abs(d - d.T)) > 1e-12 * scale or np.max(np.abs(np.diag(d))) > 1e-12 * scale:
        raise ShapeError("distance matrix must be symmetric with zero diagonal")
    if not 0 <= i0 < n:
        raise ParamError("basepoint index out of range")
    report = check_nd(d, nd_tol)
    if report.verdict is Verdict.NOT_ND:
        raise NotNDError(f"distance matrix is not negative definite (min eig {report.min_eigenvalue:.3g})")
    c = 0.5 * (d[:, [i0]] + d[[i0], :] - d)
    c = 0.5 * (c + c.T)
    lam, vec = np.linalg.eigh(c)
    top = float(lam.max()) if n else 0.0
    keep = lam > tol * top if top > 0 else np.zeros_like(lam, dtype=bool)
    coords = vec[:, keep] * np.sqrt(lam[keep])
    if coords.shape[1] == 0:
        coords = np.zeros((n, 1))
    coords[i0] = 0.0
    return coords


def embedding_residual(coords: np.ndarray, D) -> float:
    """max |‖η_i - η_j‖² - D[i, j]|."""
    diff = coords[:, None, :] - coords[None, :, :]
    return float(np.max(np.abs(np.sum(diff * diff, axis=-1) - np.asarray(D, dtype=float))))


# ---------------------------------------------------------------------------
# reflection-positivity threshold scans


def chebyshev_points(n: int, rng: np.random.Generator, jitter: float = 0.3, gap: float = 0.02) -> np.ndarray:
    """Jittered Chebyshev nodes in (-1, 1) kept at distance ``gap`` from -1, 0 and 1."""
    k = np.arange(1, n + 1)
    angles = (2 * k - 1) * np.pi / (2 * n)
    angles = angles + jitter * rng.uniform(-1, 1, n) * np.pi / (2 * n)
    u = np.cos(angles)
    u = np.clip(u, -1 + gap, 1 - gap)
    small = np.abs(u) < gap
    u[small] = np.where(u[small] >= 0, gap, -gap)
    return u


def random_triple(rng: np.random.Generator, min_gap: float = 0.25, p_inf: float = 0.15):
    """Three well separated projective points, occasionally including ∞."""
    while True:
        pts = list(rng.normal(scale=2.0, size=3))
        if rng.uniform() < p_inf:
            pts[rng.integers(3)] = INF
        finite = [p for p in pts if p is not INF]
        if all(abs(a - b) >= min_gap for i, a in enumerate(finite) for b in finite[i + 1 :]):
            return tuple(pts)


def projective_setup(alpha, beta, gamma, u: Sequence[float]) -> ReflectionSetup:
    """X₊ is the image of ``u ⊂ (-1, 1) \\ {0}`` in the component of alpha, τ = θ^{α,β,γ}."""
    g = canonical_map(alpha, beta, gamma)
    ginv = g.inverse()
    theta = involution(alpha, beta, gamma)
    pos = [act(ginv, float(x)) for x in u]
    return ReflectionSetup.from_positive(pos, theta)


@dataclass
class ScanRow:
    H: float
    n_psd: int
    n_not_psd: int
    n_indeterminate: int
    worst_ratio: float  # min twisted eigenvalue / scale over setups

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "n_psd": self.n_psd,
            "n_not_psd": self.n_not_psd,
            "n_indeterminate": self.n_indeterminate,
            "worst_ratio": self.worst_ratio,
            "verdict": "PSD" if self.n_not_psd == 0 and self.n_indeterminate == 0 else (
                "NotPSD" if self.n_not_psd else "Indeterminate"),
        }


def threshold_scan(
    H_values: Sequence[float],
    n_setups: int = 20,
    n_points: int = 8,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    setup: tuple | None = None,
) -> list[ScanRow]:
    """Reflection positivity of the normalized kernel across H.

    Each setup draws (α, β, γ) (or uses ``setup``) and a jittered point set; the
    same setups are reused for every H so rows are comparable.
    """
    rng = np.random.default_rng(seed)
    setups = []
    for _ in range(n_setups):
        triple = setup if setup is not None else random_triple(rng)
        setups.append((triple, projective_setup(*triple, chebyshev_points(n_points, rng))))
    rows = []
    for H in H_values:
        counts = {Verdict.PSD: 0, Verdict.NOT_PSD: 0, Verdict.INDETERMINATE: 0}
        worst = math.inf
        for (alpha, _, gamma), rs in setups:
            spec = KernelSpec.of("normalized_fbm", H=H, alpha=alpha, gamma=gamma)
            res = check_reflection_positive(spec, rs, tol)
            verdict = Verdict.PSD if res.ok else (
                Verdict.NOT_PSD if Verdict.NOT_PSD in (res.full.verdict, res.twisted.verdict) else Verdict.INDETERMINATE)
            counts[verdict] += 1
            worst = min(worst, res.twisted.min_eigenvalue / res.twisted.scale)
        rows.append(ScanRow(float(H), counts[Verdict.PSD], counts[Verdict.NOT_PSD], counts[Verdict.INDETERMINATE], worst))
    return rows
