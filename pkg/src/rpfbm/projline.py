"""Real projective line R ∪ {∞} and the Moebius action of GL2(R) on it.

Points are plain floats plus the singleton ``INF``.  Every formula below
carries its explicit limit at infinity instead of relying on large floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateError, NormalizationError, ParamError, PoleError

#: relative size below which ``c*x + d`` is treated as an exact pole
POLE_TOL = 1e-12
#: relative floor for ``|det g|`` (relative to the largest squared entry)
DET_FLOOR = 1e-12


class _Infinity:
    """The point at infinity of the projective line (a singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self or (isinstance(other, (float, int)) and math.isinf(other))

    def __hash__(self):
        return hash("rpfbm-infinity")

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ProjPoint = Union[float, _Infinity]


def is_inf(x) -> bool:
    return x is INF or (isinstance(x, (float, int, np.floating)) and math.isinf(x))


def as_point(x) -> ProjPoint:
    """Coerce ``x`` to a projective point; accepts ``"inf"``, ``±math.inf`` and ``INF``."""
    if x is INF:
        return INF
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "-inf", "infinity", "∞"):
            return INF
        x = float(s)
    x = float(x)
    if math.isnan(x):
        raise ParamError("NaN is not a point of the projective line")
    if math.isinf(x):
        return INF
    return x


def points_equal(x, y, tol: float = 0.0) -> bool:
    """Exact for ∞, relative-``tol`` comparison for finite values."""
    x, y = as_point(x), as_point(y)
    if x is INF or y is INF:
        return x is y
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def _require_distinct(*pts, tol: float = 0.0):
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if points_equal(pts[i], pts[j], tol):
                raise DegenerateError(f"points must be mutually distinct, got {pts!r}")


@dataclass(frozen=True)
class MoebiusMap:
    """The fractional linear map x ↦ (ax + b)/(cx + d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in "abcd":
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParamError(f"matrix entry {name} must be finite")
            object.__setattr__(self, name, v)
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0.0 or abs(self.det) < DET_FLOOR * scale * scale:
            raise DegenerateError(f"singular matrix {self.entries}")

    @classmethod
    def from_matrix(cls, m) -> "MoebiusMap":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def translation(cls, t: float) -> "MoebiusMap":
        return cls(1.0, t, 0.0, 1.0)

    @classmethod
    def dilation(cls, r: float) -> "MoebiusMap":
        """x ↦ r·x"""
        return cls(r, 0.0, 0.0, 1.0)

    @property
    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def is_affine(self) -> bool:
        return self.c == 0.0

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return MoebiusMap(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def __call__(self, x):
        return act(self, x)

    def inverse(self) -> "MoebiusMap":
        # adjugate: projectively the inverse, same determinant
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def normalized(self) -> "MoebiusMap":
        """Divide by the entry of largest magnitude (keeps the sign of det)."""
        e = np.array(self.entries)
        k = e[np.argmax(np.abs(e))]
        return MoebiusMap(*(e / k))

    def sl2(self) -> "MoebiusMap":
        """Rescale to determinant one; impossible for orientation-reversing maps."""
        det = self.det
        if det <= 0:
            raise NormalizationError("negative determinant cannot be scaled to 1")
        s = 1.0 / math.sqrt(det)
        return MoebiusMap(self.a * s, self.b * s, self.c * s, self.d * s)

    def proj_equal(self, other: "MoebiusMap", tol: float = 1e-9) -> bool:
        """Equality up to a nonzero scalar factor."""
        x = np.array(self.entries)
        y = np.array(other.entries)
        x = x / np.max(np.abs(x))
        y = y / np.max(np.abs(y))
        # scaling by the max-magnitude entry fixes the vector up to sign
        return bool(min(np.max(np.abs(x - y)), np.max(np.abs(x + y))) <= tol)

    def __repr__(self):
        return f"MoebiusMap([[{self.a:.6g}, {self.b:.6g}], [{self.c:.6g}, {self.d:.6g}]])"


SIGMA = MoebiusMap(0.0, 1.0, 1.0, 0.0)


def act(g: MoebiusMap, x, pole_tol: float = POLE_TOL) -> ProjPoint:
    """g.x = (ax + b)/(cx + d) on R ∪ {∞}; total."""
    x = as_point(x)
    a, b, c, d = g.entries
    if x is INF:
        if c == 0.0:
            return INF
        v = a / c
        return v if math.isfinite(v) else INF
    den = c * x + d
    if den == 0.0 or abs(den) <= pole_tol * (abs(c * x) + abs(d)):
        return INF
    v = (a * x + b) / den
    return v if math.isfinite(v) else INF


def derivative(g: MoebiusMap, x: float, pole_tol: float = POLE_TOL) -> float:
    """g'(x) = det(g)/(cx + d)^2 at a finite non-pole x."""
    x = as_point(x)
    if x is INF:
        raise PoleError("derivative is only defined at finite points")
    den = g.c * x + g.d
    if den == 0.0 or abs(den) <= pole_tol * (abs(g.c * x) + abs(g.d)):
        raise PoleError(f"x = {x} is a pole of {g!r}")
    val = g.det / den / den
    if not math.isfinite(val):
        raise PoleError(f"derivative overflows at x = {x}")
    return val


def cross_ratio(z, z1, z2, z3) -> ProjPoint:
    """CR(z, z1, z2, z3) = (z - z1)(z2 - z3) / ((z - z3)(z2 - z1)).

    Each point occurs in exactly one numerator and one denominator factor, and
    the two divergent factors belonging to an infinite point cancel to 1.
    Returns ``INF`` when z = z3.
    """
    z, z1, z2, z3 = (as_point(p) for p in (z, z1, z2, z3))
    _require_distinct(z1, z2, z3)
    if points_equal(z, z3):
        return INF
    if points_equal(z, z1):
        return 0.0
    if points_equal(z, z2):
        return 1.0

    def diff(p, q):
        return 1.0 if (p is INF or q is INF) else p - q

    # pairwise quotients keep huge finite points from overflowing
    return (diff(z, z1) / diff(z, z3)) * (diff(z2, z3) / diff(z2, z1))


def canonical_map(alpha, t, gamma) -> MoebiusMap:
    """The Moebius map sending (alpha, t, gamma) to (0, 1, ∞).

    For finite points this is z ↦ (z - alpha)/(z - gamma) · (t - gamma)/(t - alpha);
    an infinite argument drops the factors that contain it.
    """
    alpha, t, gamma = as_point(alpha), as_point(t), as_point(gamma)
    _require_distinct(alpha, t, gamma)
    if alpha is INF:
        return MoebiusMap(0.0, t - gamma, 1.0, -gamma)
    if gamma is INF:
        return MoebiusMap(1.0, -alpha, 0.0, t - alpha)
    if t is INF:
        return MoebiusMap(1.0, -alpha, 1.0, -gamma)
    p, q = t - gamma, t - alpha
    return MoebiusMap(p, -alpha * p, q, -gamma * q)


def involution(alpha, beta, gamma) -> MoebiusMap:
    """The unique involution exchanging alpha and gamma and fixing beta.

    Conjugate of x ↦ 1/x by the canonical map of (alpha, beta, gamma).
    """
    g = canonical_map(alpha, beta, gamma)
    return (g.inverse() @ SIGMA @ g).normalized()


def second_fixed_point(alpha, beta, gamma) -> ProjPoint:
    """Fixed point of ``involution(alpha, beta, gamma)`` other than beta.

    x ↦ 1/x fixes ±1, so the other fixed point is the preimage of -1.
    """
    return act(canonical_map(alpha, beta, gamma).inverse(), -1.0)


def fixed_points(g: MoebiusMap) -> list[ProjPoint]:
    """Real fixed points of g (empty for elliptic maps)."""
    a, b, c, d = g.entries
    if c == 0.0:
        pts: list[ProjPoint] = [INF]
        if a != d:
            pts.append(b / (d - a))
        return pts
    # c x^2 + (d - a) x - b = 0
    disc = (d - a) ** 2 + 4.0 * b * c
    if disc < 0:
        return []
    r = math.sqrt(disc)
    return sorted({((a - d) - r) / (2 * c), ((a - d) + r) / (2 * c)})


def in_cyclic_interval(x, alpha, gamma) -> bool:
    """Membership in the open arc from alpha to gamma, traversed in increasing direction.

    For gamma < alpha this is (alpha, ∞) ∪ {∞} ∪ (-∞, gamma).  Endpoints are excluded.
    """
    x, alpha, gamma = as_point(x), as_point(alpha), as_point(gamma)
    _require_distinct(alpha, gamma)
    if points_equal(x, alpha) or points_equal(x, gamma):
        return False
    if alpha is INF:
        return x is not INF and x < gamma
    if gamma is INF:
        return x is not INF and x > alpha
    if x is INF:
        return gamma < alpha
    if alpha < gamma:
        return alpha < x < gamma
    return x > alpha or x < gamma
