"""Inner-product calculus in the fBm Hilbert spaces H_H.

Elements are stored through their distributional derivatives: a finite signed
atomic measure with total mass zero.  The inner product is then the finite sum
-½ Σ w_i v_j |x_i - y_j|^{2H}, so no singular integrals are needed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .errors import InvariantError, NotAffineError, NormalizationError, ParamError, PoleError, RangeError, ShapeError
from .kernels import _check_H, abs_pow, fbm
from .projline import INF, MoebiusMap, act, as_point, canonical_map, points_equal

SUM_TOL = 1e-12


def _merge(pairs: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    acc: dict[float, float] = {}
    for x, w in pairs:
        acc[x] = acc.get(x, 0.0) + w
    return tuple(sorted((x, w) for x, w in acc.items() if w != 0.0))


@dataclass(frozen=True)
class AtomicElement:
    """Σ w_i δ_{x_i} with Σ w_i = 0, the derivative of a step function in H_H."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pairs = []
        for x, w in self.atoms:
            x, w = float(x), float(w)
            if not (math.isfinite(x) and math.isfinite(w)):
                raise InvariantError("atom positions and weights must be finite")
            pairs.append((x, w))
        merged = _merge(pairs)
        total = sum(w for _, w in merged)
        mass = sum(abs(w) for _, w in merged)
        if abs(total) > SUM_TOL * max(1.0, mass):
            raise InvariantError(f"weights sum to {total}, not zero")
        object.__setattr__(self, "atoms", merged)

    @property
    def positions(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def is_zero(self) -> bool:
        return not self.atoms

    def __add__(self, other: "AtomicElement") -> "AtomicElement":
        return AtomicElement(self.atoms + other.atoms)

    def __neg__(self) -> "AtomicElement":
        return AtomicElement(tuple((x, -w) for x, w in self.atoms))

    def __sub__(self, other: "AtomicElement") -> "AtomicElement":
        return self + (-other)

    def __mul__(self, c: float) -> "AtomicElement":
        return AtomicElement(tuple((x, c * w) for x, w in self.atoms))

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps([list(a) for a in self.atoms])

    @classmethod
    def from_json(cls, text: str) -> "AtomicElement":
        return cls(tuple((float(x), float(w)) for x, w in json.loads(text)))


def inner_atomic(H: float, a: AtomicElement, b: AtomicElement) -> float:
    """-½ Σ_i Σ_j w_i v_j |x_i - y_j|^{2H}."""
    H = _check_H(H)
    if a.is_zero() or b.is_zero():
        return 0.0
    d = np.abs(a.positions[:, None] - b.positions[None, :])
    with np.errstate(divide="ignore"):
        p = np.where(d > 0, np.exp(2 * H * np.log(np.where(d > 0, d, 1.0))), 0.0)
    return float(-0.5 * (a.weights @ p @ b.weights))


def bH(t: float) -> AtomicElement:
    """Derivative δ_0 - δ_t of b_t = sgn(t)·χ_[t∧0, t∨0]."""
    t = float(t)
    if t == 0.0:
        return AtomicElement()
    return AtomicElement(((0.0, 1.0), (t, -1.0)))


# ---------------------------------------------------------------------------
# continuous piecewise linear functions


def _F(H: float, u):
    """Even second antiderivative of |u|^{2H}."""
    p = 2 * H + 2
    return np.abs(u) ** p / ((2 * H + 1) * p)


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous, piecewise linear, vanishing at and outside the end knots."""

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        k = tuple(float(x) for x in self.knots)
        v = tuple(float(x) for x in self.values)
        if len(k) != len(v) or len(k) < 2:
            raise ShapeError("need at least two knots with one value each")
        if any(b <= a for a, b in zip(k, k[1:])):
            raise ShapeError("knots must be strictly increasing")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise InvariantError("values at the end knots must be 0")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(x, self.knots, self.values, left=0.0, right=0.0)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    @classmethod
    def hat(cls, a: float, b: float, c: float, height: float = 1.0) -> "PiecewiseLinearFn":
        return cls((a, b, c), (0.0, height, 0.0))


def inner_pl(H: float, f: PiecewiseLinearFn, g: PiecewiseLinearFn) -> float:
    """-½ ∫∫ f'(x) g'(y) |x - y|^{2H} dx dy in closed form.

    Over a rectangle, ∫_a^b ∫_c^d |x - y|^{2H} dy dx = F(b-c) - F(a-c) - F(b-d) + F(a-d)
    with F(u) = |u|^{2H+2}/((2H+1)(2H+2)).
    """
    H = _check_H(H)
    xa, xb = np.array(f.knots[:-1]), np.array(f.knots[1:])
    yc, yd = np.array(g.knots[:-1]), np.array(g.knots[1:])
    a, b = xa[:, None], xb[:, None]
    c, d = yc[None, :], yd[None, :]
    rect = _F(H, b - c) - _F(H, a - c) - _F(H, b - d) + _F(H, a - d)
    return float(-0.5 * (f.slopes @ rect @ g.slopes))


# ---------------------------------------------------------------------------
# the functions f_t^{α,γ}


def f_eval(H: float, alpha, gamma, t, x) -> float:
    """f_t^{α,γ}(x) = sgn(det g_t)|det g_t|^H/|cx + d|^{2H} on g_t^{-1}([0, 1]), else 0."""
    H = _check_H(H)
    g = canonical_map(alpha, t, gamma)
    x = as_point(x)
    if x is INF:
        raise PoleError("f_t is evaluated at finite points only")
    den = g.c * x + g.d
    y = act(g, x)
    if y is INF or den == 0.0:
        raise PoleError(f"x = {x} is the pole gamma")
    if not 0.0 <= y <= 1.0:
        return 0.0
    det = g.det
    return math.copysign(1.0, det) * abs_pow(det, H) / abs_pow(den, 2 * H)


def f_inner(H: float, alpha, gamma, s, t) -> float:
    """⟨f_s, f_t⟩ = |g_s(t)|^{-H} C^H(1, g_s(t))."""
    H = _check_H(H)
    for x in (s, t):
        if points_equal(x, alpha) or points_equal(x, gamma):
            raise PoleError("s and t must avoid alpha and gamma")
    u = act(canonical_map(alpha, s, gamma), t)
    if u is INF or u == 0.0:
        raise PoleError("t too close to alpha or gamma")
    return abs_pow(u, -H) * fbm(H, 1.0, u)


# ---------------------------------------------------------------------------
# the affine part of the representation


def apply_affine_rep(H: float, g: MoebiusMap, elem: AtomicElement) -> AtomicElement:
    """U_g for affine g: atoms (x, w) go to (g.x, |g'|^{-H}·w)."""
    H = _check_H(H)
    if g.c != 0.0:
        raise NotAffineError("only affine maps (c = 0) act on atoms")
    slope, shift = g.a / g.d, g.b / g.d
    scale = abs_pow(slope, -H)
    return AtomicElement(tuple((slope * x + shift, scale * w) for x, w in elem.atoms))


def translate(elem: AtomicElement, t: float) -> AtomicElement:
    """S_t: ξ ↦ ξ(· - t)."""
    return AtomicElement(tuple((x + t, w) for x, w in elem.atoms))


def dilate(H: float, elem: AtomicElement, a: float) -> AtomicElement:
    """τ_a: ξ ↦ sgn(a)|a|^H ξ(a·), which moves atoms to x/a with weight |a|^H·w."""
    if a == 0:
        raise ParamError("dilation factor must be nonzero")
    return apply_affine_rep(H, MoebiusMap.dilation(1.0 / a), elem)


# ---------------------------------------------------------------------------
# the involution θ̂ on L²(R₊)


class HalfLineFn(Protocol):
    def __call__(self, t: float) -> float: ...

    def antiderivative(self, t: float) -> float:
        """∫_0^t f."""
        ...


@dataclass(frozen=True)
class PiecewisePoly:
    """Polynomial pieces on [b_k, b_{k+1}) with b_0 = 0, zero beyond the last break."""

    breaks: tuple[float, ...]
    polys: tuple[Polynomial, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        if len(b) != len(self.polys) + 1 or b[0] != 0.0:
            raise ShapeError("breaks must start at 0 and have one more entry than pieces")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ShapeError("breaks must be strictly increasing")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "polys", tuple(p if isinstance(p, Polynomial) else Polynomial(p) for p in self.polys))
        cum = [0.0]
        for k, p in enumerate(self.polys):
            q = p.integ()
            cum.append(cum[-1] + float(q(b[k + 1]) - q(b[k])))
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def step(cls, breaks: Sequence[float], values: Sequence[float]) -> "PiecewisePoly":
        return cls(tuple(breaks), tuple(Polynomial([v]) for v in values))

    def _piece(self, t: float) -> int:
        return int(np.searchsorted(self.breaks, t, side="right")) - 1

    def __call__(self, t: float) -> float:
        k = self._piece(t)
        if k < 0 or k >= len(self.polys):
            return 0.0
        return float(self.polys[k](t))

    def antiderivative(self, t: float) -> float:
        if t <= 0:
            return 0.0
        k = self._piece(t)
        if k >= len(self.polys):
            return self._cum[-1]
        q = self.polys[k].integ()
        return self._cum[k] + float(q(t) - q(self.breaks[k]))

    @property
    def discontinuities(self) -> tuple[float, ...]:
        return self.breaks


@dataclass(frozen=True)
class ThetaImage:
    """Lazy θ̂f: t ↦ F(1/t) - f(1/t)/t, with ∫_0^u θ̂f = u·F(1/u)."""

    source: HalfLineFn

    def __call__(self, t: float) -> float:
        return theta_hat(self.source, t)

    def antiderivative(self, u: float) -> float:
        if u <= 0:
            return 0.0
        return u * self.source.antiderivative(1.0 / u)

    @property
    def discontinuities(self) -> tuple[float, ...]:
        src = getattr(self.source, "discontinuities", ())
        return tuple(sorted(1.0 / x for x in src if x > 0))


def theta_hat(f: HalfLineFn, t: float) -> float:
    """(θ̂f)(t) = ∫_0^{1/t} f - f(1/t)/t."""
    if not t > 0:
        raise RangeError("theta_hat is defined for t > 0")
    r = 1.0 / t
    return f.antiderivative(r) - f(r) * r


def theta_image(f: HalfLineFn) -> ThetaImage:
    """θ̂f as a function object; θ̂ applied twice gives back a function equal to f."""
    if isinstance(f, ThetaImage):
        return f.source  # type: ignore[return-value]
    return ThetaImage(f)


def os_quotient_map(f: HalfLineFn) -> float:
    """q(f) = ∫_0^1 f."""
    return float(f.antiderivative(1.0))


def l2_inner(f: HalfLineFn, g: HalfLineFn, upper: float | None = None) -> float:
    """∫_0^∞ f g by adaptive quadrature, split at the known discontinuities.

    ``upper`` bounds the joint support; it defaults to the largest discontinuity.
    """
    pts = sorted(set(getattr(f, "discontinuities", ())) | set(getattr(g, "discontinuities", ())))
    pts = [p for p in pts if p > 0]
    top = upper if upper is not None else (max(pts) if pts else 1.0)
    edges = [0.0] + [p for p in pts if p < top] + [top]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        val, _ = integrate.quad(lambda x: f(x) * g(x), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return total


# ---------------------------------------------------------------------------
# Takenaka representation on the span of b_t in H_{C^{1/2}}

@dataclass(frozen=True)
class KernelCombo:
    """Σ c_i b_{t_i}, with b_t the kernel functions of C^{1/2}.

    Terms at identical times are merged; nearby but distinct times are kept,
    since moving b_t by δ changes the element by |c|·√δ.
    """

    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        acc: dict[float, float] = {}
        for c, t in self.terms:
            c, t = float(c), float(t)
            if not (math.isfinite(c) and math.isfinite(t)):
                raise ParamError("coefficients and times must be finite")
            acc[t] = acc.get(t, 0.0) + c
        # b_0 = 0, and zero coefficients carry nothing
        clean = tuple((c, t) for t, c in sorted(acc.items()) if c != 0.0 and t != 0.0)
        object.__setattr__(self, "terms", clean)

    def __add__(self, other: "KernelCombo") -> "KernelCombo":
        return KernelCombo(self.terms + other.terms)

    def __neg__(self) -> "KernelCombo":
        return KernelCombo(tuple((-c, t) for c, t in self.terms))

    def __sub__(self, other: "KernelCombo") -> "KernelCombo":
        return self + (-other)

    def __mul__(self, k: float) -> "KernelCombo":
        return KernelCombo(tuple((k * c, t) for c, t in self.terms))

    __rmul__ = __mul__

    def close_to(self, other: "KernelCombo", tol: float = 1e-9) -> bool:
        """Equality as formal sums, up to rounding in coefficients and times.

        Terms of ``self - other`` whose times agree to ``tol`` (relative) are
        pooled, and every pooled coefficient must be below ``tol`` times the
        largest coefficient.  A pool sitting at t ≈ 0 only needs a small norm
        |c|·√|t|, matching the convention b_0 = 0.
        """
        diff = (self - other).terms
        scale = max([1.0] + [abs(c) for c, _ in self.terms + other.terms])
        pools: list[list[float]] = []  # [time, coefficient]
        for c, t in diff:  # sorted by time
            if pools and abs(t - pools[-1][0]) <= tol * max(1.0, abs(t)):
                pools[-1][1] += c
            else:
                pools.append([t, c])
        return all(abs(c) * min(1.0, math.sqrt(abs(t))) <= tol * scale for t, c in pools)

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.terms])

    @classmethod
    def from_json(cls, text: str) -> "KernelCombo":
        return cls(tuple((float(c), float(t)) for c, t in json.loads(text)))


def b(t: float, coef: float = 1.0) -> KernelCombo:
    return KernelCombo(((coef, t),))


def _c_half(s: float, t: float) -> float:
    if s * t <= 0:
        return 0.0
    return min(abs(s), abs(t))


def kernel_combo_inner(x: KernelCombo, y: KernelCombo) -> float:
    """Σ_i Σ_j c_i d_j C^{1/2}(t_i, s_j)."""
    return float(sum(c * d * _c_half(t, s) for c, t in x.terms for d, s in y.terms))


def combo_function(x: KernelCombo, t: float) -> float:
    """The function F(t) = ⟨b_t, x⟩ represented by x."""
    return float(sum(c * _c_half(t, s) for c, s in x.terms))


def takenaka_transform(g: MoebiusMap, x: KernelCombo) -> KernelCombo:
    """Apply U_g^{-1} to a kernel combination.

    With h = g^{-1} = [[a, b], [c, d]] normalized to det 1, each b_t becomes
    (ct + d)·b_{h.t} - ct·b_{h.∞} - d·b_{h.0}; terms that would sit at ∞ carry a
    vanishing coefficient and are dropped, as is b_0 = 0.
    """
    if g.det <= 0:
        raise NormalizationError("Takenaka transform needs det g > 0")
    h = g.inverse().sl2()
    a, bb, c, d = h.entries
    # terms far below machine precision in norm (|c|·√|t|) only feed cancellation
    norms = [abs(coef) * math.sqrt(abs(t)) for coef, t in x.terms]
    floor = 1e-16 * max(norms, default=0.0)
    out: list[tuple[float, float]] = []
    for (coef, t), nrm in zip(x.terms, norms):
        if nrm < floor:
            continue
        k = c * t + d
        if k != 0.0:
            ht = act(h, t)
            if ht is not INF:
                out.append((coef * k, ht))
        # h.∞ and h.0 overflow to INF only when their coefficient is negligible
        if c != 0.0:
            h_inf = act(h, INF)
            if h_inf is not INF:
                out.append((-coef * c * t, h_inf))
        if d != 0.0:
            h_zero = act(h, 0.0)
            if h_zero is not INF:
                out.append((-coef * d, h_zero))
    return KernelCombo(tuple(out))
