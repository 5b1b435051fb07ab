"""Closed-form covariance kernels built from fractional Brownian motion.

All scalar kernels take plain floats.  ``fbm_moebius`` and ``fbm_normalized``
also accept ``INF`` wherever the underlying Moebius map sends it to a finite
point.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import DegenerateError, DimensionError, ParamError, PoleError, RangeError
from .projline import INF, MoebiusMap, act, as_point, canonical_map, points_equal


def _check_H(H: float, closed_top: bool = False) -> float:
    H = float(H)
    ok = 0.0 < H <= 1.0 if closed_top else 0.0 < H < 1.0
    if not ok:
        raise ParamError(f"Hurst index H={H} out of range")
    return H


def _finite(x) -> float:
    x = as_point(x)
    if x is INF:
        raise RangeError("this kernel is only defined at finite points")
    return x


def abs_pow(x: float, p: float) -> float:
    """|x|^p as exp(p ln|x|), with 0^p = 0 for p > 0."""
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    return math.exp(p * math.log(ax))


def fbm(H: float, s: float, t: float) -> float:
    """C^H(s, t) = ½(|s|^{2H} + |t|^{2H} - |s - t|^{2H})."""
    H = _check_H(H)
    s, t = _finite(s), _finite(t)
    h2 = 2.0 * H
    return 0.5 * (abs_pow(s, h2) + abs_pow(t, h2) - abs_pow(s - t, h2))


def fbm_scaling_checks(H: float, lam: float, s: float, t: float) -> tuple[float, float]:
    """Residuals of the dilation law and the time-inversion law of C^H."""
    H = _check_H(H)
    if lam == 0 or s == 0 or t == 0:
        raise ParamError("lambda, s and t must be nonzero")
    c = fbm(H, s, t)
    r1 = fbm(H, lam * s, lam * t) - abs_pow(lam, 2 * H) * c
    r2 = fbm(H, 1.0 / s, 1.0 / t) - abs_pow(s * t, -2 * H) * c
    return r1, r2


def bifractional(H: float, K: float, s: float, t: float) -> float:
    """(|t|^{2H} + |s|^{2H})^K - |t - s|^{2HK}.

    There is no factor ½, so K = 1 gives exactly 2·fbm(H, s, t).
    """
    H = _check_H(H, closed_top=True)
    K = float(K)
    if not 0.0 < K <= 1.0:
        raise ParamError(f"K={K} out of (0, 1]")
    s, t = _finite(s), _finite(t)
    h2 = 2.0 * H
    return abs_pow(abs_pow(s, h2) + abs_pow(t, h2), K) - abs_pow(t - s, h2 * K)


def fbm_moebius(H: float, alpha, beta, gamma, s, t) -> float:
    """C^H(g(s), g(t)) where g sends (alpha, beta, gamma) to (0, 1, ∞)."""
    H = _check_H(H)
    g = canonical_map(alpha, beta, gamma)
    gs, gt = act(g, s), act(g, t)
    if gs is INF or gt is INF:
        raise PoleError("argument is mapped to infinity")
    return fbm(H, gs, gt)


def _default_beta(alpha, gamma):
    """An auxiliary point well separated from both alpha and gamma."""
    if alpha is INF:
        return gamma + max(1.0, abs(gamma))
    if gamma is INF:
        return alpha + max(1.0, abs(alpha))
    return 0.5 * (alpha + gamma)


def fbm_normalized(H: float, alpha, gamma, s, t, beta=None) -> float:
    """Normalized kernel C^H_{α,γ}(s, t); independent of the auxiliary point beta."""
    H = _check_H(H)
    alpha, gamma = as_point(alpha), as_point(gamma)
    if points_equal(alpha, gamma):
        raise DegenerateError("alpha and gamma must differ")
    for x in (s, t):
        if points_equal(x, alpha) or points_equal(x, gamma):
            raise PoleError("normalized kernel is undefined at alpha and gamma")
    if beta is None:
        beta = _default_beta(alpha, gamma)
    g = canonical_map(alpha, beta, gamma)
    gs, gt = act(g, s), act(g, t)
    if gs is INF or gt is INF or gs == 0.0 or gt == 0.0:
        raise PoleError("argument too close to alpha or gamma")
    return fbm(H, gs, gt) / (abs_pow(gs, H) * abs_pow(gt, H))


def _bridge_args(alpha, gamma, s, t, closed: bool):
    alpha, gamma, s, t = (_finite(v) for v in (alpha, gamma, s, t))
    if not alpha < gamma:
        raise RangeError("bridge needs alpha < gamma")
    for x in (s, t):
        inside = alpha <= x <= gamma if closed else alpha < x < gamma
        if not inside:
            raise RangeError(f"{x} outside the bridge interval")
    return alpha, gamma, min(s, t), max(s, t)


def bridge_normalized(alpha, gamma, s, t) -> float:
    """Covariance of the normalized Brownian bridge on (alpha, gamma)."""
    alpha, gamma, lo, hi = _bridge_args(alpha, gamma, s, t, closed=False)
    return math.sqrt(((lo - alpha) * (gamma - hi)) / ((hi - alpha) * (gamma - lo)))


def pinned_bridge(alpha, gamma, s, t) -> float:
    """(s∧t - alpha)(gamma - s∨t)/(gamma - alpha) on [alpha, gamma]."""
    alpha, gamma, lo, hi = _bridge_args(alpha, gamma, s, t, closed=True)
    return (lo - alpha) * (gamma - hi) / (gamma - alpha)


def ou_phi(H: float, x: float) -> float:
    """φ(x) = cosh(xH) - 2^{2H-1}|sinh(x/2)|^{2H}, evaluated without cancellation.

    With u = e^{-|x|} the same quantity equals
    ½(e^{-H|x|} - e^{H|x|}·expm1(2H·log1p(-u))), which stays accurate for large |x|.
    """
    H = _check_H(H)
    ax = abs(_finite(x))
    if ax == 0.0:
        return 1.0
    # log(1 - u), accurate both for u near 1 and for tiny u
    log1mu = math.log(-math.expm1(-ax)) if ax < 1.0 else math.log1p(-math.exp(-ax))
    return 0.5 * (math.exp(-H * ax) - math.exp(H * ax) * math.expm1(2 * H * log1mu))


def ou(H: float, s: float, t: float) -> float:
    """Stationary kernel φ(s - t) of the fractional Ornstein-Uhlenbeck process."""
    return ou_phi(H, _finite(s) - _finite(t))


def fbm_highdim(H: float, x, y) -> float:
    """½(‖x‖^{2H} + ‖y‖^{2H} - ‖x - y‖^{2H}) on R^d; H = 1 is the dot product."""
    H = _check_H(H, closed_top=True)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"shapes {x.shape} and {y.shape} differ")
    h2 = 2.0 * H
    nx, ny, nd = (float(np.linalg.norm(v)) for v in (x, y, x - y))
    return 0.5 * (abs_pow(nx, h2) + abs_pow(ny, h2) - abs_pow(nd, h2))


def min_kernel(c: float, s: float, t: float) -> float:
    """c·(|s| ∧ |t|) for st ≥ 0 and 0 otherwise, i.e. c·C^{1/2}(s, t)."""
    c = float(c)
    if c < 0:
        raise ParamError("c must be nonnegative")
    s, t = _finite(s), _finite(t)
    if s * t < 0:
        return 0.0
    return c * min(abs(s), abs(t))


def increment_cov(H: float, t1: float, t2: float, t3: float, t4: float) -> float:
    """Covariance of the fBm increments B_{t2} - B_{t1} and B_{t4} - B_{t3}.

    The |t|^{2H} terms cancel, leaving only the four cross differences. At
    H = 1/2 this is the signed overlap length, which is exactly zero for
    disjoint increments.
    """
    H = _check_H(H)
    t1, t2, t3, t4 = (_finite(t) for t in (t1, t2, t3, t4))
    if H == 0.5:
        lo = max(min(t1, t2), min(t3, t4))
        hi = min(max(t1, t2), max(t3, t4))
        sign = math.copysign(1.0, t2 - t1) * math.copysign(1.0, t4 - t3)
        return sign * (hi - lo) if hi > lo else 0.0
    p = 2 * H
    return 0.5 * (abs_pow(t4 - t1, p) + abs_pow(t3 - t2, p) - abs_pow(t4 - t2, p) - abs_pow(t3 - t1, p))


def _tau_apply(tau, t):
    if tau is None:
        return t
    if isinstance(tau, MoebiusMap):
        return act(tau, t)
    return tau(t)


def twisted(spec: "KernelSpec | Callable", tau, s, t) -> float:
    """K(s, τ(t)) for a Moebius map or any callable τ."""
    return spec(s, _tau_apply(tau, t))


# ---------------------------------------------------------------------------
# symbolic kernel descriptors

_PARAMS: dict[str, tuple[str, ...]] = {
    "fbm": ("H",),
    "bifractional": ("H", "K"),
    "moebius_fbm": ("H", "alpha", "beta", "gamma"),
    "normalized_fbm": ("H", "alpha", "gamma"),
    "bridge": ("alpha", "gamma"),
    "pinned_bridge": ("alpha", "gamma"),
    "ou": ("H",),
    "highdim_fbm": ("H", "d"),
    "min": ("c",),
}
_POINT_PARAMS = {"alpha", "beta", "gamma"}

FAMILIES = tuple(_PARAMS)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family tag plus its parameters; callable as K(s, t)."""

    family: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _PARAMS:
            raise ParamError(f"unknown kernel family {self.family!r}")
        expected = set(_PARAMS[self.family])
        if set(self.params) != expected:
            raise ParamError(f"{self.family} expects parameters {sorted(expected)}, got {sorted(self.params)}")
        clean = {}
        for k, v in self.params.items():
            clean[k] = as_point(v) if k in _POINT_PARAMS else float(v)
        if self.family == "highdim_fbm":
            d = clean["d"]
            if d != int(d) or d < 1:
                raise ParamError("d must be a positive integer")
            clean["d"] = int(d)
        object.__setattr__(self, "params", clean)
        self._validate()

    def _validate(self):
        p, fam = self.params, self.family
        if "H" in p:
            _check_H(p["H"], closed_top=fam in ("bifractional", "highdim_fbm"))
        if fam == "bifractional" and not 0.0 < p["K"] <= 1.0:
            raise ParamError("K must lie in (0, 1]")
        if fam == "min" and p["c"] < 0:
            raise ParamError("c must be nonnegative")
        if fam == "moebius_fbm":
            canonical_map(p["alpha"], p["beta"], p["gamma"])
        if fam in ("normalized_fbm", "bridge", "pinned_bridge") and points_equal(p["alpha"], p["gamma"]):
            raise DegenerateError("alpha and gamma must differ")
        if fam in ("bridge", "pinned_bridge"):
            if p["alpha"] is INF or p["gamma"] is INF or not p["alpha"] < p["gamma"]:
                raise RangeError("bridge kernels need finite alpha < gamma")

    @classmethod
    def of(cls, family: str, **params) -> "KernelSpec":
        return cls(family, params)

    def __call__(self, s, t) -> float:
        p, fam = self.params, self.family
        if fam == "fbm":
            return fbm(p["H"], s, t)
        if fam == "bifractional":
            return bifractional(p["H"], p["K"], s, t)
        if fam == "moebius_fbm":
            return fbm_moebius(p["H"], p["alpha"], p["beta"], p["gamma"], s, t)
        if fam == "normalized_fbm":
            return fbm_normalized(p["H"], p["alpha"], p["gamma"], s, t)
        if fam == "bridge":
            return bridge_normalized(p["alpha"], p["gamma"], s, t)
        if fam == "pinned_bridge":
            return pinned_bridge(p["alpha"], p["gamma"], s, t)
        if fam == "ou":
            return ou(p["H"], s, t)
        if fam == "highdim_fbm":
            x, y = np.atleast_1d(s), np.atleast_1d(t)
            if x.shape != (p["d"],) or y.shape != (p["d"],):
                raise DimensionError(f"expected vectors of length {p['d']}")
            return fbm_highdim(p["H"], x, y)
        return min_kernel(p["c"], s, t)

    def to_dict(self) -> dict:
        params = {k: ("inf" if v is INF else v) for k, v in self.params.items()}
        return {"family": self.family, "params": params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "KernelSpec":
        try:
            return cls(obj["family"], dict(obj.get("params", {})))
        except (KeyError, TypeError) as exc:
            raise ParamError(f"malformed kernel descriptor: {obj!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        return cls.from_dict(json.loads(text))
