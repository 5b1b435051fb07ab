import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import fbm_mp
from rpfbm.errors import DegenerateError, DimensionError, ParamError, PoleError, RangeError
from rpfbm.kernels import (
    FAMILIES,
    KernelSpec,
    bifractional,
    bridge_normalized,
    fbm,
    fbm_highdim,
    fbm_moebius,
    fbm_normalized,
    fbm_scaling_checks,
    increment_cov,
    min_kernel,
    ou,
    pinned_bridge,
    twisted,
)
from rpfbm.projline import INF, MoebiusMap, act, canonical_map

hs = st.floats(0.02, 0.98)
times = st.floats(-10, 10, allow_nan=False)
nonzero = times.filter(lambda x: abs(x) > 0.05)


# --- fbm ----------------------------------------------------------------------

def test_fbm_examples():
    assert fbm(0.5, 1, 2) == 1.0
    assert fbm(0.5, 1, -1) == 0.0
    assert fbm(0.3, 0, 0) == 0.0
    with pytest.raises(ParamError):
        fbm(1.0, 1, 2)
    with pytest.raises(ParamError):
        fbm(0.0, 1, 2)


@given(hs, times, times)
def test_fbm_against_extended_precision(H, s, t):
    assert fbm(H, s, t) == pytest.approx(fbm_mp(H, s, t), rel=1e-12, abs=1e-13)


def test_fbm_near_diagonal_small_H():
    # no cancellation trouble close to s = t for small H
    for H in (0.05, 0.1, 0.2):
        for eps in (1e-3, 1e-6, 1e-9):
            assert fbm(H, 1.0, 1.0 + eps) == pytest.approx(fbm_mp(H, 1.0, 1.0 + eps), rel=1e-12)


@given(hs, times)
def test_fbm_diagonal_and_origin(H, t):
    assert fbm(H, t, t) == pytest.approx(abs(t) ** (2 * H), rel=1e-14)
    assert fbm(H, t, 0.0) == 0.0


@given(hs, nonzero, nonzero, nonzero)
def test_scaling_checks(H, lam, s, t):
    c = max(1.0, abs(fbm(H, lam * s, lam * t)), abs(fbm(H, 1 / s, 1 / t)))
    r1, r2 = fbm_scaling_checks(H, lam, s, t)
    assert abs(r1) <= 1e-12 * c
    assert abs(r2) <= 1e-12 * c


def test_scaling_check_examples():
    for args in ((0.3, 2, 1, 3), (0.7, -1, 1, 2), (0.5, 5, 0.5, 4)):
        r1, r2 = fbm_scaling_checks(*args)
        assert abs(r1) < 1e-12 and abs(r2) < 1e-12
    with pytest.raises(ParamError):
        fbm_scaling_checks(0.3, 0, 1, 2)


# --- bifractional -------------------------------------------------------------

def test_bifractional_examples():
    assert bifractional(0.5, 1.0, 1, 1) == 2.0
    assert bifractional(0.4, 0.6, 0, 0) == 0.0
    assert bifractional(0.5, 0.5, 1, 2) == pytest.approx(math.sqrt(3) - 1, rel=1e-15)
    with pytest.raises(ParamError):
        bifractional(0.5, 1.5, 1, 2)


@given(hs, times, times)
def test_bifractional_K1_is_twice_fbm(H, s, t):
    assert bifractional(H, 1.0, s, t) == pytest.approx(2 * fbm(H, s, t), rel=1e-12, abs=1e-12)


# --- projective kernels -------------------------------------------------------

def test_fbm_moebius_standard_triples():
    H = 0.35
    for s, t in ((0.5, 2.0), (-1.0, 3.0), (4.0, 4.0)):
        assert fbm_moebius(H, 0, 1, INF, s, t) == pytest.approx(fbm(H, s, t), rel=1e-14)
        assert fbm_moebius(H, 0, 2.5, INF, s, t) == pytest.approx(2.5 ** (-2 * H) * fbm(H, s, t), rel=1e-13)


def test_fbm_moebius_pole():
    with pytest.raises(PoleError):
        fbm_moebius(0.3, 0, 1, 2, 2.0, 1.0)
    with pytest.raises(DegenerateError):
        fbm_moebius(0.3, 0, 0, 2, 1.0, 1.0)


@st.composite
def sl2_maps(draw):
    # det = ±1 by construction
    a = draw(st.floats(0.3, 3)) * draw(st.sampled_from([-1.0, 1.0]))
    b, c = draw(st.floats(-3, 3)), draw(st.floats(-3, 3))
    sign = draw(st.sampled_from([-1.0, 1.0]))
    return MoebiusMap(a, b, c, (sign + b * c) / a)


@st.composite
def separated(draw, n):
    # increasing points with gaps of at least 0.2, then shuffled
    x = draw(st.floats(-5, -2))
    pts = [x]
    for _ in range(n - 1):
        x += draw(st.floats(0.2, 2.0))
        pts.append(x)
    return draw(st.permutations(pts))


@given(hs, separated(5), sl2_maps())
def test_transformation_rule(H, pts, h):
    a, b, c, s, t = pts
    imgs = [act(h, p) for p in pts]
    assume(all(p is INF or abs(p) < 1e4 for p in imgs))
    ha, hb, hc, hs_, ht = imgs
    assume(hs_ is not INF and ht is not INF)
    lhs = fbm_moebius(H, ha, hb, hc, hs_, ht)
    rhs = fbm_moebius(H, a, b, c, s, t)
    assume(abs(rhs) < 1e4)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_fbm_normalized_examples():
    H = 0.3
    s, t = 0.7, 2.2
    assert fbm_normalized(H, 0, INF, s, t) == pytest.approx(fbm(H, s, t) / (s**H * t**H), rel=1e-14)
    assert fbm_normalized(H, 0, INF, s, s) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(PoleError):
        fbm_normalized(H, 0, INF, 0.0, 1.0)


@given(hs, separated(5))
def test_normalized_beta_independence_and_swap(H, pts):
    a, c, s, t, beta = pts
    v1 = fbm_normalized(H, a, c, s, t)
    v2 = fbm_normalized(H, a, c, s, t, beta=beta)
    v3 = fbm_normalized(H, c, a, s, t)
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert v1 == pytest.approx(v3, abs=1e-12)
    assert fbm_normalized(H, a, c, s, s) == pytest.approx(1.0, abs=1e-12)


# --- bridges ------------------------------------------------------------------

def test_bridge_examples():
    assert bridge_normalized(0, 1, 0.25, 0.75) == pytest.approx(1 / 3, rel=1e-15)
    assert bridge_normalized(0, 1, 0.4, 0.4) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(RangeError):
        bridge_normalized(0, 1, 0.0, 0.5)
    assert pinned_bridge(0, 1, 0.0, 0.7) == 0.0
    assert pinned_bridge(0, 1, 0.5, 0.5) == 0.25
    assert pinned_bridge(0, 1, 0.2, 0.9) == pinned_bridge(0, 1, 0.9, 0.2)


@pytest.mark.parametrize("alpha,gamma", [(0, 1), (-2.0, 3.5), (1.0, 1.3)])
def test_bridge_equals_normalized_half(alpha, gamma):
    grid = np.linspace(alpha, gamma, 12)[1:-1]
    for s in grid:
        for t in grid:
            assert abs(bridge_normalized(alpha, gamma, s, t) - fbm_normalized(0.5, alpha, gamma, s, t)) <= 1e-12


# --- OU -----------------------------------------------------------------------

def test_ou_examples():
    for x in (0.0, 0.3, -2.0, 7.5):
        assert ou(0.5, x, 0.0) == pytest.approx(math.exp(-abs(x) / 2), rel=1e-14)
    assert ou(0.4, 1.3, 1.3) == 1.0
    direct = math.cosh(0.25) - 2**-0.5 * math.sinh(0.5) ** 0.5
    assert ou(0.25, 1.0, 0.0) == pytest.approx(direct, rel=1e-14)


@given(hs, st.floats(-30, 30), st.floats(-30, 30))
def test_ou_matches_fbm_route(H, s, t):
    # e^{(s+t)H} C^H(e^{-s}, e^{-t}) in extended precision
    with mp.workdps(50):
        H, s, t = mp.mpf(H), mp.mpf(s), mp.mpf(t)
        ref = mp.e ** ((s + t) * H) * (mp.e ** (-2 * H * s) + mp.e ** (-2 * H * t)
                                       - abs(mp.e ** (-s) * mp.expm1(s - t)) ** (2 * H)) / 2
    assert ou(H, s, t) == pytest.approx(float(ref), rel=1e-10, abs=1e-14)


@given(hs, times, times, st.floats(-5, 5))
def test_ou_stationary(H, s, t, h):
    # the shift must not round away the gap; small H makes phi steep at 0
    assume((s + h) - (t + h) == s - t)
    assert ou(H, s + h, t + h) == pytest.approx(ou(H, s, t), abs=1e-12)


# --- high dimensional ---------------------------------------------------------

def test_highdim_examples():
    x, y = np.array([1.0, 2.0, -1.0]), np.array([0.5, -1.0, 3.0])
    assert fbm_highdim(1.0, x, y) == pytest.approx(float(x @ y), rel=1e-14)
    assert fbm_highdim(0.3, x, np.zeros(3)) == 0.0
    with pytest.raises(DimensionError):
        fbm_highdim(0.3, x, y[:2])
    for s in (-1.0, 0.5, 2.0):
        for t in (-0.3, 1.0):
            assert fbm_highdim(0.3, [s], [t]) == pytest.approx(fbm(0.3, s, t), rel=1e-14)


@given(hs, st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_highdim_symmetry_and_diagonal(H, x, y):
    assert fbm_highdim(H, x, y) == pytest.approx(fbm_highdim(H, y, x), abs=1e-14)
    assert fbm_highdim(H, x, x) == pytest.approx(np.linalg.norm(x) ** (2 * H), rel=1e-12, abs=1e-300)


# --- twisted and increments ---------------------------------------------------

def test_twisted_examples():
    spec = KernelSpec.of("fbm", H=0.3)
    assert twisted(spec, MoebiusMap.identity(), 0.7, 1.9) == spec(0.7, 1.9)
    s, t = 0.7, 1.9
    expected = 0.5 * (s**0.6 + t**0.6 - (s + t) ** 0.6)
    assert twisted(spec, lambda x: -x, s, t) == pytest.approx(expected, rel=1e-14)
    norm = KernelSpec.of("normalized_fbm", H=0.3, alpha=0, gamma=INF)
    s, t = 0.4, -0.6
    expected = (1 + abs(s * t) ** 0.6 - (1 - s * t) ** 0.6) / (2 * abs(t) ** 0.3 * abs(s) ** 0.3)
    assert twisted(norm, MoebiusMap(0, 1, 1, 0), s, t) == pytest.approx(expected, rel=1e-12)


def test_increment_examples():
    assert increment_cov(0.5, 0, 1, 2, 3) == 0.0
    assert increment_cov(0.5, -3, -1, 1, 2.5) == 0.0
    assert increment_cov(0.3, 1, 2.5, 1, 2.5) == pytest.approx(1.5**0.6, rel=1e-14)
    assert increment_cov(0.7, 0, 1, 1, 2) == pytest.approx(0.5 * (2**1.4 - 2), rel=1e-13)


def test_increment_sign_predicate_exhaustive():
    grid = [-2.0, -0.5, 0.0, 1.0, 1.5, 3.0]
    for H in np.arange(1, 10) / 10:
        for i1, t1 in enumerate(grid):
            for i2 in range(i1, 6):
                for i3 in range(i2, 6):
                    for i4 in range(i3, 6):
                        v = increment_cov(H, t1, grid[i2], grid[i3], grid[i4])
                        if H >= 0.5:
                            assert v >= -1e-14
                        if H <= 0.5:
                            assert v <= 1e-14


# --- specs --------------------------------------------------------------------

SPECS = [
    KernelSpec.of("fbm", H=0.3),
    KernelSpec.of("bifractional", H=0.6, K=0.5),
    KernelSpec.of("moebius_fbm", H=0.4, alpha=-1, beta=0.5, gamma=INF),
    KernelSpec.of("normalized_fbm", H=0.7, alpha=0, gamma=INF),
    KernelSpec.of("bridge", alpha=0, gamma=4),
    KernelSpec.of("pinned_bridge", alpha=0, gamma=4),
    KernelSpec.of("ou", H=0.2),
    KernelSpec.of("min", c=2.0),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.family)
def test_spec_symmetry(spec):
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s, t = rng.uniform(0.05, 3.95, 2)
        assert spec(s, t) == pytest.approx(spec(t, s), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("spec", SPECS + [KernelSpec.of("highdim_fbm", H=0.4, d=2)], ids=lambda s: s.family)
def test_spec_json_round_trip(spec):
    text = spec.to_json()
    back = KernelSpec.from_json(text)
    assert back == spec
    obj = json.loads(text)
    assert set(obj) == {"family", "params"}


def test_spec_inf_serialized_as_string():
    obj = json.loads(SPECS[2].to_json())
    assert obj["params"]["gamma"] == "inf"


def test_spec_validation():
    with pytest.raises(ParamError):
        KernelSpec.of("fbm", H=1.2)
    with pytest.raises(ParamError):
        KernelSpec.of("fbm")
    with pytest.raises(ParamError):
        KernelSpec.of("nope", H=0.3)
    with pytest.raises(RangeError):
        KernelSpec.of("bridge", alpha=1, gamma=0)
    with pytest.raises(DegenerateError):
        KernelSpec.of("normalized_fbm", H=0.3, alpha=1, gamma=1)
    with pytest.raises(ParamError):
        KernelSpec.of("min", c=-1)
    with pytest.raises(ParamError):
        KernelSpec.of("highdim_fbm", H=0.3, d=1.5)
    assert set(FAMILIES) == {"fbm", "bifractional", "moebius_fbm", "normalized_fbm", "bridge",
                             "pinned_bridge", "ou", "highdim_fbm", "min"}


def test_min_kernel():
    spec = KernelSpec.of("min", c=1)
    assert [[spec(s, t) for t in (1, 2, 3)] for s in (1, 2, 3)] == [[1, 1, 1], [1, 2, 2], [1, 2, 3]]
    assert min_kernel(2.0, -1.0, 3.0) == 0.0


def test_highdim_spec_dimension_check():
    spec = KernelSpec.of("highdim_fbm", H=0.4, d=2)
    assert spec([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.5 * (2 - 2**0.4))
    with pytest.raises(DimensionError):
        spec([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])


@given(hs | st.just(0.5), times, times, times, times)
def test_increment_cov_matches_kernel_combination(H, t1, t2, t3, t4):
    ref = fbm_mp(H, t2, t4) - fbm_mp(H, t2, t3) - fbm_mp(H, t1, t4) + fbm_mp(H, t1, t3)
    scale = max(1.0, *(abs(t) for t in (t1, t2, t3, t4))) ** (2 * H)
    assert increment_cov(H, t1, t2, t3, t4) == pytest.approx(ref, abs=1e-12 * scale)


def test_increment_cov_exact_zero_brownian():
    assert increment_cov(0.5, 0.1, 0.2, 0.3, 0.7) == 0.0
    assert increment_cov(0.5, 0.7, 0.3, 0.2, 0.1) == 0.0
    assert increment_cov(0.5, 0.1, 0.5, 0.3, 0.7) == pytest.approx(0.2, rel=1e-14)
    assert increment_cov(0.5, 0.5, 0.1, 0.3, 0.7) == pytest.approx(-0.2, rel=1e-14)
