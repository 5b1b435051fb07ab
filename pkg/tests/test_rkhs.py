import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from oracles import l2_step_inner, pl_inner_quadrature, singular_inner
from rpfbm.errors import InvariantError, NormalizationError, NotAffineError, PoleError, RangeError
from rpfbm.kernels import fbm, fbm_normalized, increment_cov
from rpfbm.projline import INF, MoebiusMap
from rpfbm.rkhs import (
    AtomicElement,
    KernelCombo,
    PiecewiseLinearFn,
    PiecewisePoly,
    apply_affine_rep,
    b,
    bH,
    combo_function,
    dilate,
    f_eval,
    f_inner,
    inner_atomic,
    inner_pl,
    kernel_combo_inner,
    l2_inner,
    os_quotient_map,
    takenaka_transform,
    theta_hat,
    theta_image,
    translate,
)

hs = st.floats(0.05, 0.95)


@st.composite
def elements(draw, max_atoms=5):
    n = draw(st.integers(2, max_atoms))
    # lattice positions: near-coincident atoms would lose their gap to rounding
    pos = [draw(st.integers(-5000, 5000)) / 1000 for _ in range(n)]
    ws = [draw(st.floats(-2, 2)) for _ in range(n - 1)]
    ws.append(-sum(ws))
    return AtomicElement(tuple(zip(pos, ws)))


# --- atomic elements ----------------------------------------------------------

def test_atomic_invariant():
    with pytest.raises(InvariantError):
        AtomicElement(((0.0, 1.0), (1.0, -0.5)))
    e = AtomicElement(((1.0, 1.0), (1.0, 2.0), (0.0, -3.0)))
    assert e.atoms == ((0.0, -3.0), (1.0, 3.0))
    assert AtomicElement.from_json(e.to_json()) == e
    assert (e - e).is_zero()


def test_inner_atomic_examples():
    for H in (0.2, 0.5, 0.8):
        for t in (-2.0, 0.7, 3.0):
            assert inner_atomic(H, bH(t), bH(t)) == pytest.approx(abs(t) ** (2 * H), rel=1e-14)
    assert inner_atomic(0.5, bH(1), bH(-1)) == 0.0
    assert inner_atomic(0.3, bH(1), bH(2)) == pytest.approx(fbm(0.3, 1, 2), rel=1e-14)
    assert bH(0).is_zero()
    assert inner_atomic(0.3, bH(0), bH(2)) == 0.0


@pytest.mark.parametrize("H", np.round(np.arange(0.1, 0.91, 0.1), 1))
def test_realization_gram(H):
    t = np.array([-3.0, -1.7, -0.6, -0.1, 0.0, 0.2, 0.5, 0.9, 1.3, 2.2, 3.1, 4.0])
    elems = [bH(x) for x in t]
    g = np.array([[inner_atomic(H, a, c) for c in elems] for a in elems])
    ref = np.array([[fbm(H, s, u) for u in t] for s in t])
    assert np.max(np.abs(g - ref)) <= 1e-12


@given(hs, st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_increments_match_increment_cov(H, s, u, t, v):
    lhs = inner_atomic(H, bH(s) - bH(u), bH(t) - bH(v))
    assert lhs == pytest.approx(increment_cov(H, s, u, t, v), abs=1e-11)


@settings(max_examples=50)
@given(hs, st.lists(elements(), min_size=2, max_size=6))
def test_inner_atomic_psd(H, elems):
    g = np.array([[inner_atomic(H, a, c) for c in elems] for a in elems])
    assert np.allclose(g, g.T, atol=1e-12)
    scale = max(1.0, np.max(np.abs(g)))
    assert np.min(np.linalg.eigvalsh(g)) >= -1e-9 * scale


# --- piecewise linear ---------------------------------------------------------

def test_inner_pl_hat():
    f = PiecewiseLinearFn.hat(0, 1, 2)
    # for H = 1/2 the form is the L² product of the functions: ∫ hat² = 2/3
    assert inner_pl(0.5, f, f) == pytest.approx(2 / 3, rel=1e-14)
    assert inner_pl(0.5, f, f) == pytest.approx(pl_inner_quadrature(0.5, f, f), abs=1e-9)
    zero = PiecewiseLinearFn.hat(0, 1, 2, height=0.0)
    assert inner_pl(0.3, zero, zero) == 0.0


def test_pl_rejects():
    with pytest.raises(InvariantError):
        PiecewiseLinearFn((0, 1), (1, 0))


@st.composite
def pl_fns(draw):
    n = draw(st.integers(3, 5))
    knots = sorted(draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n, unique=True)))
    assume(min(np.diff(knots)) > 0.05)
    vals = [0.0] + [draw(st.floats(-2, 2)) for _ in range(n - 2)] + [0.0]
    return PiecewiseLinearFn(tuple(knots), tuple(vals))


@settings(max_examples=15)
@given(st.floats(0.1, 0.9), pl_fns(), pl_fns())
def test_inner_pl_matches_quadrature(H, f, g):
    assert inner_pl(H, f, g) == pytest.approx(pl_inner_quadrature(H, f, g), abs=1e-6)


# --- f_t ----------------------------------------------------------------------

def test_f_eval_examples():
    H, t = 0.3, 2.5
    for x in (0.1, 1.0, 2.4):
        assert f_eval(H, 0, INF, t, x) == pytest.approx(t ** -H, rel=1e-14)
    assert f_eval(H, 0, INF, t, 3.0) == 0.0
    assert f_eval(H, 0, INF, t, -50.0) == 0.0
    with pytest.raises(PoleError):
        f_eval(H, 0, 5.0, 1.0, 5.0)


def test_f_inner_examples():
    assert f_inner(0.4, 1.0, 3.0, 2.0, 2.0) == pytest.approx(1.0, rel=1e-15)
    H, s, t = 0.3, 0.7, 2.2
    assert f_inner(H, 0, INF, s, t) == pytest.approx(fbm(H, s, t) / (s**H * t**H), rel=1e-14)


@st.composite
def tuples(draw):
    pts = []
    while len(pts) < 4:
        x = draw(st.floats(-6, 6))
        assume(all(abs(x - p) > 0.1 for p in pts))
        pts.append(x)
    if draw(st.integers(0, 4)) == 0:
        pts[draw(st.integers(0, 1))] = INF
    return pts


@settings(max_examples=200)
@given(st.floats(0.02, 0.98), tuples())
def test_f_inner_equals_normalized(H, tup):
    alpha, gamma, s, t = tup
    assert abs(f_inner(H, alpha, gamma, s, t) - fbm_normalized(H, alpha, gamma, s, t)) <= 1e-10


@pytest.mark.parametrize("k", range(10))
def test_f_inner_quadrature_h07(k):
    rng = np.random.default_rng(100 + k)
    alpha, s, t, gamma = np.sort(rng.uniform(-3, 3, 4))
    alpha, gamma = float(alpha), float(gamma)
    s, t = float(s), float(t)
    H = 0.7
    val = singular_inner(H, lambda x: f_eval(H, alpha, gamma, s, x), (alpha, s),
                         lambda y: f_eval(H, alpha, gamma, t, y), (alpha, t))
    assert val == pytest.approx(f_inner(H, alpha, gamma, s, t), abs=1e-4)


# --- affine representation ----------------------------------------------------

def test_affine_examples():
    e = bH(1.5) + bH(-0.3)
    assert apply_affine_rep(0.3, MoebiusMap.identity(), e) == e
    with pytest.raises(NotAffineError):
        apply_affine_rep(0.3, MoebiusMap(1, 0, 1, 1), e)
    # dilation x ↦ x/t of χ_[0,1]' gives |t|^{-H}(δ_0 - δ_t)
    H, t = 0.35, 2.5
    out = apply_affine_rep(H, MoebiusMap.dilation(t), bH(1.0))
    ref = bH(t) * t ** -H
    assert out.positions.tolist() == ref.positions.tolist()
    assert np.allclose(out.weights, ref.weights, rtol=1e-15)


@st.composite
def affine(draw):
    a = draw(st.floats(0.1, 4.0)) * draw(st.sampled_from([-1, 1]))
    return MoebiusMap(a, draw(st.floats(-3, 3)), 0.0, draw(st.sampled_from([1.0, 2.0, -0.5])))


@settings(max_examples=100)
@given(hs, affine(), elements(), elements())
def test_affine_rep_isometry(H, g, x, y):
    lhs = inner_atomic(H, apply_affine_rep(H, g, x), apply_affine_rep(H, g, y))
    rhs = inner_atomic(H, x, y)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs), sum(abs(w) for _, w in x.atoms) * sum(abs(w) for _, w in y.atoms) * 100)


@given(hs, st.floats(-3, 3), st.floats(0.2, 5.0).map(lambda r: r) | st.floats(-5.0, -0.2), elements())
def test_trans_dil_conjugation(H, t, r, x):
    # τ_{1/r} S_t τ_r = S_{rt}
    lhs = dilate(H, translate(dilate(H, x, r), t), 1.0 / r)
    rhs = translate(x, r * t)
    assert np.allclose(lhs.positions, rhs.positions, rtol=1e-12, atol=1e-12)
    assert np.allclose(lhs.weights, rhs.weights, rtol=1e-12, atol=1e-12)


# --- θ̂ -------------------------------------------------------------------------

def test_theta_examples():
    f = PiecewisePoly.step([0, 2], [1.0])
    assert theta_hat(f, 0.25) == 2.0
    assert theta_hat(f, 1.0) == 0.0
    one = PiecewisePoly.step([0, 1], [1.0])
    for t in (0.1, 0.5, 0.99, 1.01, 3.0):
        assert theta_hat(one, t) == pytest.approx(one(t), abs=1e-15)
    with pytest.raises(RangeError):
        theta_hat(f, 0.0)


@pytest.mark.parametrize("t", [0.25, 0.5, 2.0, 4.0])
def test_theta_indicator_pointwise(t):
    f = PiecewisePoly.step([0, t], [1.0])
    xs = np.random.default_rng(int(t * 100)).uniform(0, 2 / t, 1000)
    xs = xs[np.abs(xs - 1 / t) > 1e-9]
    got = np.array([theta_hat(f, x) for x in xs])
    ref = np.where(xs < 1 / t, t, 0.0)
    assert np.max(np.abs(got - ref)) <= 1e-12


@st.composite
def steps(draw, top=4.0):
    n = draw(st.integers(1, 5))
    br = sorted(draw(st.lists(st.floats(0.05, top), min_size=n, max_size=n, unique=True)))
    assume(len(br) == 1 or min(np.diff(br)) > 0.02)
    vals = [draw(st.floats(-2, 2)) for _ in range(n)]
    return [0.0] + br, vals


@settings(max_examples=50)
@given(steps())
def test_theta_isometry_and_involution(step):
    br, vals = step
    f = PiecewisePoly.step(br, vals)
    tf = theta_image(f)
    ref = l2_step_inner(br, vals, br, vals)
    assert abs(l2_inner(tf, tf, upper=max(1 / br[1], br[-1]) * 2) - ref) <= 1e-8
    ttf = theta_image(tf)
    assert ttf is f
    # pointwise involution away from the breaks, through the lazy double transform
    for x in np.linspace(0.01, br[-1] + 1, 37):
        if min(abs(x - p) for p in br) > 1e-6 and min(abs(1 / x - p) for p in br[1:]) > 1e-6:
            inner = PiecewisePoly.step(br, vals)
            twice = theta_hat(theta_image(inner), x)
            assert twice == pytest.approx(f(x), abs=1e-10)


def test_os_quotient_examples():
    one = PiecewisePoly.step([0, 1], [1.0])
    assert os_quotient_map(one) == 1.0
    balanced = PiecewisePoly.step([0, 0.5, 1], [1.0, -1.0])
    assert os_quotient_map(balanced) == 0.0
    assert l2_inner(balanced, theta_image(balanced), upper=2.0) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50)
@given(steps(top=1.0))
def test_os_positivity_identity(step):
    br, vals = step
    f = PiecewisePoly.step(br, vals)
    lhs = l2_inner(f, theta_image(f), upper=1.0 / br[1])
    assert abs(lhs - os_quotient_map(f) ** 2) <= 1e-10


def test_theta_on_polynomial_pieces():
    f = PiecewisePoly((0.0, 0.5, 2.0), (Polynomial([1.0, 2.0]), Polynomial([0.0, 0.0, 1.0])))
    tf = theta_image(f)
    assert l2_inner(tf, tf, upper=5000.0) == pytest.approx(l2_inner(f, f), rel=1e-8)
    for x in (0.3, 0.9, 1.5):
        assert theta_hat(tf, x) == pytest.approx(f(x), abs=1e-12)


# --- Takenaka -------------------------------------------------------------------

def test_kernel_combo_inner_examples():
    for t in (-2.0, 0.5, 3.0):
        assert kernel_combo_inner(b(t), b(t)) == abs(t)
    assert kernel_combo_inner(b(1.0), b(-2.0)) == 0.0
    x = b(1.0, 2.0) + b(1.0, 3.0) + b(0.0, 5.0)
    assert x.terms == ((5.0, 1.0),)
    assert KernelCombo.from_json(x.to_json()) == x


def test_takenaka_examples():
    x = b(1.5, 2.0) + b(-0.7, 1.0)
    assert takenaka_transform(MoebiusMap.identity(), x).close_to(x)
    J = MoebiusMap(0, -1, 1, 0)
    for t in (0.5, -2.0, 3.0):
        assert takenaka_transform(J, b(t)).close_to(b(-1 / t, -t), 1e-15)
    minus = MoebiusMap(-1, 0, 0, -1)
    assert takenaka_transform(minus, x).close_to(-x, 0.0)
    with pytest.raises(NormalizationError):
        takenaka_transform(MoebiusMap(1, 0, 0, -1), x)


def test_takenaka_dual_action_of_J():
    # the transform is U_g^{-1}, so U_J x = transform(J^{-1}, x) and its function is -t·F_x(-1/t)
    J = MoebiusMap(0, -1, 1, 0)
    x = b(1.5, 2.0) + b(-0.7, 1.0) + b(4.0, -0.5)
    y = takenaka_transform(J.inverse(), x)
    for t in (-3.0, -0.4, 0.2, 1.1, 5.0):
        assert combo_function(y, t) == pytest.approx(-t * combo_function(x, -1 / t), abs=1e-12)


@st.composite
def sl2(draw):
    # det 1 by construction: d = (1 + bc)/a
    a = draw(st.floats(0.3, 3)) * draw(st.sampled_from([-1.0, 1.0]))
    bb, c = draw(st.floats(-3, 3)), draw(st.floats(-3, 3))
    m = MoebiusMap(a, bb, c, (1 + bb * c) / a)
    return MoebiusMap(m.b, -m.a, m.d, -m.c) if draw(st.booleans()) else m


@st.composite
def combos(draw):
    n = draw(st.integers(1, 5))
    return KernelCombo(tuple((draw(st.floats(-2, 2)), draw(st.floats(-5, 5))) for _ in range(n)))


@settings(max_examples=100)
@given(sl2(), sl2(), combos())
def test_takenaka_composition(g, h, x):
    lhs = takenaka_transform(h, takenaka_transform(g, x))
    rhs = takenaka_transform(g @ h, x)
    d = lhs - rhs
    assert kernel_combo_inner(d, d) <= 1e-18 * max(1.0, kernel_combo_inner(x, x)) ** 2 * 1e6
    assert lhs.close_to(rhs, 1e-8)


@settings(max_examples=100)
@given(sl2(), combos(), combos())
def test_takenaka_isometry(g, x, y):
    lhs = kernel_combo_inner(takenaka_transform(g, x), takenaka_transform(g, y))
    rhs = kernel_combo_inner(x, y)
    scale = max(1.0, math.sqrt(kernel_combo_inner(x, x) * kernel_combo_inner(y, y)))
    assert abs(lhs - rhs) <= 1e-10 * scale * 10


def test_combo_json_is_array_of_pairs():
    x = b(1.0, 2.0) + b(3.0, -1.0)
    assert json.loads(x.to_json()) == [[2.0, 1.0], [-1.0, 3.0]]
