import cmath
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nctorus.lattice import SkewMatrix, degenerate_subgroup, l1_ball
from nctorus.twisted import (
    AlgebraElement, ContextMismatch, NotAttributable, QSpec, build_derivation, center_test,
    commutator, derivation_apply, derivation_apply_scaled, derivation_split, involution,
    max_abs_difference, multiply, q_derivation_apply, random_element, trace,
)

from conftest import random_rational_theta

F = Fraction
HALF = SkewMatrix.from_upper(2, [F(1, 2)])


def mono(theta, x, c=1):
    return AlgebraElement.monomial(theta, x, c)


def seeded(seed):
    return np.random.default_rng(seed)


# --- multiply -----------------------------------------------------------------------

def test_multiply_examples():
    u1, u2 = mono(HALF, (1, 0)), mono(HALF, (0, 1))
    assert u1 * u2 == mono(HALF, (1, 1), 1j)
    assert u2 * u1 == mono(HALF, (1, 1), -1j)
    # U_k U_j = e(theta_kj) U_j U_k with theta_21 = -1/2
    assert u2 * u1 == (u1 * u2).scale(-1)


def test_identity_element(np_rng):
    th = random_rational_theta(random.Random(1), 3)
    a = random_element(th, np_rng)
    one = AlgebraElement.one(th)
    assert a * one == a and one * a == a


def test_context_mismatch():
    other = SkewMatrix.from_upper(2, [F(1, 3)])
    with pytest.raises(ContextMismatch):
        multiply(mono(HALF, (1, 0)), mono(other, (0, 1)))


@pytest.mark.parametrize("seed", range(5))
def test_associativity_exact(seed):
    rng = seeded(seed)
    th = random_rational_theta(random.Random(seed), 3)
    for _ in range(10):
        a, b, c = (random_element(th, rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)


def test_associativity_float():
    rng = seeded(3)
    th = SkewMatrix.from_upper(3, [0.41421356, -0.2718, 0.57721], exact=False)
    for _ in range(20):
        a, b, c = (random_element(th, rng) for _ in range(3))
        assert ((a * b) * c).is_close(a * (b * c), 1e-11)


def test_float_and_exact_agree():
    rng = seeded(4)
    th = SkewMatrix.from_upper(3, [F(1, 3), F(-1, 4), F(2, 5)])
    for _ in range(10):
        a, b = random_element(th, rng), random_element(th, rng)
        assert (a.to_float() * b.to_float()).is_close((a * b).to_float(), 1e-12)


# --- involution and trace ------------------------------------------------------------

def test_involution_examples(np_rng):
    u1 = mono(HALF, (1, 0))
    assert involution(u1) * u1 == AlgebraElement.one(HALF)
    assert involution(mono(HALF, (1, 1), 1j)) == mono(HALF, (-1, -1), -1j)
    a = random_element(HALF, np_rng)
    assert involution(involution(a)) == a


@pytest.mark.parametrize("seed", range(4))
def test_involution_properties(seed):
    rng = seeded(seed)
    th = random_rational_theta(random.Random(seed), 3)
    for _ in range(10):
        a, b = random_element(th, rng), random_element(th, rng)
        assert involution(a * b) == involution(b) * involution(a)
        assert involution(a).seminorm(0) == pytest.approx(a.seminorm(0), rel=1e-14)


def test_trace_examples():
    assert trace(AlgebraElement.one(HALF)) == 1
    assert trace(mono(HALF, (1, 0))) == 0


@pytest.mark.parametrize("seed", range(4))
def test_trace_is_tracial(seed):
    rng = seeded(seed)
    th = random_rational_theta(random.Random(seed), 2 + seed % 3)
    for _ in range(25):
        a, b = random_element(th, rng), random_element(th, rng)
        assert trace(a * b) == trace(b * a)
        assert trace(commutator(a, b)) == 0


# --- canonical derivations --------------------------------------------------------------

def test_derivation_apply_examples():
    th = SkewMatrix.from_upper(2, [0.3], exact=False)
    out = derivation_apply([1, 0], mono(th, (2, 3)))
    assert abs(complex(out.coefficient((2, 3))) - 4j * math.pi) < 1e-12
    assert not derivation_apply([1, 2], AlgebraElement.one(th))


def test_derivation_apply_on_exact_input_is_float():
    out = derivation_apply([1, 0], mono(HALF, (1, 0)))
    assert not out.exact


def test_scaled_derivation_exact():
    y = [F(0), F(1)]
    out = derivation_apply_scaled(y, mono(HALF, (2, 3)))
    assert out == mono(HALF, (2, 3), 3)


@pytest.mark.parametrize("seed", range(3))
def test_leibniz_and_trace_vanish(seed):
    rng = seeded(seed)
    th = SkewMatrix.from_upper(3, list(rng.normal(size=3)), exact=False)
    x = list(rng.normal(size=3) + 1j * rng.normal(size=3))
    for _ in range(10):
        a, b = random_element(th, rng), random_element(th, rng)
        lhs = derivation_apply(x, a * b)
        rhs = derivation_apply(x, a) * b + a * derivation_apply(x, b)
        assert max_abs_difference(lhs, rhs) <= 1e-12 * max(1.0, lhs.seminorm(0))
        assert abs(complex(trace(derivation_apply(x, a)))) < 1e-12


def test_trace_kills_exact_derivation():
    rng = seeded(9)
    th = random_rational_theta(random.Random(9), 3)
    for _ in range(20):
        a = random_element(th, rng)
        assert trace(derivation_apply_scaled([F(1), F(-2), F(3, 2)], a)) == 0


# --- Q derivations ------------------------------------------------------------------

def test_q_on_h_is_zero(np_rng):
    Q = QSpec(HALF, {(2, 0): 1}, check=False)
    assert not q_derivation_apply(Q, random_element(HALF, np_rng))
    with pytest.raises(ValueError):
        QSpec(HALF, {(2, 0): 1})


def test_q_example():
    Q = QSpec(HALF, {(1, 0): 1})
    out = q_derivation_apply(Q, mono(HALF, (0, 1)))
    expected = (mono(HALF, (0, 1)) * mono(HALF, (1, 0))).scale(-2)
    assert out == expected
    assert out == commutator(Q.element(), mono(HALF, (0, 1)))


def random_q(theta, rng, k=3, box=3, exact=True):
    H = degenerate_subgroup(theta) if theta.exact else None
    q = {}
    while len(q) < k:
        g = tuple(int(v) for v in rng.integers(-box, box + 1, size=theta.n))
        if H is not None and H.contains(g):
            continue
        q[g] = complex(*rng.integers(-3, 4, size=2)) if exact else complex(*rng.normal(size=2))
    return QSpec(theta, q)


@pytest.mark.parametrize("seed", range(4))
def test_q_is_commutator(seed):
    rng = seeded(seed)
    for _ in range(10):
        th = random_rational_theta(random.Random(int(rng.integers(1 << 30))), int(rng.integers(2, 5)))
        if degenerate_subgroup(th).contains((1,) + (0,) * (th.n - 1)) and all(
                degenerate_subgroup(th).contains(v) for v in l1_ball(th.n, 1)):
            continue
        Q = random_q(th, rng)
        a = random_element(th, rng)
        assert q_derivation_apply(Q, a) == commutator(Q.element(), a)


def test_q_leibniz_float():
    rng = seeded(12)
    th = SkewMatrix.from_upper(2, [math.sqrt(2) - 1], exact=False)
    Q = random_q(th, rng, exact=False)
    for _ in range(10):
        a, b = random_element(th, rng), random_element(th, rng)
        lhs = q_derivation_apply(Q, a * b)
        rhs = q_derivation_apply(Q, a) * b + a * q_derivation_apply(Q, b)
        assert max_abs_difference(lhs, rhs) <= 1e-12 * max(1.0, lhs.seminorm(0))


# --- center ----------------------------------------------------------------------

def test_center_examples():
    assert center_test(AlgebraElement.one(HALF)) == (True, [])
    assert center_test(mono(HALF, (2, 0)))[0]
    assert center_test(mono(HALF, (1, 0))) == (False, [(1, 0)])
    with pytest.raises(TypeError):
        center_test(mono(SkewMatrix.from_upper(2, [0.5], exact=False), (1, 0)))


@given(st.integers(0, 10**6))
def test_center_cross_check(seed):
    rng = seeded(seed)
    th = random_rational_theta(random.Random(seed), 2 + seed % 2, denoms=(1, 2, 3, 4))
    H = degenerate_subgroup(th)
    pts = [tuple(sum(c * v[i] for c, v in zip(cs, H.basis)) for i in range(th.n))
           for cs in (rng.integers(-2, 3, size=H.rank) for _ in range(3))]
    a = AlgebraElement(th, {p: 1 + 0j for p in pts})
    if rng.random() < 0.5:
        a = a + mono(th, tuple(int(v) for v in rng.integers(-3, 4, size=th.n)))
    central, _ = center_test(a)
    commutes = all(a * mono(th, g) == mono(th, g) * a for g in l1_ball(th.n, 4))
    assert central == commutes


# --- split ---------------------------------------------------------------------------

def test_split_pure_canonical_float():
    th = SkewMatrix.from_upper(2, [math.sqrt(2) - 1], exact=False)
    x, q, resid = derivation_split(build_derivation(th, x=[1, 2]))
    assert np.allclose(x, [1, 2], atol=1e-12) and not q.q and resid == 0


def test_split_q_exact():
    Q = QSpec(HALF, {(1, 0): 1})
    res = derivation_split(build_derivation(HALF, Q=Q))
    assert res.q == Q and res.residual == 0 and res.x == (0, 0)


def test_split_exact_needs_scaled_x():
    with pytest.raises(ValueError):
        build_derivation(HALF, x=[1, 0])
    res = derivation_split(build_derivation(HALF, scaled_x=[F(1), F(-3, 2)]))
    assert res.scaled_x == (1, F(-3, 2))
    assert np.allclose(res.x, [1 / (2j * math.pi), -1.5 / (2j * math.pi)])


@pytest.mark.parametrize("seed", range(5))
def test_split_round_trip_float(seed):
    rng = seeded(seed)
    th = SkewMatrix.from_upper(2, [math.sqrt(2) - 1], exact=False)
    x = rng.normal(size=2) + 1j * rng.normal(size=2)
    Q = random_q(th, rng, k=5, exact=False)
    res = derivation_split(build_derivation(th, Q=Q, x=x))
    assert np.max(np.abs(np.array(res.x) - x)) < 1e-9
    assert max_abs_difference(res.q.element(), Q.element()) < 1e-9
    assert res.residual < 1e-9


def test_split_not_attributable():
    delta = build_derivation(HALF, scaled_x=[0, 0])
    bad = delta.values_on_generators[0] + mono(HALF, (3, 0))
    from nctorus.twisted import DerivationData
    with pytest.raises(NotAttributable) as info:
        derivation_split(DerivationData((bad, delta.values_on_generators[1])))
    assert info.value.point == (2, 0)


def test_split_window():
    Q = QSpec(HALF, {(3, 0): 1})
    with pytest.raises(ValueError):
        derivation_split(build_derivation(HALF, Q=Q), support_radius=2)


def test_split_distinct_inputs_give_distinct_data():
    rng = seeded(21)
    th = SkewMatrix.from_upper(3, [F(1, 3), F(1, 4), F(2, 5)])
    seen = {}
    for _ in range(20):
        y = [F(int(v)) for v in rng.integers(-2, 3, size=3)]
        Q = random_q(th, rng, k=2, box=2)
        d = build_derivation(th, Q=Q, scaled_x=y)
        key = (tuple(y), frozenset(Q.q.items()))
        for other_key, other in seen.items():
            if other_key != key:
                assert other != d
        seen[key] = d


# --- text format ------------------------------------------------------------------------

def test_element_text_round_trip(np_rng):
    th = SkewMatrix.from_upper(3, [F(1, 3), F(1, 4), F(2, 5)])
    a = random_element(th, np_rng)
    assert AlgebraElement.from_text(th, a.to_text()) == a
    fl = SkewMatrix.from_upper(2, [0.3], exact=False)
    b = random_element(fl, np_rng)
    assert AlgebraElement.from_text(fl, b.to_text()).is_close(b, 1e-10)
