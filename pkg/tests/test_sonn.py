import random
from fractions import Fraction

import numpy as np
import pytest

from nctorus.lattice import SkewMatrix
from nctorus.sonn import (
    ActionUndefined, BlockGroupElement, OrbitWord, act, element_from_label, flip, generator_labels,
    generators, gl, identity, inverse_label, orbit_search, shift, validate, zeros,
)

from conftest import random_rational_theta

F = Fraction
N12 = ((0, 1), (-1, 0))


def th2(t):
    return SkewMatrix.from_upper(2, [F(t)])


def random_word_element(rng, n, length):
    gens = generators(n)
    g = BlockGroupElement.identity(n)
    for _ in range(length):
        g = rng.choice(gens)[1] @ g
    return g


def test_validate_examples():
    assert validate(BlockGroupElement.identity(3))
    assert validate(shift(N12))
    E12 = ((0, 1), (0, 0))
    assert not validate(BlockGroupElement(identity(2), E12, zeros(2), identity(2)))


def test_det_required():
    # full flip for n = 3 satisfies the relations but has det -1
    assert flip(3).det() == -1 and not validate(flip(3))
    assert validate(flip(2)) and validate(flip(3, [0, 1]))


def test_act_examples():
    assert act(shift(N12), th2(F(1, 3))) == th2(F(4, 3))
    assert act(BlockGroupElement.identity(2), th2(F(1, 3))) == th2(F(1, 3))
    assert act(flip(2), th2(F(1, 3))).entries[0][1] == -3


def test_act_undefined():
    with pytest.raises(ActionUndefined):
        act(flip(2), SkewMatrix.zeros(2))


def test_act_float():
    th = SkewMatrix.from_upper(2, [0.25], exact=False)
    assert act(flip(2), th).entries[0][1] == pytest.approx(-4)


def test_generators():
    assert gl(identity(3)) == BlockGroupElement.identity(3)
    assert act(shift(N12), th2(F(2, 7))) == th2(F(9, 7))
    for n in (2, 3, 4):
        labs = generator_labels(n)
        for lab in labs:
            g = element_from_label(n, lab)
            assert validate(g), lab
            assert element_from_label(n, inverse_label(lab)) @ g == BlockGroupElement.identity(n)


def test_group_closure_and_inverse():
    rng = random.Random(5)
    for n in (2, 3):
        for _ in range(30):
            a, b = random_word_element(rng, n, 4), random_word_element(rng, n, 4)
            assert validate(a @ b)
            assert a @ a.inverse() == BlockGroupElement.identity(n)


def test_act_composition_exact():
    rng = random.Random(8)
    checked = 0
    while checked < 60:
        n = rng.choice((2, 3))
        th = random_rational_theta(rng, n)
        g1, g2 = random_word_element(rng, n, 3), random_word_element(rng, n, 3)
        try:
            lhs = act(g2, act(g1, th))
            rhs = act(g2 @ g1, th)
        except ActionUndefined:
            continue
        assert lhs == rhs and lhs.exact
        checked += 1


def test_orbit_search_examples():
    w = orbit_search(th2(F(1, 3)), th2(F(1, 3)))
    assert w is not None and len(w) == 0
    w = orbit_search(th2(F(1, 3)), th2(F(4, 3)), max_depth=2)
    assert len(w) == 1 and w.word[0]["kind"] == "shift"
    w = orbit_search(th2(F(1, 3)), th2(-3), max_depth=2)
    assert len(w) <= 2 and any(lab["kind"] == "flip" for lab in w.word)
    w = orbit_search(th2(F(1, 3)), th2(F(-1, 3)), max_depth=2)
    assert len(w) == 1 and w.word[0]["kind"] == "gl"


def test_orbit_search_words_verify():
    rng = random.Random(2)
    for _ in range(10):
        th = random_rational_theta(rng, 2)
        g = random_word_element(rng, 2, 2)
        try:
            target = act(g, th)
        except ActionUndefined:
            continue
        w = orbit_search(th, target, max_depth=3, max_denominator=200)
        assert w is not None
        assert w.apply(th) == target
        assert act(w.composed(), th) == target


def test_orbit_word_json_round_trip():
    w = orbit_search(th2(F(1, 3)), th2(F(3, 4)), max_depth=4)
    back = OrbitWord.from_json(2, w.to_json())
    assert back.composed() == w.composed()


def test_orbit_search_not_found_is_none():
    assert orbit_search(th2(F(1, 3)), th2(F(2, 7)), max_depth=2) is None
