import itertools

import numpy as np
import pytest

from nctorus.fock import (
    FockVector, MoritaData, VerificationError, bicharacter_iso_check, build_v, chern,
    chern_transport, compose_g, composite_v, conjugation_matrix, contract_op, contraction_convention,
    displayed_g, exterior_power_matrix, integrality_check, onn_deviation, recovered_theta,
    transport_residual, wedge_op, FockOperator,
)
from nctorus.lattice import SkewMatrix
from nctorus.sonn import act, shift

from fractions import Fraction as F


def skew(t, n=2):
    return SkewMatrix.from_upper(n, [t] if n == 2 else t, exact=False)


def trivial_data(n, theta=None, theta_prime=None, lam=1.0):
    z = SkewMatrix.zeros(n, exact=False)
    return MoritaData(theta or z, theta_prime or z, np.zeros((n, n)), np.eye(n), lam)


def test_convention_is_left():
    assert contraction_convention() == "left"


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_car(n):
    eye = np.eye(1 << n)
    for j, k in itertools.product(range(1, n + 1), repeat=2):
        e, i = wedge_op(j, n).matrix, contract_op(k, n).matrix
        assert np.array_equal(e @ i + i @ e, eye * (j == k))
        if j != k:
            ij, ik = contract_op(j, n).matrix, contract_op(k, n).matrix
            ej, ek = wedge_op(j, n).matrix, wedge_op(k, n).matrix
            assert np.array_equal(ij @ ik, -ik @ ij)
            assert np.array_equal(ej @ ek, -ek @ ej)


def test_contract_sign_example():
    v = FockVector.basis(2, (1, 2))
    assert np.array_equal((contract_op(2, 2) @ v).coords, FockVector.basis(2, (1,)).coords * -1)


def test_index_range():
    with pytest.raises(IndexError):
        wedge_op(3, 2)
    with pytest.raises(ValueError):
        FockVector.one(13)


def test_build_v_identities():
    d = trivial_data(3)
    for k in (1, 3, 4):
        assert np.allclose(build_v(k, d).matrix, np.eye(8))


def test_v1_example():
    d = trivial_data(2, theta=skew(0.3))
    out = build_v(1, d) @ FockVector.basis(2, (1, 2))
    assert np.allclose(out.coords, [-0.3, 0, 0, 1])


def test_exterior_power_is_multiplicative():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    # a^j -> sum_k A_jk a^k is contravariant in A
    assert np.allclose(exterior_power_matrix(a @ b), exterior_power_matrix(b) @ exterior_power_matrix(a))


def test_conjugation_identity():
    g = conjugation_matrix(FockOperator(2, np.eye(4, dtype=complex)))
    assert np.allclose(g, np.eye(4))


def test_conjugation_rejects_non_canonical():
    rng = np.random.default_rng(1)
    with pytest.raises(VerificationError):
        conjugation_matrix(FockOperator(2, rng.normal(size=(4, 4)) + 0j))


@pytest.mark.parametrize("n", [2, 3])
def test_g_k_oracle(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        d = MoritaData.random(rng, n)
        for k in (1, 2, 3, 4):
            g, resid = conjugation_matrix(build_v(k, d), return_residual=True)
            assert resid < 1e-10
            assert np.max(np.abs(g - displayed_g(k, d))) < 1e-10
        gc = conjugation_matrix(composite_v(d))
        prod = displayed_g(1, d) @ displayed_g(2, d) @ displayed_g(3, d) @ displayed_g(4, d)
        assert np.max(np.abs(gc - prod)) < 1e-9


def test_compose_g_trivial():
    th = skew([0.1, 0.2, 0.3], 3)
    d = MoritaData(th, th, np.zeros((3, 3)), np.eye(3))
    assert np.allclose(compose_g(d), np.eye(6), atol=1e-15)


def test_compose_g_phi_zero_has_n_zero():
    rng = np.random.default_rng(3)
    d = MoritaData.random(rng, 3)
    d.curvature = np.zeros((3, 3))
    g = compose_g(d)
    assert np.array_equal(g[3:, :3], np.zeros((3, 3)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_compose_and_recover(n):
    rng = np.random.default_rng(10 + n)
    for _ in range(10):
        d = MoritaData.random(rng, n)
        g = compose_g(d)
        assert onn_deviation(g) < 1e-9
        back = recovered_theta(g, d.theta_prime)
        assert np.max(np.abs(back.array() - d.theta.array())) < 1e-9


def test_recovered_theta_examples():
    tp = skew(0.37)
    assert np.allclose(recovered_theta(np.eye(4), tp).array(), tp.array())
    N = ((0, 2), (-2, 0))
    g = np.array(shift(N).full(), dtype=float)
    exact = act(shift(N), SkewMatrix.from_upper(2, [F(37, 100)]))
    assert np.allclose(recovered_theta(g, tp).array(), exact.array())
    assert recovered_theta(shift(N), SkewMatrix.from_upper(2, [F(37, 100)])) == exact


def test_chern_examples():
    tp = skew(0.7)
    one = FockVector.one(2)
    assert np.allclose(chern(tp, one).coords, one.coords)
    top = FockVector.basis(2, (1, 2))
    assert np.allclose(chern(SkewMatrix.zeros(2, exact=False), top).coords, top.coords)
    assert np.allclose(chern(tp, top).coords, [0.7, 0, 0, 1])
    with pytest.raises(ValueError):
        chern(tp, FockVector(2, [0.5, 0, 0, 0]))


def test_chern_additive():
    rng = np.random.default_rng(4)
    tp = skew(list(rng.normal(size=3)), 3)
    for _ in range(10):
        a = FockVector(3, rng.integers(-5, 6, size=8))
        b = FockVector(3, rng.integers(-5, 6, size=8))
        assert np.allclose(chern(tp, a + b).coords, (chern(tp, a) + chern(tp, b)).coords)


def test_chern_transport_examples():
    d = trivial_data(2)
    v = FockVector(2, [1, 2, 3, 4])
    assert np.allclose(chern_transport(v, d).coords, v.coords)
    d = trivial_data(2, lam=2.5 - 1j)
    assert np.allclose(chern_transport(chern(d.theta_prime, FockVector.one(2)), d).coords,
                       [2.5 - 1j, 0, 0, 0])


@pytest.mark.parametrize("n", [2, 3])
def test_transport_identity(n):
    rng = np.random.default_rng(40 + n)
    for _ in range(10):
        assert transport_residual(MoritaData.random(rng, n)) < 1e-9


def test_integrality_examples():
    assert integrality_check(FockOperator(2, np.eye(4, dtype=complex))).integral
    rep = integrality_check(build_v(1, trivial_data(2, theta=skew(0.5))))
    assert not rep.integral and rep.witness["class"] == 3


def test_integrality_shift_pair():
    N = np.array([[0, 1, -2], [-1, 0, 3], [2, -3, 0]])
    tp = skew([0.31, -0.12, 0.58], 3)
    th = SkewMatrix((tp.array() + N).tolist(), exact=False)
    d = MoritaData(th, tp, np.zeros((3, 3)), np.eye(3))
    rep = integrality_check(composite_v(d))
    assert rep.integral and rep.certified
    assert np.array_equal(rep.g, np.array(shift(N.tolist()).full()))


def test_bicharacter_iso_examples():
    th = SkewMatrix.from_upper(2, [F(1, 3)])
    eye = [[1, 0], [0, 1]]
    assert bicharacter_iso_check(eye, th, th)
    assert bicharacter_iso_check(eye, th, SkewMatrix.from_upper(2, [F(4, 3)]))
    assert not bicharacter_iso_check(eye, th, SkewMatrix.from_upper(2, [F(1, 4)]))
    with pytest.raises(ValueError):
        bicharacter_iso_check([[2, 0], [0, 1]], th, th)


def test_bicharacter_iso_nontrivial_s():
    th = SkewMatrix.from_upper(3, [F(1, 3), F(1, 5), F(-2, 7)])
    S = [[1, 1, 0], [0, 1, 0], [2, 0, 1]]
    from nctorus.sonn import matmul, transpose
    tp = SkewMatrix(matmul(matmul(transpose(S), th.entries), S))
    assert bicharacter_iso_check(S, th, tp)


def test_fock_json_round_trip():
    v = FockVector(3, np.arange(8) + 1j)
    assert np.allclose(FockVector.from_json(3, v.to_json()).coords, v.coords)


def test_morita_json_round_trip():
    d = MoritaData.random(np.random.default_rng(7), 3)
    back = MoritaData.from_json(d.to_json())
    assert np.allclose(compose_g(back), compose_g(d), atol=1e-10)
