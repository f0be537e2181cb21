"""Fock space Lambda(C^n): wedge/contraction operators, the canonical
transformations V1..V4, their conjugation matrices, and Chern characters.

Basis vectors a^S are indexed by bitmasks: bit j-1 is set iff j is in S, and
a^S = a^{s_1} ^ ... ^ a^{s_k} with s_1 < ... < s_k.  Operator indices j are
1-based to match a^1..a^n and b_1..b_n.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .lattice import SkewMatrix, bicharacter, l1_ball
from .sonn import BlockGroupElement, block_relations

MAX_N = 12
CONSTRUCTION_TOL = 1e-10
COMPOSITE_TOL = 1e-9
RESIDUAL_LIMIT = 1e-8


class VerificationError(AssertionError):
    def __init__(self, what: str, deviation: float):
        super().__init__(f"{what}: max deviation {deviation:.3e}")
        self.what = what
        self.deviation = deviation


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_N:
        raise ValueError(f"Fock space dimension n={n} outside 1..{MAX_N}")


def _sign_before(mask: int, j0: int) -> int:
    return -1 if bin(mask & ((1 << j0) - 1)).count("1") % 2 else 1


def _sign_after(mask: int, j0: int) -> int:
    return -1 if bin(mask >> (j0 + 1)).count("1") % 2 else 1


@lru_cache(maxsize=None)
def _wedge(n: int, j: int) -> np.ndarray:
    _check_n(n)
    if not 1 <= j <= n:
        raise IndexError(f"index {j} outside 1..{n}")
    j0 = j - 1
    dim = 1 << n
    m = np.zeros((dim, dim))
    for s in range(dim):
        if not s >> j0 & 1:
            m[s | 1 << j0, s] = _sign_before(s, j0)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def _contract(n: int, j: int, convention: str) -> np.ndarray:
    _check_n(n)
    if not 1 <= j <= n:
        raise IndexError(f"index {j} outside 1..{n}")
    j0 = j - 1
    sign = _sign_before if convention == "left" else _sign_after
    dim = 1 << n
    m = np.zeros((dim, dim))
    for s in range(dim):
        if s >> j0 & 1:
            m[s & ~(1 << j0), s] = sign(s, j0)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class FockOperator:
    n: int
    matrix: np.ndarray

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.n, self.matrix @ other.matrix)
        if isinstance(other, FockVector):
            return FockVector(self.n, self.matrix @ other.coords)
        return NotImplemented

    def inverse(self) -> "FockOperator":
        return FockOperator(self.n, np.linalg.inv(self.matrix))

    def to_csv(self) -> str:
        return matrix_to_csv(self.matrix)


def wedge_op(j: int, n: int) -> FockOperator:
    """epsilon_j = a^j ^ (.)"""
    return FockOperator(n, _wedge(n, j))


def contract_op(j: int, n: int) -> FockOperator:
    """iota_j = b_j contracted into (.), sign fixed by ``contraction_convention``."""
    return FockOperator(n, _contract(n, j, contraction_convention()))


@dataclass
class FockVector:
    n: int
    coords: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        self.coords = np.asarray(self.coords, dtype=np.complex128)
        if self.coords.shape != (1 << self.n,):
            raise ValueError(f"Fock vector for n={self.n} needs {1 << self.n} coordinates")

    @classmethod
    def basis(cls, n: int, subset) -> "FockVector":
        """a^S for S a collection of 1-based indices."""
        v = np.zeros(1 << n, dtype=np.complex128)
        v[subset_mask(subset)] = 1
        return cls(n, v)

    @classmethod
    def one(cls, n: int) -> "FockVector":
        return cls.basis(n, ())

    def __add__(self, other: "FockVector") -> "FockVector":
        return FockVector(self.n, self.coords + other.coords)

    def __sub__(self, other: "FockVector") -> "FockVector":
        return FockVector(self.n, self.coords - other.coords)

    def __mul__(self, s) -> "FockVector":
        return FockVector(self.n, self.coords * s)

    __rmul__ = __mul__

    def is_integral(self, tol: float = COMPOSITE_TOL) -> bool:
        c = self.coords
        return bool(np.all(np.abs(c - np.round(c.real) - 1j * np.round(c.imag)) <= tol))

    def to_json(self) -> str:
        return json.dumps({str(k): [_num(z.real), _num(z.imag)]
                           for k, z in enumerate(self.coords) if z != 0}, sort_keys=False)

    @classmethod
    def from_json(cls, n: int, text: str) -> "FockVector":
        data = json.loads(text)
        v = np.zeros(1 << n, dtype=np.complex128)
        for k, (re, im) in data.items():
            k = int(k)
            if not 0 <= k < 1 << n:
                raise ValueError(f"bitmask {k} out of range for n={n}")
            v[k] = complex(re, im)
        return cls(n, v)


def _num(x: float):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else float(f"{x:.12g}")


def subset_mask(subset) -> int:
    mask = 0
    for j in subset:
        mask |= 1 << (int(j) - 1)
    return mask


def _operator_basis(n: int) -> list[np.ndarray]:
    """(b_1..b_n, a^1..a^n) as matrices."""
    conv = contraction_convention()
    return [_contract(n, j, conv) for j in range(1, n + 1)] + [_wedge(n, j) for j in range(1, n + 1)]


def _nilpotent_exp(x: np.ndarray, order: int) -> np.ndarray:
    out = np.eye(x.shape[0], dtype=np.result_type(x, float))
    term = out.copy()
    for m in range(1, order + 1):
        term = term @ x / m
        out = out + term
    return out


def _quadratic(ops: list[np.ndarray], coeffs: np.ndarray) -> np.ndarray:
    n = len(ops)
    acc = np.zeros_like(ops[0], dtype=np.result_type(coeffs, float))
    for j in range(n):
        for k in range(n):
            if coeffs[j, k] != 0:
                acc = acc + coeffs[j, k] * (ops[j] @ ops[k])
    return acc / 2


def contraction_exp(theta: np.ndarray, sign: int = 1, convention: str | None = None) -> np.ndarray:
    """exp(sign/2 * sum_jk theta_jk b_j b_k)."""
    theta = np.asarray(theta)
    n = theta.shape[0]
    conv = convention or contraction_convention()
    ops = [_contract(n, j, conv) for j in range(1, n + 1)]
    return _nilpotent_exp(sign * _quadratic(ops, theta), n)


def wedge_exp(phi: np.ndarray) -> np.ndarray:
    """exp(1/2 * sum_jk Phi_jk a^j a^k)."""
    phi = np.asarray(phi)
    n = phi.shape[0]
    ops = [_wedge(n, j) for j in range(1, n + 1)]
    return _nilpotent_exp(_quadratic(ops, phi), n)


def exterior_power_matrix(a: np.ndarray) -> np.ndarray:
    """phi^* on Lambda: a^s -> sum_k A_sk a^k, extended multiplicatively; entry (T, S) = det A[S, T]."""
    a = np.asarray(a)
    n = a.shape[0]
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.result_type(a, float))
    out[0, 0] = 1
    for k in range(1, n + 1):
        for S in combinations(range(n), k):
            ms = sum(1 << s for s in S)
            for T in combinations(range(n), k):
                mt = sum(1 << t for t in T)
                out[mt, ms] = np.linalg.det(a[np.ix_(S, T)])
    return out


@dataclass
class MoritaData:
    theta: SkewMatrix
    theta_prime: SkewMatrix
    curvature: np.ndarray
    amatrix: np.ndarray
    lam: complex = 1.0

    def __post_init__(self):
        n = self.theta.n
        _check_n(n)
        if self.theta_prime.n != n:
            raise ValueError("theta and theta_prime have different n")
        self.curvature = np.asarray(self.curvature, dtype=float)
        self.amatrix = np.asarray(self.amatrix, dtype=float)
        if self.curvature.shape != (n, n) or self.amatrix.shape != (n, n):
            raise ValueError("curvature and amatrix must be n x n")
        if np.max(np.abs(self.curvature + self.curvature.T), initial=0.0) > 1e-12:
            raise ValueError("curvature must be skew-symmetric")
        if abs(np.linalg.det(self.amatrix)) < 1e-12:
            raise ValueError("amatrix must be invertible")
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")

    @property
    def n(self) -> int:
        return self.theta.n

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "theta": [[_num(v) for v in r] for r in self.theta.array()],
            "theta_prime": [[_num(v) for v in r] for r in self.theta_prime.array()],
            "curvature": [[_num(v) for v in r] for r in self.curvature],
            "amatrix": [[_num(v) for v in r] for r in self.amatrix],
            "lambda": [_num(complex(self.lam).real), _num(complex(self.lam).imag)],
        })

    @classmethod
    def from_json(cls, text: str) -> "MoritaData":
        d = json.loads(text)
        lam = d.get("lambda", 1.0)
        lam = complex(*lam) if isinstance(lam, list) else complex(lam)
        return cls(SkewMatrix(d["theta"], exact=False), SkewMatrix(d["theta_prime"], exact=False),
                   np.array(d["curvature"], float), np.array(d["amatrix"], float), lam)

    @classmethod
    def random(cls, rng, n: int, scale: float = 1.0) -> "MoritaData":
        def skew():
            m = rng.normal(scale=scale, size=(n, n))
            return np.triu(m, 1) - np.triu(m, 1).T
        while True:
            a = np.eye(n) + rng.normal(scale=0.5, size=(n, n))
            if abs(np.linalg.det(a)) > 0.2 and np.linalg.cond(a) < 50:
                break
        lam = complex(rng.uniform(0.5, 2.0), rng.normal(scale=0.3))
        return cls(SkewMatrix(skew().tolist(), exact=False), SkewMatrix(skew().tolist(), exact=False),
                   skew(), a, lam)


def build_v(kind: int, data: MoritaData) -> FockOperator:
    """V1 = e^{1/2 theta bb}, V2 = lam e^{1/2 Phi aa}, V3 = phi^*, V4 = e^{-1/2 theta' bb}."""
    n = data.n
    if kind == 1:
        m = contraction_exp(data.theta.array(), +1)
    elif kind == 2:
        m = data.lam * wedge_exp(data.curvature)
    elif kind == 3:
        m = exterior_power_matrix(data.amatrix)
    elif kind == 4:
        m = contraction_exp(data.theta_prime.array(), -1)
    else:
        raise ValueError(f"V kind must be 1..4, got {kind}")
    return FockOperator(n, np.asarray(m, dtype=np.complex128))


def composite_v(data: MoritaData) -> FockOperator:
    v = build_v(1, data)
    for k in (2, 3, 4):
        v = v @ build_v(k, data)
    return v


def _conjugation(mat: np.ndarray, ops: list[np.ndarray]) -> tuple[np.ndarray, float]:
    if np.linalg.cond(mat) > 1e12:
        raise np.linalg.LinAlgError("V is not invertible")
    inv = np.linalg.inv(mat)
    basis = np.stack([o.reshape(-1) for o in ops], axis=1).astype(np.complex128)
    targets = np.stack([(mat @ o @ inv).reshape(-1) for o in ops], axis=1)
    g, *_ = np.linalg.lstsq(basis, targets, rcond=None)
    resid = float(np.max(np.abs(basis @ g - targets), initial=0.0))
    return g, resid


def conjugation_matrix(v: FockOperator, return_residual: bool = False):
    """g with V (b, a) V^{-1} = (b, a) g, the operator row acted on from the right."""
    g, resid = _conjugation(v.matrix, _operator_basis(v.n))
    if resid > RESIDUAL_LIMIT:
        raise VerificationError("V is not a linear canonical transformation", resid)
    if np.max(np.abs(g.imag)) <= 1e-13:
        g = g.real
    return (g, resid) if return_residual else g


@lru_cache(maxsize=None)
def contraction_convention() -> str:
    """Pick the contraction sign for which V1's conjugation matrix is (I theta; 0 I).

    'left' counts elements of S below j, 'right' counts those above.
    """
    n = 3
    theta = np.array([[0, 0.3, -0.7], [-0.3, 0, 0.2], [0.7, -0.2, 0]])
    want = np.block([[np.eye(n), theta], [np.zeros((n, n)), np.eye(n)]])
    for conv in ("left", "right"):
        ops = [_contract(n, j, conv) for j in range(1, n + 1)] + [_wedge(n, j) for j in range(1, n + 1)]
        v1 = contraction_exp(theta, +1, convention=conv)
        g, resid = _conjugation(v1, ops)
        if resid < CONSTRUCTION_TOL and np.max(np.abs(g - want)) < CONSTRUCTION_TOL:
            return conv
    raise RuntimeError("no contraction sign convention reproduces g1")


def displayed_g(kind: int, data: MoritaData) -> np.ndarray:
    """g1..g4 in closed form."""
    n = data.n
    I, Z = np.eye(n), np.zeros((n, n))
    if kind == 1:
        return np.block([[I, data.theta.array()], [Z, I]])
    if kind == 2:
        return np.block([[I, Z], [data.curvature, I]])
    if kind == 3:
        return np.block([[np.linalg.inv(data.amatrix), Z], [Z, data.amatrix.T]])
    if kind == 4:
        return np.block([[I, -data.theta_prime.array()], [Z, I]])
    raise ValueError(f"g kind must be 1..4, got {kind}")


def split_blocks(g: np.ndarray):
    n = g.shape[0] // 2
    return g[:n, :n], g[:n, n:], g[n:, :n], g[n:, n:]


def onn_deviation(g: np.ndarray) -> float:
    """Max violation of the O(n,n) block relations and of det g = 1."""
    rels = block_relations(tuple(np.asarray(b) for b in split_blocks(g)))
    dev = max(float(np.max(np.abs(r))) for r in rels)
    return max(dev, abs(np.linalg.det(g) - 1))


def compose_g(data: MoritaData) -> np.ndarray:
    """(S R; N M) in closed form, checked against g1 g2 g3 g4 and the O(n,n) relations."""
    th, thp = data.theta.array(), data.theta_prime.array()
    phi, a = data.curvature, data.amatrix
    ainv = np.linalg.inv(a)
    S = ainv + th @ phi @ ainv
    R = -ainv @ thp - th @ phi @ ainv @ thp + th @ a.T
    N = phi @ ainv
    M = -phi @ ainv @ thp + a.T
    g = np.block([[S, R], [N, M]])
    prod = displayed_g(1, data) @ displayed_g(2, data) @ displayed_g(3, data) @ displayed_g(4, data)
    dev = float(np.max(np.abs(g - prod)))
    if dev > CONSTRUCTION_TOL:
        raise VerificationError("compose_g differs from g1 g2 g3 g4", dev)
    dev = onn_deviation(g)
    if dev > COMPOSITE_TOL:
        raise VerificationError("compose_g violates the O(n,n) relations or det 1", dev)
    return g


def recovered_theta(g, theta_prime: SkewMatrix) -> SkewMatrix:
    """theta = (S theta' + R)(N theta' + M)^{-1}."""
    if isinstance(g, BlockGroupElement):
        from .sonn import act
        return act(g, theta_prime)
    S, R, N, M = split_blocks(np.asarray(g, dtype=float))
    tp = theta_prime.array()
    den = N @ tp + M
    if np.linalg.cond(den) > 1e12:
        raise np.linalg.LinAlgError("N theta' + M is singular")
    out = np.linalg.solve(den.T, (S @ tp + R).T).T
    skew = float(np.max(np.abs(out + out.T)))
    if skew > COMPOSITE_TOL * max(1.0, float(np.max(np.abs(out)))):
        raise VerificationError("recovered theta is not skew-symmetric", skew)
    return SkewMatrix(((out - out.T) / 2).tolist(), exact=False)


def chern(theta_prime: SkewMatrix, mu: FockVector) -> FockVector:
    """ch = exp(-1/2 sum theta'_jk b_j b_k) mu for an integral class mu."""
    if not mu.is_integral(0.0):
        raise ValueError("K-theory class must have integer coordinates")
    return FockVector(mu.n, contraction_exp(theta_prime.array(), -1) @ mu.coords)


def chern_transport(ch: FockVector, data: MoritaData) -> FockVector:
    """lam * exp(1/2 sum Phi_jk a^j a^k) phi^*(ch)."""
    return FockVector(ch.n, (build_v(2, data) @ build_v(3, data)).matrix @ ch.coords)


def transport_residual(data: MoritaData) -> float:
    """max over basis classes mu of |chern_transport(chern(theta', mu)) - chern(theta, V mu)|."""
    n = data.n
    v = composite_v(data).matrix
    back = contraction_exp(data.theta.array(), -1)
    worst = 0.0
    for s in range(1 << n):
        mu = np.zeros(1 << n, dtype=np.complex128)
        mu[s] = 1
        lhs = chern_transport(chern(data.theta_prime, FockVector(n, mu)), data).coords
        rhs = back @ (v @ mu)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


@dataclass
class IntegralityReport:
    integral: bool
    witness: dict
    g: np.ndarray | None = None
    certified: bool = False

    @property
    def message(self) -> str:
        if self.certified:
            return "g in SO(n,n|Z) certified numerically"
        return self.witness.get("reason", "")


def integrality_check(v: FockOperator, tol: float = COMPOSITE_TOL) -> IntegralityReport:
    """Does V map Lambda(Z^n) into itself?  If so, round and certify g."""
    m = v.matrix
    for s in range(m.shape[1]):
        col = m[:, s]
        off = np.abs(col - np.round(col.real) - 1j * np.round(col.imag))
        if np.max(off) > tol:
            t = int(np.argmax(off))
            return IntegralityReport(False, {"reason": "V does not preserve Lambda(Z^n)",
                                             "class": s, "component": t,
                                             "value": [float(col[t].real), float(col[t].imag)]})
    g = conjugation_matrix(v)
    g = np.real_if_close(np.asarray(g))
    gi = np.round(np.real(g))
    dev = float(np.max(np.abs(g - gi)))
    witness = {"reason": "V preserves Lambda(Z^n)", "g_integer_deviation": dev}
    certified = dev <= tol and onn_deviation(gi) == 0
    if certified:
        witness["g"] = gi.astype(int).tolist()
    return IntegralityReport(True, witness, g=gi.astype(int) if dev <= tol else g, certified=certified)


def bicharacter_iso_check(S, theta: SkewMatrix, theta_prime: SkewMatrix, spot_radius: int = 3) -> bool:
    """True iff S^t theta S - theta' is integral, i.e. rho_theta(Sx ^ Sy) = rho_theta'(x ^ y)."""
    S = [[int(v) for v in r] for r in S]
    n = len(S)
    from .sonn import int_det, matmul, transpose
    d = int_det(S)
    if d not in (1, -1):
        raise ValueError(f"S is not unimodular (det {d})")
    if theta.exact and theta_prime.exact:
        diff = matmul(matmul(transpose(S), theta.entries), S)
        ok = all((diff[j][k] - theta_prime.entries[j][k]).denominator == 1
                 for j in range(n) for k in range(n))
    else:
        diff = np.array(S).T @ theta.array() @ np.array(S) - theta_prime.array()
        ok = bool(np.max(np.abs(diff - np.round(diff))) <= COMPOSITE_TOL)
    # independent spot check through the bicharacter itself
    pts = list(l1_ball(n, spot_radius))
    for x in pts:
        sx = [sum(S[i][j] * x[j] for j in range(n)) for i in range(n)]
        for y in pts:
            sy = [sum(S[i][j] * y[j] for j in range(n)) for i in range(n)]
            a, b = bicharacter(theta, sx, sy), bicharacter(theta_prime, x, y)
            if theta.exact and theta_prime.exact:
                same = a == b
            else:
                za = a if isinstance(a, complex) else np.exp(2j * math.pi * float(a))
                zb = b if isinstance(b, complex) else np.exp(2j * math.pi * float(b))
                same = abs(za - zb) <= 1e-8
            if not same:
                if ok:
                    raise VerificationError(f"bicharacter spot check failed at x={x}, y={y}", 1.0)
                return False
    return ok


def matrix_to_csv(m) -> str:
    m = np.asarray(m)
    rows = []
    for r in m:
        if np.iscomplexobj(r) and np.any(np.abs(np.imag(r)) > 0):
            rows.append(",".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in r))
        else:
            rows.append(",".join(f"{float(np.real(v)):.12g}" for v in r))
    return "\n".join(rows) + "\n"
