"""SO(n,n|Z) in (A, B; C, D) block form and its partial action theta -> (A theta + B)(C theta + D)^-1."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice import DimensionError, SkewMatrix

COND_LIMIT = 1e12

Matrix = tuple[tuple, ...]


class ActionUndefined(ArithmeticError):
    """C theta + D is singular, so g is not defined at theta."""


def _mat(rows) -> Matrix:
    return tuple(tuple(r) for r in rows)


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def zeros(n: int) -> Matrix:
    return tuple((0,) * n for _ in range(n))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def matadd(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def rational_inverse(a: Matrix) -> Matrix:
    """Gauss-Jordan over Q; raises ZeroDivisionError when singular."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(tuple(row[n:]) for row in m)


def int_det(a: Matrix) -> int:
    """Bareiss fraction-free determinant."""
    m = [list(map(int, r)) for r in a]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1


@dataclass(frozen=True)
class BlockGroupElement:
    A: Matrix
    B: Matrix
    C: Matrix
    D: Matrix

    def __post_init__(self):
        n = len(self.A)
        for blk in (self.A, self.B, self.C, self.D):
            if len(blk) != n or any(len(r) != n for r in blk):
                raise DimensionError("blocks must all be n x n")
        for name in "ABCD":
            object.__setattr__(self, name, _mat(tuple(int(v) for v in r) for r in getattr(self, name)))

    @property
    def n(self) -> int:
        return len(self.A)

    @classmethod
    def identity(cls, n: int) -> "BlockGroupElement":
        return cls(identity(n), zeros(n), zeros(n), identity(n))

    @classmethod
    def from_full(cls, m: Sequence[Sequence[int]]) -> "BlockGroupElement":
        size = len(m)
        if size % 2:
            raise DimensionError("full matrix must be 2n x 2n")
        n = size // 2
        return cls(
            tuple(tuple(m[i][:n]) for i in range(n)),
            tuple(tuple(m[i][n:]) for i in range(n)),
            tuple(tuple(m[i][:n]) for i in range(n, size)),
            tuple(tuple(m[i][n:]) for i in range(n, size)),
        )

    def full(self) -> Matrix:
        top = tuple(a + b for a, b in zip(self.A, self.B))
        bottom = tuple(c + d for c, d in zip(self.C, self.D))
        return top + bottom

    def __matmul__(self, other: "BlockGroupElement") -> "BlockGroupElement":
        return BlockGroupElement.from_full(matmul(self.full(), other.full()))

    def inverse(self) -> "BlockGroupElement":
        """J g^t J with J = (0 I; I 0), valid for elements of O(n,n)."""
        return BlockGroupElement(transpose(self.D), transpose(self.B),
                                 transpose(self.C), transpose(self.A))

    def det(self) -> int:
        return int_det(self.full())


def block_relations(g) -> tuple:
    """(A^tC + C^tA, B^tD + D^tB, A^tD + C^tB - I) for any block matrix (exact or numpy)."""
    A, B, C, D = g
    if isinstance(A, np.ndarray):
        n = A.shape[0]
        return (A.T @ C + C.T @ A, B.T @ D + D.T @ B, A.T @ D + C.T @ B - np.eye(n))
    n = len(A)
    r1 = matadd(matmul(transpose(A), C), matmul(transpose(C), A))
    r2 = matadd(matmul(transpose(B), D), matmul(transpose(D), B))
    r3 = matadd(matadd(matmul(transpose(A), D), matmul(transpose(C), B)),
                tuple(tuple(-int(i == j) for j in range(n)) for i in range(n)))
    return r1, r2, r3


def validate(g: BlockGroupElement) -> bool:
    """All three block relations exactly, and determinant 1."""
    rels = block_relations((g.A, g.B, g.C, g.D))
    if any(v != 0 for r in rels for row in r for v in row):
        return False
    return g.det() == 1


def act(g: BlockGroupElement, theta: SkewMatrix) -> SkewMatrix:
    """g theta = (A theta + B)(C theta + D)^{-1}."""
    if g.n != theta.n:
        raise DimensionError(f"group element has n={g.n}, theta has n={theta.n}")
    if theta.exact:
        t = theta.entries
        num = matadd(matmul(g.A, t), g.B)
        den = matadd(matmul(g.C, t), g.D)
        try:
            inv = rational_inverse(den)
        except ZeroDivisionError:
            raise ActionUndefined("action undefined at theta: C theta + D is singular") from None
        out = matmul(num, inv)
    else:
        t = theta.array()
        A, B, C, D = (np.array(m, dtype=float) for m in (g.A, g.B, g.C, g.D))
        den = C @ t + D
        if np.linalg.cond(den) > COND_LIMIT:
            raise ActionUndefined("action undefined at theta: C theta + D is (numerically) singular")
        out = np.linalg.solve(den.T, (A @ t + B).T).T
        if np.max(np.abs(out + out.T)) > 1e-9 * max(1.0, np.max(np.abs(out))):
            raise ArithmeticError("image is not skew-symmetric; is g in O(n,n)?")
        out = ((out - out.T) / 2).tolist()
    # skewness follows from the block relations; SkewMatrix re-checks it
    return SkewMatrix(out, exact=theta.exact)


# --- generators -------------------------------------------------------------

def gl(R: Sequence[Sequence[int]]) -> BlockGroupElement:
    """(R, 0; 0, R^{-t}) for R in GL(n, Z)."""
    R = _mat(R)
    n = len(R)
    inv = rational_inverse(R)
    if any(v.denominator != 1 for r in inv for v in r):
        raise ValueError("R is not unimodular")
    return BlockGroupElement(R, zeros(n), zeros(n), transpose(_mat((int(v) for v in r) for r in inv)))


def shift(N: Sequence[Sequence[int]]) -> BlockGroupElement:
    """(I, N; 0, I) for integer skew N."""
    N = _mat(N)
    n = len(N)
    return BlockGroupElement(identity(n), N, zeros(n), identity(n))


def flip(n: int, coords: Sequence[int] | None = None) -> BlockGroupElement:
    """Swap x_i <-> x_{n+i} for i in coords (default: all).  det = (-1)^len(coords)."""
    coords = set(range(n)) if coords is None else set(coords)
    P = tuple(tuple(int(i == j and i in coords) for j in range(n)) for i in range(n))
    Q = tuple(tuple(int(i == j and i not in coords) for j in range(n)) for i in range(n))
    return BlockGroupElement(Q, P, P, Q)


def _elem(n, i, j, s):
    return tuple(tuple(int(a == b) + (s if (a, b) == (i, j) else 0) for b in range(n)) for a in range(n))


def _swap(n, i, j):
    perm = list(range(n))
    perm[i], perm[j] = j, i
    return tuple(tuple(int(perm[a] == b) for b in range(n)) for a in range(n))


def _skew(n, i, j, s):
    return tuple(tuple(s if (a, b) == (i, j) else (-s if (a, b) == (j, i) else 0) for b in range(n))
                 for a in range(n))


def element_from_label(n: int, label: dict) -> BlockGroupElement:
    kind = label["kind"]
    p = label.get("params", {})
    if kind == "gl":
        if p["type"] == "elem":
            return gl(_elem(n, p["i"], p["j"], p["sign"]))
        if p["type"] == "swap":
            return gl(_swap(n, p["i"], p["j"]))
        if p["type"] == "matrix":
            return gl(p["R"])
    elif kind == "shift":
        if "N" in p:
            return shift(p["N"])
        return shift(_skew(n, p["i"], p["j"], p["sign"]))
    elif kind == "flip":
        return flip(n, p.get("coords"))
    elif kind == "matrix":
        return BlockGroupElement.from_full(p["g"])
    raise ValueError(f"unknown generator label {label!r}")


def inverse_label(label: dict) -> dict:
    kind, p = label["kind"], dict(label.get("params", {}))
    if kind in ("gl", "shift") and "sign" in p:
        p["sign"] = -p["sign"]
        return {"kind": kind, "params": p}
    if kind == "flip" or (kind == "gl" and p.get("type") == "swap"):
        return {"kind": kind, "params": p}
    raise ValueError(f"no closed-form inverse label for {label!r}")


def generator_labels(n: int) -> list[dict]:
    """Elementary GL(n,Z) moves, transpositions, elementary skew shifts, flips.

    The full flip has det (-1)^n, so it is offered only for even n; pair flips
    on coordinates {i, j} (det 1) are offered for n >= 3.
    """
    if n < 2:
        raise ValueError("generators need n >= 2")
    labels = []
    for i in range(n):
        for j in range(n):
            if i != j:
                for s in (1, -1):
                    labels.append({"kind": "gl", "params": {"type": "elem", "i": i, "j": j, "sign": s}})
    for i in range(n):
        for j in range(i + 1, n):
            labels.append({"kind": "gl", "params": {"type": "swap", "i": i, "j": j}})
    for i in range(n):
        for j in range(i + 1, n):
            for s in (1, -1):
                labels.append({"kind": "shift", "params": {"i": i, "j": j, "sign": s}})
    if n % 2 == 0:
        labels.append({"kind": "flip", "params": {}})
    if n >= 3:
        for i in range(n):
            for j in range(i + 1, n):
                labels.append({"kind": "flip", "params": {"coords": [i, j]}})
    return labels


def generators(n: int) -> list[tuple[dict, BlockGroupElement]]:
    out = []
    for lab in generator_labels(n):
        g = element_from_label(n, lab)
        assert validate(g), lab
        out.append((lab, g))
    return out


# --- orbit words and search ---------------------------------------------------

@dataclass(frozen=True)
class OrbitWord:
    """Generators applied left to right: act(word, theta) = g_k ... g_1 theta."""

    n: int
    word: tuple

    def elements(self) -> list[BlockGroupElement]:
        return [element_from_label(self.n, lab) for lab in self.word]

    def composed(self) -> BlockGroupElement:
        g = BlockGroupElement.identity(self.n)
        for h in self.elements():
            g = h @ g
        return g

    def apply(self, theta: SkewMatrix) -> SkewMatrix:
        for h in self.elements():
            theta = act(h, theta)
        return theta

    def to_json(self) -> str:
        return json.dumps([_plain(lab) for lab in self.word], sort_keys=True)

    @classmethod
    def from_json(cls, n: int, text: str) -> "OrbitWord":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("orbit word JSON must be a list of {kind, params}")
        for lab in data:
            if not isinstance(lab, dict) or "kind" not in lab:
                raise ValueError(f"bad orbit word entry {lab!r}")
            element_from_label(n, lab)
        return cls(n, tuple(data))

    def __len__(self) -> int:
        return len(self.word)


def _plain(lab: dict) -> dict:
    return {"kind": lab["kind"], "params": dict(lab.get("params", {}))}


def _key(theta: SkewMatrix) -> tuple:
    return theta.upper()


def _max_den(theta: SkewMatrix) -> int:
    return max((v.denominator for v in theta.upper()), default=1)


def orbit_search(theta: SkewMatrix, target: SkewMatrix, max_depth: int = 4,
                 max_denominator: int = 64) -> OrbitWord | None:
    """Bidirectional BFS over generator words; None means not found (not inequivalent).

    States are keyed by the exact upper triangle; states whose entries have a
    denominator above ``max_denominator`` are pruned, as are branches where the
    action is undefined.  Ties at the minimal length go to the lexicographically
    smallest generator-index sequence.
    """
    if not (theta.exact and target.exact):
        raise TypeError("orbit search needs exact rational matrices")
    if theta.n != target.n:
        raise DimensionError("theta and target have different n")
    n = theta.n
    if theta == target:
        return OrbitWord(n, ())
    gens = generators(n)
    labels = [lab for lab, _ in gens]
    inv_index = []
    for lab in labels:
        inv = inverse_label(lab)
        inv_index.append(labels.index(inv))

    # word paths stored as tuples of generator indices
    fwd = {_key(theta): ((), theta)}
    bwd = {_key(target): ((), target)}
    f_front = [_key(theta)]
    b_front = [_key(target)]
    df = db = 0
    best = None
    while df + db < max_depth and f_front and b_front:
        expand_fwd = len(f_front) <= len(b_front)
        seen, front = (fwd, f_front) if expand_fwd else (bwd, b_front)
        other = bwd if expand_fwd else fwd
        new_front = []
        for key in front:
            path, state = seen[key]
            for gi, (_, g) in enumerate(gens):
                if expand_fwd:
                    step = g
                else:
                    step = gens[inv_index[gi]][1]
                try:
                    nxt = act(step, state)
                except ActionUndefined:
                    continue
                if _max_den(nxt) > max_denominator:
                    continue
                k = _key(nxt)
                if k in seen:
                    continue
                seen[k] = (path + (gi,), nxt)
                new_front.append(k)
        new_front.sort(key=lambda k: seen[k][0])
        if expand_fwd:
            f_front, df = new_front, df + 1
        else:
            b_front, db = new_front, db + 1
        for k in new_front:
            if k in other:
                fp = fwd[k][0]
                bp = bwd[k][0]
                # backward path b1..bm maps target -> state via inverses; undo in reverse
                cand = fp + tuple(reversed(bp))
                if best is None or (len(cand), cand) < (len(best), best):
                    best = cand
        if best is not None:
            break
    if best is None:
        return None
    word = OrbitWord(n, tuple(labels[i] for i in best))
    if word.apply(theta) != target:
        raise AssertionError("orbit word failed verification")
    return word
