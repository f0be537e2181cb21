"""Finite sums of U^p V^q W^r in the group algebra of the discrete Heisenberg
group, with W = V U V^{-1} U^{-1} central, and the decomposition of a
derivation into central multiples of d_U, d_V plus an inner part.

Coefficients are exact Gaussian rationals (elements of Q(i)).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .cyclotomic import Cyclo, field
from .lattice import ParseError, format_scalar

QI = field(4)
Key = tuple  # (p, q, r)


def _coerce(v) -> Cyclo:
    if isinstance(v, str):
        v = Fraction(v)
    return QI.coerce(v)


class H3Element:
    """sum a_{p,q,r} U^p V^q W^r in normal order U, V, W; no zero coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[Key, object] | None = None):
        out: dict[Key, Cyclo] = {}
        for key, v in (coeffs or {}).items():
            p, q, r = (int(x) for x in key)
            c = _coerce(v)
            if c:
                out[(p, q, r)] = out.get((p, q, r), QI.zero) + c
        self.coeffs = {k: v for k, v in out.items() if v}

    @classmethod
    def _raw(cls, coeffs: dict) -> "H3Element":
        obj = cls.__new__(cls)
        obj.coeffs = {k: v for k, v in coeffs.items() if v}
        return obj

    @classmethod
    def monomial(cls, p: int, q: int, r: int, coeff=1) -> "H3Element":
        return cls({(p, q, r): coeff})

    @classmethod
    def zero(cls) -> "H3Element":
        return cls._raw({})

    @classmethod
    def one(cls) -> "H3Element":
        return cls.monomial(0, 0, 0)

    @classmethod
    def U(cls) -> "H3Element":
        return cls.monomial(1, 0, 0)

    @classmethod
    def V(cls) -> "H3Element":
        return cls.monomial(0, 1, 0)

    @classmethod
    def W(cls) -> "H3Element":
        return cls.monomial(0, 0, 1)

    @classmethod
    def central(cls, poly: Mapping[int, object]) -> "H3Element":
        """sum_r c_r W^r."""
        return cls({(0, 0, r): c for r, c in poly.items()})

    def support(self) -> list[Key]:
        return sorted(self.coeffs)

    def coefficient(self, p: int, q: int, r: int) -> Cyclo:
        return self.coeffs.get((p, q, r), QI.zero)

    def __add__(self, other: "H3Element") -> "H3Element":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, QI.zero) + v
        return H3Element._raw(out)

    def __neg__(self) -> "H3Element":
        return H3Element._raw({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "H3Element") -> "H3Element":
        return self + (-other)

    def scale(self, c) -> "H3Element":
        c = _coerce(c)
        return H3Element._raw({k: v * c for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, H3Element):
            return multiply_h3(self, other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, H3Element):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __repr__(self) -> str:
        return f"H3Element({len(self.coeffs)} terms)"

    def mass(self) -> float:
        return float(sum(abs(v) for v in self.coeffs.values()))

    def to_text(self) -> str:
        lines = []
        for (p, q, r) in self.support():
            parts = self.coeffs[(p, q, r)].gaussian_parts()
            re, im = parts
            lines.append(f"{p} {q} {r} {format_scalar(re)} {format_scalar(im)}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "H3Element":
        coeffs: dict[Key, Cyclo] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if len(tok) != 5:
                raise ParseError(lineno, f"expected 'p q r re im', got {len(tok)} fields")
            try:
                p, q, r = (int(x) for x in tok[:3])
                c = QI.gaussian(Fraction(tok[3]), Fraction(tok[4]))
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
            coeffs[(p, q, r)] = coeffs.get((p, q, r), QI.zero) + c
        return cls._raw(coeffs)


def multiply_h3(x: H3Element, y: H3Element) -> H3Element:
    """(U^p V^q W^r)(U^p' V^q' W^r') = U^{p+p'} V^{q+q'} W^{r+r'+q p'}."""
    acc: dict[Key, Cyclo] = {}
    for (p, q, r), a in x.coeffs.items():
        for (p2, q2, r2), b in y.coeffs.items():
            k = (p + p2, q + q2, r + r2 + q * p2)
            acc[k] = acc.get(k, QI.zero) + a * b
    return H3Element._raw(acc)


def commutator_h3(x: H3Element, y: H3Element) -> H3Element:
    return multiply_h3(x, y) - multiply_h3(y, x)


def monomial_inverse(p: int, q: int, r: int) -> H3Element:
    return H3Element.monomial(-p, -q, -r + p * q)


def partial_u(x: H3Element) -> H3Element:
    return H3Element._raw({k: v * k[0] for k, v in x.coeffs.items()})


def partial_v(x: H3Element) -> H3Element:
    return H3Element._raw({k: v * k[1] for k, v in x.coeffs.items()})


def center_test_h3(x: H3Element) -> bool:
    """Support inside {(0,0,r)}; cross-checked against [x,U] = [x,V] = 0."""
    by_support = all(p == 0 and q == 0 for p, q, _ in x.coeffs)
    by_commutator = not commutator_h3(x, H3Element.U()) and not commutator_h3(x, H3Element.V())
    if by_support != by_commutator:
        raise AssertionError("center test: support rule and commutator rule disagree")
    return by_support


# Laurent polynomials in W: dict exponent -> Cyclo

def _laurent_divide(f: dict[int, Cyclo], d: dict[int, Cyclo]) -> tuple[dict[int, Cyclo], bool]:
    """Quotient f / d of Laurent polynomials and whether the division is exact."""
    if not f:
        return {}, True
    fl, dl = min(f), min(d)
    F = {k - fl: v for k, v in f.items()}
    D = {k - dl: v for k, v in d.items()}
    dd = max(D)
    lead_inv = D[dd].inverse()
    quot: dict[int, Cyclo] = {}
    rem = dict(F)
    while rem and max(rem) >= dd:
        top = max(rem)
        c = rem[top] * lead_inv
        quot[top - dd] = c
        for k, v in D.items():
            e = k + top - dd
            nv = rem.get(e, QI.zero) - c * v
            if nv:
                rem[e] = nv
            else:
                rem.pop(e, None)
    shift = fl - dl
    return {k + shift: v for k, v in quot.items()}, not rem


def _w_power_minus_one(q: int) -> dict[int, Cyclo]:
    return {q: QI.one, 0: -QI.one}


def _one_minus_w_power(p: int) -> dict[int, Cyclo]:
    return {0: QI.one, p: -QI.one}


def _group_by_uv(x: H3Element) -> dict[tuple[int, int], dict[int, Cyclo]]:
    out: dict[tuple[int, int], dict[int, Cyclo]] = {}
    for (p, q, r), v in x.coeffs.items():
        out.setdefault((p, q), {})[r] = v
    return out


@dataclass
class H3Split:
    z_u: H3Element
    z_v: H3Element
    inner_witness: H3Element
    residual: float
    in_window: bool = True

    def __iter__(self):
        return iter((self.z_u, self.z_v, self.inner_witness, self.residual))


def _in_window(x: H3Element, window: int) -> bool:
    return all(max(abs(p), abs(q), abs(r)) <= window for p, q, r in x.coeffs)


def derivation_from(z_u: H3Element, z_v: H3Element, b: H3Element) -> tuple[H3Element, H3Element]:
    """(delta(U), delta(V)) for delta = z_U d_U + z_V d_V + [b, .]."""
    U, V = H3Element.U(), H3Element.V()
    du = multiply_h3(z_u, U) + commutator_h3(b, U)
    dv = multiply_h3(z_v, V) + commutator_h3(b, V)
    return du, dv


def h3_derivation_split(delta_u: H3Element, delta_v: H3Element, window: int) -> H3Split:
    """delta = z_U d_U + z_V d_V + [b, .] from the values on U and V.

    z_U is the central part of delta(U) U^{-1}, z_V that of delta(V) V^{-1}.
    The witness b has no central component.  The residual is the coefficient
    mass of delta(U), delta(V) not reproduced by the decomposition.
    """
    inside = _in_window(delta_u, window) and _in_window(delta_v, window)
    U, V = H3Element.U(), H3Element.V()
    cu = multiply_h3(delta_u, monomial_inverse(1, 0, 0))
    cv = multiply_h3(delta_v, monomial_inverse(0, 1, 0))
    z_u = H3Element._raw({k: v for k, v in cu.coeffs.items() if k[0] == 0 and k[1] == 0})
    z_v = H3Element._raw({k: v for k, v in cv.coeffs.items() if k[0] == 0 and k[1] == 0})
    rest_u = _group_by_uv(delta_u - multiply_h3(z_u, U))
    rest_v = _group_by_uv(delta_v - multiply_h3(z_v, V))

    # [U^p V^q W^r, U] = (W^q - 1) U^{p+1} V^q W^r
    # [U^p V^q W^r, V] = (1 - W^p) U^p V^{q+1} W^r
    b: dict[Key, Cyclo] = {}
    for (P, Q), poly in rest_u.items():
        if Q == 0:
            continue
        quot, _ = _laurent_divide(poly, _w_power_minus_one(Q))
        for r, c in quot.items():
            b[(P - 1, Q, r)] = c
    for (P, Q), poly in rest_v.items():
        q = Q - 1
        if q != 0 or P == 0:
            continue
        quot, _ = _laurent_divide(poly, _one_minus_w_power(P))
        for r, c in quot.items():
            b[(P, 0, r)] = c
    witness = H3Element._raw(b)
    du, dv = derivation_from(z_u, z_v, witness)
    residual = (delta_u - du).mass() + (delta_v - dv).mass()
    return H3Split(z_u, z_v, witness, residual, inside)


def random_h3(rng: random.Random, terms: int, box: int = 2, central: bool = False) -> H3Element:
    coeffs: dict[Key, object] = {}
    for _ in range(terms):
        key = (0, 0, rng.randint(-box, box)) if central else tuple(rng.randint(-box, box) for _ in range(3))
        coeffs[key] = complex(rng.randint(-3, 3), rng.randint(-3, 3))
    return H3Element(coeffs)


def iter_basis(window: int) -> Iterable[Key]:
    rng = range(-window, window + 1)
    for p in rng:
        for q in rng:
            for r in rng:
                yield (p, q, r)
