"""Exact arithmetic in the cyclotomic field Q(zeta_N).

Every value e(p/q) with q | N is the root of unity ``zeta_N ** (p*N/q)``, so
products of twisted monomials with rational phases stay inside Q(zeta_N) and
can be compared exactly.  Elements are stored in the power basis
``1, zeta, ..., zeta**(phi(N)-1)`` as a sparse map exponent -> Fraction.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from sympy import Poly, QQ, Symbol, cyclotomic_poly

_x = Symbol("x")


class CyclotomicField:
    """The field Q(zeta_N) with a precomputed reduction table."""

    def __init__(self, order: int):
        if order < 1:
            raise ValueError("cyclotomic order must be positive")
        self.order = order
        poly = Poly(cyclotomic_poly(order, _x), _x)
        self._modulus = poly
        self.degree = poly.degree()
        # low-order coefficients of Phi_N (monic); x^d = -sum c_j x^j
        coeffs = [int(c) for c in reversed(poly.all_coeffs())]
        tail = {j: -c for j, c in enumerate(coeffs[:-1]) if c}
        rows: list[dict[int, int]] = []
        current = {0: 1}
        for _ in range(order):
            rows.append(current)
            shifted: dict[int, int] = {}
            for j, c in current.items():
                if j + 1 < self.degree:
                    shifted[j + 1] = shifted.get(j + 1, 0) + c
                else:
                    for k, t in tail.items():
                        shifted[k] = shifted.get(k, 0) + c * t
            current = {j: c for j, c in shifted.items() if c}
        self._rows = rows
        self._zeta = cmath.exp(2j * math.pi / order)

    def __repr__(self) -> str:
        return f"CyclotomicField({self.order})"

    def reduce_power(self, k: int) -> dict[int, int]:
        return self._rows[k % self.order]

    def root(self, k: int) -> "Cyclo":
        """zeta_N ** k."""
        return Cyclo(self, {j: Fraction(c) for j, c in self.reduce_power(k).items()})

    def phase(self, t: Fraction) -> "Cyclo":
        """e(t) = exp(2 pi i t) for rational t whose denominator divides N."""
        t = Fraction(t)
        if self.order % t.denominator:
            raise ValueError(f"phase {t} does not live in Q(zeta_{self.order})")
        return self.root(t.numerator * (self.order // t.denominator))

    def scalar(self, value) -> "Cyclo":
        value = Fraction(value)
        return Cyclo(self, {0: value} if value else {})

    def gaussian(self, re, im=0) -> "Cyclo":
        """re + i*im with rational parts; needs 4 | N."""
        re, im = Fraction(re), Fraction(im)
        out = self.scalar(re)
        if im:
            if self.order % 4:
                raise ValueError(f"i is not in Q(zeta_{self.order})")
            out = out + self.root(self.order // 4) * im
        return out

    @property
    def zero(self) -> "Cyclo":
        return Cyclo(self, {})

    @property
    def one(self) -> "Cyclo":
        return Cyclo(self, {0: Fraction(1)})

    def coerce(self, value) -> "Cyclo":
        if isinstance(value, Cyclo):
            if value.field is not self:
                raise ValueError("cannot mix elements of different cyclotomic fields")
            return value
        if isinstance(value, (int, Rational)):
            return self.scalar(value)
        if isinstance(value, complex):
            re, im = _exact_float(value.real), _exact_float(value.imag)
            return self.gaussian(re, im)
        if isinstance(value, float):
            return self.scalar(_exact_float(value))
        raise TypeError(f"cannot coerce {type(value).__name__} into {self!r}")


def _exact_float(v: float) -> Fraction:
    # floats are accepted only if they are exactly small dyadic rationals
    f = Fraction(v)
    if f.denominator > 1 << 20:
        raise ValueError(f"float {v!r} is not an exact coefficient; pass a Fraction")
    return f


@lru_cache(maxsize=None)
def field(order: int) -> CyclotomicField:
    return CyclotomicField(order)


class Cyclo:
    """An element of Q(zeta_N); immutable."""

    __slots__ = ("field", "terms", "_hash")

    def __init__(self, fld: CyclotomicField, terms: dict[int, Fraction]):
        self.field = fld
        self.terms = terms
        self._hash = None

    def _wrap(self, other) -> "Cyclo | None":
        if isinstance(other, Cyclo):
            if other.field is not self.field:
                raise ValueError("cannot mix elements of different cyclotomic fields")
            return other
        if isinstance(other, (int, Rational)):
            return self.field.scalar(other)
        return None

    def __add__(self, other):
        other = self._wrap(other)
        if other is None:
            return NotImplemented
        out = dict(self.terms)
        for j, c in other.terms.items():
            v = out.get(j, 0) + c
            if v:
                out[j] = v
            else:
                out.pop(j, None)
        return Cyclo(self.field, out)

    __radd__ = __add__

    def __neg__(self):
        return Cyclo(self.field, {j: -c for j, c in self.terms.items()})

    def __sub__(self, other):
        other = self._wrap(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._wrap(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            other = Fraction(other)
            if not other:
                return self.field.zero
            return Cyclo(self.field, {j: c * other for j, c in self.terms.items()})
        other = self._wrap(other)
        if other is None:
            return NotImplemented
        fld = self.field
        deg = fld.degree
        acc: dict[int, Fraction] = {}
        for j1, c1 in self.terms.items():
            for j2, c2 in other.terms.items():
                c = c1 * c2
                k = j1 + j2
                if k < deg:
                    acc[k] = acc.get(k, 0) + c
                else:
                    for j, r in fld.reduce_power(k).items():
                        acc[j] = acc.get(j, 0) + c * r
        return Cyclo(fld, {j: c for j, c in acc.items() if c})

    __rmul__ = __mul__

    def times_root(self, k: int) -> "Cyclo":
        """Multiply by zeta_N ** k."""
        fld = self.field
        deg = fld.degree
        acc: dict[int, Fraction] = {}
        for j, c in self.terms.items():
            e = (j + k) % fld.order
            if e < deg:
                acc[e] = acc.get(e, 0) + c
            else:
                for i, r in fld.reduce_power(e).items():
                    acc[i] = acc.get(i, 0) + c * r
        return Cyclo(fld, {j: c for j, c in acc.items() if c})

    def conjugate(self) -> "Cyclo":
        fld = self.field
        out = fld.zero
        for j, c in self.terms.items():
            out = out + fld.root(-j) * c
        return out

    def inverse(self) -> "Cyclo":
        if not self.terms:
            raise ZeroDivisionError("inverse of zero in a cyclotomic field")
        deg = max(self.terms)
        coeffs = [QQ(0)] * (deg + 1)
        for j, c in self.terms.items():
            coeffs[deg - j] = QQ(c.numerator, c.denominator)
        inv = Poly(coeffs, _x, domain=QQ).invert(self.field._modulus)
        out: dict[int, Fraction] = {}
        for j, c in enumerate(reversed(inv.all_coeffs())):
            c = Fraction(int(c.numerator), int(c.denominator))
            if c:
                out[j] = c
        return Cyclo(self.field, out)

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)):
            return self * (1 / Fraction(other))
        other = self._wrap(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._wrap(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Cyclo):
            return other.field.order == self.field.order and other.terms == self.terms
        if isinstance(other, (int, Rational)):
            other = Fraction(other)
            return self.terms == ({0: other} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.field.order, frozenset(self.terms.items())))
        return self._hash

    def __complex__(self) -> complex:
        z = self.field._zeta
        return complex(sum(float(c) * z**j for j, c in self.terms.items()))

    def __abs__(self) -> float:
        return abs(complex(self))

    def gaussian_parts(self) -> tuple[Fraction, Fraction] | None:
        """(re, im) if the element is a Gaussian rational, else None."""
        fld = self.field
        re = self.terms.get(0, Fraction(0))
        rest = {j: c for j, c in self.terms.items() if j}
        if not rest:
            return re, Fraction(0)
        if fld.order % 4 == 0:
            quarter = fld.root(fld.order // 4)
            if len(quarter.terms) == 1:
                (j, unit), = quarter.terms.items()
                if set(rest) == {j}:
                    return re, rest[j] / unit
        return None

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for j in sorted(self.terms):
            c = self.terms[j]
            parts.append(str(c) if j == 0 else f"{c}*z^{j}")
        return f"Cyclo[{self.field.order}](" + " + ".join(parts) + ")"
