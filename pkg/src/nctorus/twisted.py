"""Finitely supported elements of the twisted group algebra S(Z^n, sigma_theta).

An element is a finite map lattice point -> coefficient standing for
sum c_x U_x with U_x U_y = sigma(x, y) U_{x+y}.  For rational theta the
coefficients live exactly in Q(zeta_N) (N = lcm(2 * denominators, 4)); for
float theta they are Python complex numbers compared at ``FLOAT_TOL``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _accel
from .cyclotomic import Cyclo, CyclotomicField, field
from .lattice import (
    DimensionError,
    ParseError,
    SkewMatrix,
    degenerate_subgroup,
    format_scalar,
    mod1,
    pairing,
    parse_scalar,
)

FLOAT_TOL = 1e-12
_DROP_TOL = 1e-15
TWO_PI_I = 2j * math.pi


class ContextMismatch(ValueError):
    pass


class NotAttributable(ValueError):
    """A derivation coefficient sits on a point of H where Q cannot be recovered."""

    def __init__(self, point, message):
        super().__init__(message)
        self.point = point


@lru_cache(maxsize=256)
def coefficient_field(theta: SkewMatrix) -> CyclotomicField | None:
    """Q(zeta_N) holding every cocycle value and Gaussian rationals, or None for float theta."""
    if not theta.exact:
        return None
    return field(math.lcm(2 * theta.denominator_lcm(), 4))


def _root_index(fld: CyclotomicField, t: Fraction) -> int:
    t = mod1(t)
    return t.numerator * (fld.order // t.denominator) % fld.order


class AlgebraElement:
    """sum c_x U_x with finite support; canonical (no stored zeros)."""

    __slots__ = ("theta", "coeffs")

    def __init__(self, theta: SkewMatrix, coeffs: Mapping[Sequence[int], object] | None = None):
        self.theta = theta
        fld = coefficient_field(theta)
        out: dict[tuple[int, ...], object] = {}
        for key, c in (coeffs or {}).items():
            key = tuple(int(v) for v in key)
            if len(key) != theta.n:
                raise DimensionError(f"key {key} has length {len(key)}, expected {theta.n}")
            c = fld.coerce(c) if fld is not None else complex(c)
            prev = out.get(key)
            out[key] = c if prev is None else prev + c
        self.coeffs = {k: c for k, c in out.items() if not _is_zero(c)}

    @classmethod
    def _raw(cls, theta, coeffs):
        obj = cls.__new__(cls)
        obj.theta = theta
        obj.coeffs = coeffs
        return obj

    @classmethod
    def monomial(cls, theta: SkewMatrix, x: Sequence[int], c=1) -> "AlgebraElement":
        return cls(theta, {tuple(x): c})

    @classmethod
    def one(cls, theta: SkewMatrix) -> "AlgebraElement":
        return cls.monomial(theta, (0,) * theta.n)

    @classmethod
    def zero(cls, theta: SkewMatrix) -> "AlgebraElement":
        return cls(theta, {})

    @property
    def n(self) -> int:
        return self.theta.n

    @property
    def exact(self) -> bool:
        return self.theta.exact

    @property
    def field(self) -> CyclotomicField | None:
        return coefficient_field(self.theta)

    def support(self) -> list[tuple[int, ...]]:
        return sorted(self.coeffs)

    def coefficient(self, x: Sequence[int]):
        c = self.coeffs.get(tuple(x))
        if c is None:
            fld = self.field
            return fld.zero if fld is not None else 0j
        return c

    def _check(self, other: "AlgebraElement") -> None:
        if self.theta != other.theta:
            raise ContextMismatch("elements belong to different theta contexts")

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            v = out[k] + c if k in out else c
            if _is_zero(v):
                out.pop(k, None)
            else:
                out[k] = v
        return AlgebraElement._raw(self.theta, out)

    def __neg__(self):
        return AlgebraElement._raw(self.theta, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self + (-other)

    def scale(self, s) -> "AlgebraElement":
        fld = self.field
        s = fld.coerce(s) if fld is not None else complex(s)
        return AlgebraElement(self.theta, {k: c * s for k, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if self.theta != other.theta:
            return False
        if self.exact:
            return self.coeffs == other.coeffs
        return self.is_close(other, FLOAT_TOL)

    __hash__ = None

    def is_close(self, other: "AlgebraElement", tol: float = FLOAT_TOL) -> bool:
        return max_abs_difference(self, other) <= tol

    def to_complex_dict(self) -> dict[tuple[int, ...], complex]:
        return {k: complex(c) for k, c in self.coeffs.items()}

    def to_float(self) -> "AlgebraElement":
        return AlgebraElement(self.theta.to_float(), self.to_complex_dict())

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def seminorm(self, k: int) -> float:
        """Schwartz seminorm proxy p_k(a) = max_g |c_g| (1 + |g|)^k."""
        return max((abs(complex(c)) * (1 + sum(map(abs, g))) ** k for g, c in self.coeffs.items()),
                   default=0.0)

    def __repr__(self) -> str:
        terms = ", ".join(f"{k}: {c!r}" for k, c in sorted(self.coeffs.items()))
        return f"AlgebraElement({{{terms}}})"

    def to_text(self) -> str:
        lines = []
        for k in sorted(self.coeffs):
            c = self.coeffs[k]
            key = " ".join(str(v) for v in k)
            parts = c.gaussian_parts() if isinstance(c, Cyclo) else None
            if parts is not None:
                lines.append(f"{key} {format_scalar(parts[0])} {format_scalar(parts[1])}")
            else:
                z = complex(c)
                lines.append(f"{key} {z.real:.12g} {z.imag:.12g}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, theta: SkewMatrix, text: str) -> "AlgebraElement":
        coeffs: dict[tuple[int, ...], object] = {}
        fld = coefficient_field(theta)
        for lineno, raw in enumerate(text.splitlines(), 1):
            ln = raw.split("#", 1)[0].strip()
            if not ln:
                continue
            toks = ln.split()
            if len(toks) != theta.n + 2:
                raise ParseError(lineno, f"expected {theta.n} indices and 2 coefficient parts, got {len(toks)} fields")
            try:
                key = tuple(int(t) for t in toks[: theta.n])
                re, im = parse_scalar(toks[-2]), parse_scalar(toks[-1])
            except ValueError:
                raise ParseError(lineno, f"cannot parse {ln!r}") from None
            if fld is not None:
                if isinstance(re, float) or isinstance(im, float):
                    raise ParseError(lineno, "exact theta needs rational coefficients p/q")
                c = fld.gaussian(re, im)
            else:
                c = complex(float(re), float(im))
            coeffs[key] = coeffs[key] + c if key in coeffs else c
        return cls(theta, coeffs)


def _is_zero(c) -> bool:
    if isinstance(c, Cyclo):
        return not c
    return abs(c) <= _DROP_TOL


def max_abs_difference(a: AlgebraElement, b: AlgebraElement) -> float:
    a._check(b)
    keys = set(a.coeffs) | set(b.coeffs)
    worst = 0.0
    for k in keys:
        d = a.coefficient(k) - b.coefficient(k)
        worst = max(worst, abs(complex(d)))
    return worst


def cocycle_value(theta: SkewMatrix, x, y):
    """sigma(x, y) as an element of the coefficient ring."""
    fld = coefficient_field(theta)
    p = pairing(theta, x, y) / 2
    if fld is None:
        return cmath.exp(TWO_PI_I * p)
    return fld.root(_root_index(fld, p))


def bicharacter_value(theta: SkewMatrix, x, y):
    fld = coefficient_field(theta)
    p = pairing(theta, x, y)
    if fld is None:
        return cmath.exp(TWO_PI_I * p)
    return fld.root(_root_index(fld, p))


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Bilinear extension of U_x U_y = sigma(x, y) U_{x+y}."""
    a._check(b)
    theta = a.theta
    if not a.coeffs or not b.coeffs:
        return AlgebraElement.zero(theta)
    fld = coefficient_field(theta)
    if fld is None:
        return _multiply_float(a, b)
    n = theta.n
    ent = theta.entries
    acc: dict[tuple[int, ...], Cyclo] = {}
    bitems = list(b.coeffs.items())
    for x, ca in a.coeffs.items():
        xt = [sum(x[i] * ent[i][l] for i in range(n) if x[i]) for l in range(n)]
        for y, cb in bitems:
            p = sum((xt[l] * y[l] for l in range(n) if y[l]), Fraction(0)) / 2
            c = (ca * cb).times_root(_root_index(fld, p))
            key = tuple(x[l] + y[l] for l in range(n))
            acc[key] = acc[key] + c if key in acc else c
    return AlgebraElement._raw(theta, {k: c for k, c in acc.items() if c})


def _multiply_float(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    ka = np.array(list(a.coeffs), dtype=np.int64)
    kb = np.array(list(b.coeffs), dtype=np.int64)
    ca = np.array(list(a.coeffs.values()), dtype=np.complex128)
    cb = np.array(list(b.coeffs.values()), dtype=np.complex128)
    keys, vals = _accel.twisted_convolve(ka, ca, kb, cb, a.theta.array())
    acc: dict[tuple[int, ...], complex] = {}
    for key, v in zip(map(tuple, keys.tolist()), vals.tolist()):
        acc[key] = acc.get(key, 0j) + v
    return AlgebraElement._raw(a.theta, {k: c for k, c in acc.items() if abs(c) > _DROP_TOL})


def commutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return multiply(a, b) - multiply(b, a)


def involution(a: AlgebraElement) -> AlgebraElement:
    """(sum c_x U_x)* = sum conj(c_x) U_{-x}."""
    out = {}
    for k, c in a.coeffs.items():
        out[tuple(-v for v in k)] = c.conjugate()
    return AlgebraElement._raw(a.theta, out)


def trace(a: AlgebraElement):
    """Canonical trace: the coefficient at 0 (a ring element; complex() converts)."""
    return a.coefficient((0,) * a.n)


def derivation_apply_scaled(y: Sequence, a: AlgebraElement) -> AlgebraElement:
    """U_x -> <y, x> U_x; equals delta_X with y = 2 pi i X, exact for exact y."""
    if len(y) != a.n:
        raise DimensionError("derivation vector has the wrong length")
    fld = a.field
    y = [fld.coerce(v) for v in y] if fld is not None else [complex(v) for v in y]
    out = {}
    for k, c in a.coeffs.items():
        s = sum((y[j] * k[j] for j in range(a.n) if k[j]), fld.zero if fld is not None else 0j)
        v = c * s
        if not _is_zero(v):
            out[k] = v
    return AlgebraElement._raw(a.theta, out)


def derivation_apply(x: Sequence[complex], a: AlgebraElement) -> AlgebraElement:
    """delta_X(U_x) = 2 pi i <X, x> U_x, evaluated in float mode."""
    af = a.to_float() if a.exact else a
    return derivation_apply_scaled([TWO_PI_I * complex(v) for v in x], af)


class QSpec:
    """Finitely supported Q: Z^n -> C parameterizing delta(U_h) = sum_g Q(g)(rho(g^h)-1) U_h U_g."""

    __slots__ = ("theta", "q")

    def __init__(self, theta: SkewMatrix, q: Mapping[Sequence[int], object] | None = None,
                 check: bool = True):
        self.theta = theta
        self.q = AlgebraElement(theta, q or {}).coeffs
        if check and theta.exact and self.q:
            H = degenerate_subgroup(theta)
            bad = [g for g in self.q if H.contains(g)]
            if bad:
                raise ValueError(f"Q must vanish on H; nonzero at {sorted(bad)}")

    def element(self) -> AlgebraElement:
        """sum_g Q(g) U_g."""
        return AlgebraElement._raw(self.theta, dict(self.q))

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSpec):
            return NotImplemented
        return self.element() == other.element()

    def __repr__(self) -> str:
        return f"QSpec({self.q!r})"


def q_derivation_apply(Q: QSpec, a: AlgebraElement) -> AlgebraElement:
    """delta(U_h) = sum_g Q(g) (rho(g ^ h) - 1) U_h U_g, extended linearly."""
    if Q.theta != a.theta:
        raise ContextMismatch("QSpec and element belong to different theta contexts")
    theta = a.theta
    fld = a.field
    terms: dict[tuple[int, ...], object] = {}
    for h, ch in a.coeffs.items():
        for g, qg in Q.q.items():
            rho = bicharacter_value(theta, g, h)
            factor = rho - 1
            if _is_zero(factor):
                continue
            c = ch * qg * factor * cocycle_value(theta, h, g)
            key = tuple(u + v for u, v in zip(h, g))
            terms[key] = terms[key] + c if key in terms else c
    return AlgebraElement._raw(theta, {k: c for k, c in terms.items() if not _is_zero(c)})


def center_test(a: AlgebraElement) -> tuple[bool, list[tuple[int, ...]]]:
    """Central iff every support point lies in H; returns the offending points."""
    if not a.exact:
        raise TypeError("center test needs exact rational theta")
    H = degenerate_subgroup(a.theta)
    bad = [g for g in a.support() if not H.contains(g)]
    return not bad, bad


@dataclass(frozen=True)
class DerivationData:
    """Images delta(U_{e_j}) of the n generators."""

    values_on_generators: tuple[AlgebraElement, ...]

    @property
    def theta(self) -> SkewMatrix:
        return self.values_on_generators[0].theta

    def __eq__(self, other) -> bool:
        if not isinstance(other, DerivationData):
            return NotImplemented
        return len(self.values_on_generators) == len(other.values_on_generators) and all(
            a == b for a, b in zip(self.values_on_generators, other.values_on_generators))


def unit_vector(n: int, j: int) -> tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(n))


def build_derivation(theta: SkewMatrix, Q: QSpec | None = None, x: Sequence | None = None,
                     scaled_x: Sequence | None = None) -> DerivationData:
    """delta = delta_X + [sum Q(g) U_g, .] on the generators.

    Pass either X (float, multiplies by 2 pi i) or scaled_x = 2 pi i X (exact).
    """
    n = theta.n
    if x is not None and scaled_x is not None:
        raise ValueError("give X or scaled_x, not both")
    if x is not None:
        if theta.exact:
            raise ValueError("exact theta needs scaled_x = 2 pi i X (X itself is transcendental)")
        scaled_x = [TWO_PI_I * complex(v) for v in x]
    vals = []
    for j in range(n):
        u = AlgebraElement.monomial(theta, unit_vector(n, j))
        v = AlgebraElement.zero(theta)
        if scaled_x is not None:
            v = v + derivation_apply_scaled(scaled_x, u)
        if Q is not None:
            v = v + q_derivation_apply(Q, u)
        vals.append(v)
    return DerivationData(tuple(vals))


@dataclass
class SplitResult:
    x: tuple[complex, ...]
    q: QSpec
    residual: float
    scaled_x: tuple

    def __iter__(self):
        yield self.x
        yield self.q
        yield self.residual


def _unscale(z: complex) -> complex:
    # z / (2 pi i) without the rounding noise of complex division
    return complex(z.imag, -z.real) / (2 * math.pi)


@lru_cache(maxsize=4096)
def _inv_root_minus_one(fld: CyclotomicField, k: int) -> Cyclo:
    return (fld.root(k) - 1).inverse()


def derivation_split(delta: DerivationData, support_radius: int | None = None) -> SplitResult:
    """Recover (X, Q) with delta = delta_X + [sum Q(g) U_g, .] and Q(0) = 0.

    X_j is read off the U_{e_j} coefficient of delta(U_{e_j}).  For every other
    g, Q(g) comes from the generator j maximizing |rho(g ^ e_j) - 1|; the other
    n-1 equations only feed the residual.
    """
    theta = delta.theta
    n = theta.n
    fld = coefficient_field(theta)
    vals = delta.values_on_generators
    if len(vals) != n:
        raise DimensionError(f"need {n} generator images, got {len(vals)}")
    zero = fld.zero if fld is not None else 0j
    scaled = []
    # c[j][g]: coefficient of U_{e_j} U_g in delta(U_{e_j})
    c: list[dict[tuple[int, ...], object]] = []
    for j, v in enumerate(vals):
        if v.theta != theta:
            raise ContextMismatch("generator images use different theta contexts")
        ej = unit_vector(n, j)
        scaled.append(v.coefficient(ej))
        cj = {}
        for key, coef in v.coeffs.items():
            g = tuple(k - e for k, e in zip(key, ej))
            if not any(g):
                continue
            if support_radius is not None and sum(map(abs, g)) > support_radius:
                raise ValueError(f"support point {g} lies outside the window |g| <= {support_radius}")
            sig = pairing(theta, ej, g) / 2
            if fld is not None:
                cj[g] = coef.times_root(-_root_index(fld, sig))
            else:
                cj[g] = coef * cmath.exp(-TWO_PI_I * sig)
        c.append(cj)

    def rho_minus_one(g, j):
        p = pairing(theta, g, unit_vector(n, j))
        if fld is not None:
            k = _root_index(fld, p)
            return k, (0.0 if k == 0 else 2 * abs(math.sin(math.pi * k / fld.order)))
        val = cmath.exp(TWO_PI_I * p) - 1
        return val, abs(val)

    q: dict[tuple[int, ...], object] = {}
    points = sorted(set().union(*c))
    residual = 0.0
    for g in points:
        factors = [rho_minus_one(g, j) for j in range(n)]
        best = max(range(n), key=lambda j: (factors[j][1], -j))
        if factors[best][1] <= FLOAT_TOL:
            raise NotAttributable(g, f"F vanishes at {g} but the derivation has a coefficient there")
        target = c[best].get(g, zero)
        if fld is not None:
            qg = target * _inv_root_minus_one(fld, factors[best][0])
        else:
            qg = target / factors[best][0]
        if not _is_zero(qg):
            q[g] = qg
        for j in range(n):
            if j == best:
                continue
            if fld is not None:
                k = factors[j][0]
                pred = qg * (fld.root(k) - 1) if k else zero
            else:
                pred = qg * factors[j][0]
            diff = c[j].get(g, zero) - pred
            residual = max(residual, abs(complex(diff)))
    xs = tuple(_unscale(complex(s)) for s in scaled)
    return SplitResult(x=xs, q=QSpec(theta, q, check=False), residual=residual,
                       scaled_x=tuple(scaled))


def random_element(theta: SkewMatrix, rng, support: int = 4, box: int = 3,
                   gaussian: bool = True) -> AlgebraElement:
    """Random element with small Gaussian-integer (exact) or float coefficients."""
    n = theta.n
    coeffs = {}
    for _ in range(support):
        key = tuple(int(v) for v in rng.integers(-box, box + 1, size=n))
        if theta.exact:
            re, im = (int(v) for v in rng.integers(-3, 4, size=2))
            coeffs[key] = complex(re, im if gaussian else 0)
        else:
            coeffs[key] = complex(*rng.normal(size=2))
    return AlgebraElement(theta, coeffs)


def elements_equal(a: AlgebraElement, b: AlgebraElement, tol: float = FLOAT_TOL) -> bool:
    return a == b if a.exact else a.is_close(b, tol)


def iter_generators(theta: SkewMatrix) -> Iterable[AlgebraElement]:
    for j in range(theta.n):
        yield AlgebraElement.monomial(theta, unit_vector(theta.n, j))
