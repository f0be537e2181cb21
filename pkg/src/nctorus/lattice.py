"""Lattice and phase arithmetic for a skew-symmetric parameter matrix.

In exact mode phases are rationals reduced into [0, 1) standing for
``e(t) = exp(2 pi i t)``; complex numbers only appear at output boundaries.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from sympy import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import hermite_normal_form, smith_normal_decomp

from . import _accel

SKEW_TOL = 1e-12


class DimensionError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


def _as_scalar(v, exact: bool):
    if exact:
        if isinstance(v, float):
            raise TypeError(f"float entry {v!r} in an exact skew matrix")
        return Fraction(v)
    return float(v)


class SkewMatrix:
    """An n x n skew-symmetric matrix over Q (exact) or float64."""

    __slots__ = ("n", "entries", "exact")

    def __init__(self, rows: Sequence[Sequence], exact: bool | None = None):
        rows = [list(r) for r in rows]
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise DimensionError("skew matrix must be square with n >= 1")
        if exact is None:
            exact = not any(isinstance(v, float) for r in rows for v in r)
        ent = tuple(tuple(_as_scalar(v, exact) for v in r) for r in rows)
        for j in range(n):
            for k in range(j, n):
                s = ent[j][k] + ent[k][j]
                if (s != 0) if exact else abs(s) > SKEW_TOL:
                    raise ValueError(f"matrix is not skew-symmetric at ({j}, {k})")
        self.n = n
        self.entries = ent
        self.exact = exact

    @classmethod
    def from_upper(cls, n: int, upper: Sequence, exact: bool | None = None) -> "SkewMatrix":
        """Build from the upper triangle listed row by row (theta_12, theta_13, ...)."""
        upper = list(upper)
        if len(upper) != n * (n - 1) // 2:
            raise DimensionError(f"need {n * (n - 1) // 2} upper entries for n={n}")
        zero = 0 if exact is not False and not any(isinstance(v, float) for v in upper) else 0.0
        rows = [[zero] * n for _ in range(n)]
        it = iter(upper)
        for j in range(n):
            for k in range(j + 1, n):
                v = next(it)
                rows[j][k] = v
                rows[k][j] = -v
        return cls(rows, exact)

    @classmethod
    def zeros(cls, n: int, exact: bool = True) -> "SkewMatrix":
        return cls.from_upper(n, [Fraction(0) if exact else 0.0] * (n * (n - 1) // 2), exact)

    def upper(self) -> tuple:
        n = self.n
        return tuple(self.entries[j][k] for j in range(n) for k in range(j + 1, n))

    def __getitem__(self, jk):
        j, k = jk
        return self.entries[j][k]

    def array(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.entries], dtype=np.float64)

    def to_float(self) -> "SkewMatrix":
        return self if not self.exact else SkewMatrix(self.array().tolist(), exact=False)

    def denominator_lcm(self) -> int:
        if not self.exact:
            raise ValueError("denominators are only defined in exact mode")
        return math.lcm(1, *(v.denominator for r in self.entries for v in r))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SkewMatrix):
            return NotImplemented
        return self.exact == other.exact and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.exact, self.entries))

    def __repr__(self) -> str:
        return f"SkewMatrix(n={self.n}, upper={[str(v) for v in self.upper()]}, exact={self.exact})"

    # text format: n, then upper-triangular rows
    def to_text(self) -> str:
        n = self.n
        lines = [str(n)]
        for j in range(n - 1):
            lines.append(" ".join(format_scalar(self.entries[j][k]) for k in range(j + 1, n)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SkewMatrix":
        lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
        lines = [(i, ln) for i, ln in lines if ln]
        if not lines:
            raise ParseError(1, "empty skew matrix file")
        lineno, head = lines[0]
        try:
            n = int(head)
        except ValueError:
            raise ParseError(lineno, f"expected dimension, got {head!r}") from None
        if n < 1:
            raise ParseError(lineno, "dimension must be >= 1")
        body = lines[1:]
        if len(body) != n - 1:
            raise ParseError(lines[-1][0], f"expected {n - 1} upper-triangular rows, got {len(body)}")
        upper = []
        exact = True
        for j, (lineno, ln) in enumerate(body):
            toks = ln.split()
            if len(toks) != n - 1 - j:
                raise ParseError(lineno, f"row {j + 1} needs {n - 1 - j} entries, got {len(toks)}")
            for tok in toks:
                try:
                    v = parse_scalar(tok)
                except ValueError:
                    raise ParseError(lineno, f"bad entry {tok!r}") from None
                exact = exact and isinstance(v, Fraction)
                upper.append(v)
        if not exact:
            upper = [float(v) for v in upper]
        return cls.from_upper(n, upper, exact)


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def parse_scalar(tok: str):
    """'p/q' or an integer -> Fraction; anything with '.' or 'e' -> float."""
    if any(c in tok for c in ".eE") and "/" not in tok:
        return float(tok)
    return Fraction(tok)


def format_scalar(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return str(v)
    return f"{v:.12g}"


def _check_dim(theta: SkewMatrix, *vecs: Sequence[int]) -> None:
    for v in vecs:
        if len(v) != theta.n:
            raise DimensionError(f"vector of length {len(v)} for n={theta.n}")


def pairing(theta: SkewMatrix, x: Sequence[int], y: Sequence[int]):
    """x . theta y, exact for rational theta."""
    _check_dim(theta, x, y)
    ent = theta.entries
    n = theta.n
    total = Fraction(0) if theta.exact else 0.0
    for j in range(n):
        if x[j]:
            row = ent[j]
            total += x[j] * sum(row[k] * y[k] for k in range(n) if y[k])
    return total


def mod1(t: Fraction) -> Fraction:
    return t - math.floor(t)


def e(t) -> complex:
    """exp(2 pi i t)."""
    if isinstance(t, Fraction):
        t = mod1(t)
        # exact values at quarter turns
        if t.denominator <= 4 and 4 % t.denominator == 0:
            return (1, 1j, -1, -1j)[int(t * 4)]
        t = float(t)
    return cmath.exp(2j * math.pi * t)


def cocycle(theta: SkewMatrix, x: Sequence[int], y: Sequence[int]):
    """sigma(x, y) = e((x . theta y)/2): phase in [0,1) if exact, else complex."""
    p = pairing(theta, x, y) / 2
    return mod1(p) if theta.exact else e(p)


def bicharacter(theta: SkewMatrix, x: Sequence[int], y: Sequence[int]):
    """rho(x ^ y) = e(x . theta y): phase in [0,1) if exact, else complex."""
    p = pairing(theta, x, y)
    return mod1(p) if theta.exact else e(p)


@dataclass(frozen=True)
class SubgroupBasis:
    basis: tuple[tuple[int, ...], ...]
    n: int

    @property
    def rank(self) -> int:
        return len(self.basis)

    def contains(self, g: Sequence[int]) -> bool:
        """Membership of g in the Z-span of the basis."""
        if self.rank == 0:
            return not any(g)
        # basis is in column-style HNF: upper triangular when stacked as columns,
        # so back-substitute from the last pivot row.
        b = [list(v) for v in self.basis]
        resid = list(g)
        for col in reversed(range(self.rank)):
            v = b[col]
            piv = max(i for i in range(self.n) if v[i] != 0)
            q, r = divmod(resid[piv], v[piv])
            if r:
                return False
            for i in range(self.n):
                resid[i] -= q * v[i]
        return not any(resid)


def degenerate_subgroup(theta: SkewMatrix) -> SubgroupBasis:
    """H = {h : theta h in Z^n}, as a Hermite-normal-form basis.

    Writes theta = M/d with M integral, takes the Smith form D = S M T, and
    reads off h = T y with y_i in (d / gcd(D_i, d)) Z.
    """
    if not theta.exact:
        raise TypeError("degenerate subgroup needs an exact rational matrix")
    n = theta.n
    d = theta.denominator_lcm()
    M = DomainMatrix([[ZZ(int(v * d)) for v in r] for r in theta.entries], (n, n), ZZ)
    D, _S, T = smith_normal_decomp(M)
    diag = [int(D[i, i].element) for i in range(n)]
    Tl = T.to_Matrix().tolist()
    cols = []
    for i in range(n):
        k = d // math.gcd(diag[i], d)
        cols.append([int(Tl[r][i]) * k for r in range(n)])
    Hm = DomainMatrix([[ZZ(cols[c][r]) for c in range(n)] for r in range(n)], (n, n), ZZ)
    Hn = hermite_normal_form(Hm).to_Matrix().tolist()
    basis = tuple(tuple(int(Hn[r][c]) for r in range(n)) for c in range(len(Hn[0])))
    return SubgroupBasis(basis=tuple(v for v in basis if any(v)), n=n)


def f_value(theta: SkewMatrix, g: Sequence[int]) -> float:
    """F(g) = max_j |rho(g ^ e_j) - 1|."""
    _check_dim(theta, g)
    n = theta.n
    best = 0.0
    for j in range(n):
        p = sum(g[i] * theta.entries[i][j] for i in range(n) if g[i])
        if theta.exact:
            p = mod1(Fraction(p))
            val = 0.0 if p == 0 else 2.0 * abs(math.sin(math.pi * float(p)))
        else:
            val = abs(e(p) - 1)
        best = max(best, val)
    return best


@dataclass
class GrowthReport:
    shells: list[int]
    min_f: list[float]
    slope: float
    intercept: float
    r_squared: float
    verdict: str
    threshold: float = 0.9
    notes: list[str] = field(default_factory=list)

    @property
    def inv_f(self) -> list[float]:
        return [1.0 / m for m in self.min_f]

    def to_csv(self) -> str:
        lines = ["shell,min_F,inv_F"]
        for r, m in zip(self.shells, self.min_f):
            lines.append(f"{r},{m:.12g},{1.0 / m:.12g}")
        return "\n".join(lines) + "\n"


def shell_radii(radius: int, shells: int) -> list[int]:
    """Log-spaced distinct integer radii from 2 to radius (inclusive)."""
    if not radius >= shells >= 2:
        raise ValueError("need radius >= shells >= 2")
    raw = np.geomspace(2, radius, shells)
    out = sorted({int(round(v)) for v in raw} | {radius})
    return out


def diophantine_scan(theta: SkewMatrix, radius: int, shells: int = 8,
                     threshold: float = 0.9, h_tol: float = 1e-12) -> GrowthReport:
    """Growth of 1/F over l1-balls |g| <= r: a semi-decision, not a proof.

    The slope of log(1/m(r)) against log r estimates the polynomial degree of
    F^{-1}; the verdict is "polynomial-consistent" when the fit has R^2 at least
    `threshold` over at least five shells (or the data are exactly flat).
    """
    radii = shell_radii(radius, shells)
    # rational theta: H is known exactly, so phases with F=0 are exactly H
    th = theta.array()
    per_norm = _accel.shell_minima(th, int(radius), float(h_tol))
    running = np.minimum.accumulate(per_norm)
    mins = [float(running[r]) for r in radii]
    if not np.isfinite(running[radius]):
        raise DegenerateInputError(f"every g with |g| <= {radius} lies in H (F vanishes)")
    notes = []
    usable = [(r, m) for r, m in zip(radii, mins) if np.isfinite(m)]
    if len(usable) < len(radii):
        notes.append(f"{len(radii) - len(usable)} small shells lie entirely in H and were skipped")
    xs = np.log([r for r, _ in usable])
    ys = -np.log([m for _, m in usable])
    if len(usable) >= 2:
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        ss_res = float(np.sum(resid ** 2))
        r2 = 1.0 if ss_tot <= 1e-24 else 1.0 - ss_res / ss_tot
        if abs(slope) < 1e-12:
            slope = 0.0
    else:
        slope, intercept, r2 = 0.0, float(ys[0]) if len(ys) else 0.0, 1.0
    verdict = "polynomial-consistent" if (len(usable) >= 5 and r2 >= threshold) else "inconclusive"
    return GrowthReport(shells=[r for r, _ in usable], min_f=[m for _, m in usable],
                        slope=float(slope), intercept=float(intercept), r_squared=float(r2),
                        verdict=verdict, threshold=threshold, notes=notes)


def lattice_box(n: int, bound: int) -> Iterable[tuple[int, ...]]:
    from itertools import product
    return product(range(-bound, bound + 1), repeat=n)


def l1_ball(n: int, radius: int) -> Iterable[tuple[int, ...]]:
    """All g in Z^n with sum |g_i| <= radius."""
    if n == 0:
        yield ()
        return
    for first in range(-radius, radius + 1):
        for rest in l1_ball(n - 1, radius - abs(first)):
            yield (first,) + rest
