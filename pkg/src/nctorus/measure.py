"""The sets Z_{s,m,t} of skew matrices with an unusually good rational
approximation along the frequency vector m, their measure bound, and
Monte-Carlo checks against exact slab volumes.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .lattice import SkewMatrix, l1_ball

MIN_SAMPLES = 1000
DEFAULT_CAP = 10
_CHUNK = 1 << 16


def pairs_to_n(length: int) -> int:
    n = (1 + math.isqrt(1 + 8 * length)) // 2
    if n * (n - 1) // 2 != length or n < 2:
        raise ValueError(f"{length} is not n(n-1)/2 for any n >= 2")
    return n


@dataclass(frozen=True)
class FrequencyVector:
    """m indexed by pairs j < k in row order (m_12, m_13, ..., m_{n-1,n}), plus the shift t."""
    m: tuple
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        object.__setattr__(self, "t", int(self.t))
        pairs_to_n(len(self.m))

    @property
    def n(self) -> int:
        return pairs_to_n(len(self.m))

    @property
    def l1(self) -> int:
        return sum(abs(v) for v in self.m)

    def label(self) -> str:
        return ":".join(str(v) for v in self.m)


def f_poly(freq: FrequencyVector) -> int:
    """prod (m_jk^2 + 1)^2."""
    return math.prod((v * v + 1) ** 2 for v in freq.m)


def _check_box(theta: SkewMatrix) -> None:
    for v in theta.upper():
        if not 0 <= v < 1:
            raise ValueError(f"theta entry {v} outside [0, 1)")


def zst_membership(theta: SkewMatrix, s: int, freq: FrequencyVector) -> bool:
    """|sum theta_jk m_jk - t| * s * F(m) <= 1, exact when theta is rational."""
    if theta.n != freq.n:
        raise ValueError("theta and m have different n")
    _check_box(theta)
    lin = sum((th * mv for th, mv in zip(theta.upper(), freq.m)), Fraction(0) if theta.exact else 0.0)
    return abs(lin - freq.t) * s * f_poly(freq) <= 1


def zst_bound(s: int, freq: FrequencyVector) -> Fraction:
    """2 / (s F(m) |m_12|)."""
    if freq.m[0] == 0:
        raise ValueError("the bound needs m_12 != 0")
    if s < 1:
        raise ValueError("s must be a positive integer")
    return Fraction(2, s * f_poly(freq) * abs(freq.m[0]))


def _linear_cdf(weights: Sequence[int], c: Fraction) -> Fraction:
    """Volume of {x in [0,1]^k : sum w_i x_i <= c} for positive integer weights."""
    k = len(weights)
    if k == 0:
        return Fraction(1 if c >= 0 else 0)
    total = Fraction(0)
    for size in range(k + 1):
        for sub in combinations(weights, size):
            u = c - sum(sub)
            if u > 0:
                total += (-1) ** size * u ** k
    return total / (math.factorial(k) * math.prod(weights))


def slab_volume(freq: FrequencyVector, half_width: Fraction) -> Fraction:
    """Exact volume of {theta in [0,1)^P : |m . theta - t| <= half_width}."""
    half_width = Fraction(half_width)
    weights = [abs(v) for v in freq.m if v]
    if not weights:
        return Fraction(1 if abs(freq.t) <= half_width else 0)
    # reflect negative weights so every weight is positive
    offset = sum(v for v in freq.m if v < 0)
    lo, hi = freq.t - half_width - offset, freq.t + half_width - offset
    return _linear_cdf(weights, hi) - _linear_cdf(weights, lo)


def exact_measure(s: int, freq: FrequencyVector) -> Fraction:
    """mu(Z_{s,m,t}) computed exactly."""
    return slab_volume(freq, Fraction(1, s * f_poly(freq)))


def exact_measure_n2(s: int, freq: FrequencyVector) -> Fraction:
    """n = 2: the interval [t - w, t + w] / m_12 intersected with [0, 1)."""
    if freq.n != 2:
        raise ValueError("interval oracle is for n = 2")
    m = freq.m[0]
    w = Fraction(1, s * f_poly(freq))
    if m == 0:
        return Fraction(1 if abs(freq.t) <= w else 0)
    a, b = sorted(((freq.t - w) / m, (freq.t + w) / m))
    return max(Fraction(0), min(b, Fraction(1)) - max(a, Fraction(0)))


@dataclass(frozen=True)
class MCResult:
    s: int
    freq: FrequencyVector
    samples: int
    hits: int
    bound: Fraction

    @property
    def empirical(self) -> float:
        return self.hits / self.samples

    @property
    def std_error(self) -> float:
        p = self.empirical
        return math.sqrt(p * (1 - p) / self.samples)

    @property
    def passed(self) -> bool:
        return self.empirical <= float(self.bound) + 3 * self.std_error

    def __iter__(self):
        return iter((self.empirical, self.std_error, self.bound, self.passed))

    def csv_row(self) -> str:
        return (f"{self.s},{self.freq.label()},{self.freq.t},{self.empirical:.12g},"
                f"{self.std_error:.12g},{self.bound},{str(self.passed).lower()}")


CSV_HEADER = "s,m,t,empirical,stderr,bound,pass"


def worker_generators(seed: int, workers: int) -> list[np.random.Generator]:
    """One counter-based Philox stream per worker, spawned from the seed."""
    children = np.random.SeedSequence(seed).spawn(workers)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _split(samples: int, workers: int) -> list[int]:
    base, extra = divmod(samples, workers)
    return [base + (i < extra) for i in range(workers)]


def _count_hits(rng: np.random.Generator, count: int, mvec: np.ndarray, t: int, scale: float) -> int:
    hits = 0
    done = 0
    while done < count:
        k = min(_CHUNK, count - done)
        theta = rng.random((k, mvec.size))
        hits += int(np.count_nonzero(np.abs(theta @ mvec - t) * scale <= 1))
        done += k
    return hits


def mc_estimate(s: int, freq: FrequencyVector, samples: int, seed: int, workers: int = 1) -> MCResult:
    """Uniform samples of theta in [0,1)^P; fraction in Z_{s,m,t} against the bound.

    The result depends only on (seed, workers), not on thread scheduling.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    if workers < 1:
        raise ValueError("workers must be positive")
    bound = zst_bound(s, freq)
    mvec = np.array(freq.m, dtype=np.float64)
    scale = float(s * f_poly(freq))
    gens = worker_generators(seed, workers)
    sizes = _split(samples, workers)
    if workers == 1:
        counts = [_count_hits(gens[0], sizes[0], mvec, freq.t, scale)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda gi: _count_hits(gi[0], gi[1], mvec, freq.t, scale),
                                   zip(gens, sizes)))
    return MCResult(s, freq, samples, sum(counts), bound)


def capped_frequencies(n: int, cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    """Nonzero m with |m|_1 <= cap."""
    p = n * (n - 1) // 2
    return [m for m in l1_ball(p, cap) if any(m)]


def ws_capped_fraction(s: int, n: int, samples: int, seed: int, cap: int = DEFAULT_CAP) -> float:
    """Fraction of uniform theta lying in W_s with the union truncated to |m|_1 <= cap.

    This approximates the infinite union from below; it is labeled as such in reports.
    """
    ms = np.array(capped_frequencies(n, cap), dtype=np.float64)
    scale = s * np.prod((ms ** 2 + 1) ** 2, axis=1)
    rng = worker_generators(seed, 1)[0]
    hits = 0
    done = 0
    chunk = max(1, _CHUNK // max(1, len(ms)))
    while done < samples:
        k = min(chunk, samples - done)
        theta = rng.random((k, ms.shape[1]))
        lin = theta @ ms.T
        dist = np.abs(lin - np.round(lin))
        hits += int(np.count_nonzero(np.any(dist * scale <= 1, axis=1)))
        done += k
    return hits / samples
