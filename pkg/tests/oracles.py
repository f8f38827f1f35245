"""Reference computations that share no code with the package."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def cf_value(coeffs, tail_ones=True, terms=80) -> Fraction:
    """[0; coeffs..., 1, 1, ...] cut after ``terms`` quotients, exactly."""
    seq = list(coeffs)
    if tail_ones:
        seq += [1] * (terms - len(seq))
    x = Fraction(0)
    for a in reversed(seq[:terms]):
        x = 1 / (a + x)
    return x


def norm_frac(x: Fraction) -> Fraction:
    """Distance from x to the nearest integer."""
    f = x - math.floor(x)
    return min(f, 1 - f)


def closest_return_denominators(theta: Fraction, qmax: int) -> list[int]:
    """q at which ||q theta|| reaches a new record low, q <= qmax."""
    best, out = Fraction(2), []
    for q in range(1, qmax + 1):
        d = norm_frac(q * theta)
        if d < best:
            best = d
            out.append(q)
    return out


def exact_tiling_lengths(theta: Fraction, c: Fraction, count: int) -> list[Fraction]:
    pts = sorted((c - j * theta) % 1 for j in range(count))
    return [(pts[(i + 1) % count] - pts[i]) % 1 or Fraction(1) for i in range(count)]


def two_disk_width(d: float, r1: float = 1.0, r2: float = 1.0) -> float:
    """Width of the curves joining two disjoint round disks: the complement is
    an annulus of modulus arccosh((d^2 - r1^2 - r2^2) / (2 r1 r2)) / 2 pi."""
    return 2 * math.pi / math.acosh((d * d - r1 * r1 - r2 * r2) / (2 * r1 * r2))


def eccentric_modulus(R: float, r: float, d: float) -> float:
    """Modulus of {|z| < R} minus the closed disk of radius r about d."""
    return math.acosh((R * R + r * r - d * d) / (2 * R * r)) / (2 * math.pi)


def charpoly_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    return float(max(abs(np.roots(np.poly(A)))))


def simplex_min_residual(M, D, steps: int = 200) -> float:
    """min over the grid simplex {v >= 0, sum v = 1, v in Z^n / steps} of |Mv - Dv|_inf."""
    M = np.asarray(M, dtype=float)
    D = np.asarray(D, dtype=float)
    n = len(M)
    K = M - D
    best = math.inf
    for head in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(head) > steps:
            continue
        v = np.array(list(head) + [steps - sum(head)]) / steps
        best = min(best, float(np.max(np.abs(K @ v))))
    return best


def chord_orders_compatible(a: list[float], b: list[float]) -> bool:
    """Whether the cyclic order of a equals the reversed cyclic order of b."""
    n = len(a)
    ia = sorted(range(n), key=lambda i: a[i])
    ib = sorted(range(n), key=lambda i: -b[i])
    k = ib.index(ia[0])
    return ia == ib[k:] + ib[:k]
