"""Continued fractions of rotation numbers and combinatorial intervals on the
rigid-rotation model of a Siegel disk boundary.

Angles live in R/Z and are represented by floats in [0, 1).  Orbit
computations are carried out in 256-bit fixed point (plain Python ints) so
that orbit points of depth 10^5 and beyond are placed without accumulated
rounding; results are rounded to floats only at the end.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

from .errors import DegenerateOrbit, DomainError, ParseError

BITS = 256
ONE = 1 << BITS
_GUARD = 64

DEGENERATE_GAP = 1e-13


class Tail(enum.Enum):
    GOLDEN = "golden"
    FINITE = "finite"


def _to_float(fixed: int) -> float:
    return fixed / ONE


def _to_fixed(x: float) -> int:
    return math.floor(Fraction(x) * ONE) % ONE


@dataclass(frozen=True)
class RotationNumber:
    """theta = [0; a_1, ..., a_T, tail].

    With ``Tail.GOLDEN`` every partial quotient after a_T equals 1, so theta
    is eventually golden mean (and irrational, of bounded type).  ``Tail.FINITE``
    is the rational [0; a_1, ..., a_T] and exists only for testing.
    """

    coefficients: tuple[int, ...] = ()
    tail: Tail = Tail.GOLDEN

    def __post_init__(self):
        coeffs = tuple(int(a) for a in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if any(a < 1 for a in coeffs):
            raise DomainError(f"partial quotients must be >= 1, got {coeffs}")
        if self.tail is Tail.FINITE:
            if not coeffs:
                raise DomainError("finite expansion [0;] is not in (0, 1)")
            if coeffs == (1,):
                raise DomainError("finite expansion [0;1] equals 1, not in (0, 1)")

    @classmethod
    def golden(cls) -> "RotationNumber":
        return cls((), Tail.GOLDEN)

    @classmethod
    def parse(cls, text: str) -> "RotationNumber":
        return parse_rotation(text)

    def __str__(self) -> str:
        return format_rotation(self)

    @property
    def is_irrational(self) -> bool:
        return self.tail is Tail.GOLDEN

    @property
    def is_bounded_type(self) -> bool:
        # an eventually golden expansion has bounded partial quotients
        return self.tail is Tail.GOLDEN

    @property
    def golden_from(self) -> int | None:
        """Smallest index n such that a_k = 1 for all k >= n (None if rational)."""
        if self.tail is not Tail.GOLDEN:
            return None
        n = len(self.coefficients) + 1
        while n > 1 and self.coefficients[n - 2] == 1:
            n -= 1
        return n

    def partial_quotient(self, n: int) -> int:
        """a_n for n >= 1."""
        if n < 1:
            raise IndexError(n)
        if n <= len(self.coefficients):
            return self.coefficients[n - 1]
        if self.tail is Tail.GOLDEN:
            return 1
        raise IndexError(f"finite expansion has only {len(self.coefficients)} terms")

    def expansion(self, count: int) -> list[int]:
        if self.tail is Tail.FINITE:
            return list(self.coefficients[:count])
        return [self.partial_quotient(n) for n in range(1, count + 1)]

    @cached_property
    def fixed(self) -> int:
        """floor(theta * 2**BITS)."""
        p_prev, p = 1, 0
        q_prev, q = 0, 1
        for a in self.coefficients:
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
        if self.tail is Tail.FINITE:
            return (p << BITS) // q
        # complete quotient of the tail is phi = (1 + sqrt5)/2
        scale = BITS + _GUARD
        unit = 1 << scale
        root5 = math.isqrt(5 << (2 * scale))
        num = p * (unit + root5) + 2 * p_prev * unit
        den = q * (unit + root5) + 2 * q_prev * unit
        return (num << BITS) // den

    @cached_property
    def value(self) -> float:
        return _to_float(self.fixed)

    def __float__(self) -> float:
        return self.value


def truncated_value(theta: RotationNumber, terms: int = 60) -> Fraction:
    """Exact value of the continued fraction cut after ``terms`` quotients."""
    x = Fraction(0)
    for a in reversed(theta.expansion(terms)):
        x = 1 / (a + x)
    return x


_ROT_RE = re.compile(r"^\[\s*0\s*;\s*(.*?)\s*\]$")


def parse_rotation(text: str) -> RotationNumber:
    """Parse ``"[0;a1,a2,...,(1)*]"`` (golden tail) or ``"[0;a1,...,aT]"``."""
    m = _ROT_RE.match(text.strip())
    if not m:
        raise ParseError(f"not a continued fraction: {text!r}")
    body = m.group(1)
    parts = [s.strip() for s in body.split(",")] if body else []
    tail = Tail.FINITE
    if parts and parts[-1] == "(1)*":
        tail = Tail.GOLDEN
        parts = parts[:-1]
    try:
        coeffs = tuple(int(s) for s in parts)
    except ValueError:
        raise ParseError(f"bad partial quotient in {text!r}") from None
    if any(s.startswith(("+", "-")) or not s.isdigit() for s in parts):
        raise ParseError(f"bad partial quotient in {text!r}")
    try:
        return RotationNumber(coeffs, tail)
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def format_rotation(theta: RotationNumber) -> str:
    parts = [str(a) for a in theta.coefficients]
    if theta.tail is Tail.GOLDEN:
        parts.append("(1)*")
    return "[0;" + ",".join(parts) + "]"


# ---------------------------------------------------------------- convergents


@dataclass(frozen=True)
class Convergent:
    m: int
    p: int
    q: int
    theta_m: float
    length: float
    theta_m_fixed: int

    @property
    def length_fixed(self) -> int:
        return abs(self.theta_m_fixed)


@dataclass(frozen=True)
class ConvergentTable:
    entries: tuple[Convergent, ...]
    convention_a1: bool

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[Convergent]:
        return iter(self.entries)

    def __getitem__(self, m: int) -> Convergent:
        return self.entries[m]

    @property
    def q(self) -> list[int]:
        return [e.q for e in self.entries]

    @property
    def lengths(self) -> list[float]:
        return [e.length for e in self.entries]

    def length(self, m: int) -> float:
        """Level-m closest-return length, with the convention l_{-1} = 1."""
        if m == -1:
            return 1.0
        return self.entries[m].length


def _standard_convergents(coeffs: Sequence[int]) -> Iterator[tuple[int, int]]:
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    yield p, q
    for a in coeffs:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        yield p, q


def convergents(theta: RotationNumber, depth: int) -> ConvergentTable:
    """Closest-return table (m, p_m, q_m, theta_m, l_m) for m = 0..depth-1.

    p_m/q_m = [0; a_1..a_m] when a_1 > 1 and [0; a_1..a_{m+1}] when a_1 = 1,
    so that q_0 = 1 in both cases.  theta_m = q_m*theta - p_m is the signed
    displacement of the q_m-th iterate; l_m = |theta_m|.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if not theta.is_irrational:
        raise DomainError("convergent tables need an irrational rotation number")
    shift = theta.partial_quotient(1) == 1
    standard = list(_standard_convergents(theta.expansion(depth + 1)))
    if shift:
        standard = standard[1:]
    entries = []
    for m in range(depth):
        p, q = standard[m]
        disp = q * theta.fixed - p * ONE
        entries.append(Convergent(m, p, q, _to_float(disp), _to_float(abs(disp)), disp))
    return ConvergentTable(tuple(entries), shift)


# ---------------------------------------------------------------- intervals


def rotate(x: float, t: float) -> float:
    """x rotated by t on R/Z."""
    return (x + t) % 1.0


def comb_distance(x: float, y: float) -> float:
    d = abs(x - y) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class CombinatorialInterval:
    """Counterclockwise arc [left, left + length] of R/Z."""

    left: float
    length: float
    level: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "left", self.left % 1.0)
        if not 0.0 < self.length <= 1.0:
            raise DomainError(f"interval length must be in (0, 1], got {self.length}")

    @property
    def right(self) -> float:
        return (self.left + self.length) % 1.0

    @property
    def is_full_circle(self) -> bool:
        return self.length >= 1.0

    @property
    def center(self) -> float:
        return (self.left + self.length / 2) % 1.0

    def contains(self, x: float, tol: float = 0.0) -> bool:
        if self.is_full_circle:
            return True
        return ((x - self.left + tol) % 1.0) <= self.length + 2 * tol


def scale_interval(interval: CombinatorialInterval, lam: float) -> CombinatorialInterval:
    """lambda*I: points within (lambda - 1)|I|/2 of I.

    If lambda*|I| >= 1 the full circle is returned; check ``is_full_circle``.
    """
    if lam < 1:
        raise DomainError("scaling factor must be >= 1")
    new_len = lam * interval.length
    if new_len >= 1.0:
        return CombinatorialInterval(interval.left, 1.0, None)
    pad = (lam - 1) * interval.length / 2
    level = interval.level if lam == 1 else None
    return CombinatorialInterval(interval.left - pad, new_len, level)


def level_interval(theta: RotationNumber, x: float, m: int) -> CombinatorialInterval:
    """The level-m interval [x, f^{q_m}(x)] (oriented counterclockwise)."""
    row = convergents(theta, m + 1)[m]
    left = x if row.theta_m > 0 else x + row.theta_m
    return CombinatorialInterval(left, row.length, m)


def _check_level(interval: CombinatorialInterval, table: ConvergentTable) -> int:
    m = interval.level
    if m is None:
        raise DomainError("interval carries no level")
    if abs(interval.length - table[m].length) > 1e-12:
        raise DomainError(f"length {interval.length} is not l_{m} = {table[m].length}")
    return m


def spread_around(interval: CombinatorialInterval, theta: RotationNumber) -> list[CombinatorialInterval]:
    """Images f^i(I), 0 <= i < q_{m+1}, ordered counterclockwise from I."""
    if interval.level is None:
        raise DomainError("spreading around needs a level-m interval")
    m = interval.level
    table = convergents(theta, m + 2)
    _check_level(interval, table)
    count = table[m + 1].q
    x0 = _to_fixed(interval.left)
    lefts = sorted(((i * theta.fixed) % ONE, i) for i in range(count))
    return [
        CombinatorialInterval(_to_float((x0 + off) % ONE), table[m].length, m)
        for off, _ in lefts
    ]


def gaps(intervals: Sequence[CombinatorialInterval]) -> list[float]:
    """Uncovered length between each interval and the next (cyclically)."""
    out = []
    n = len(intervals)
    for i, cur in enumerate(intervals):
        nxt = intervals[(i + 1) % n]
        step = (nxt.left - cur.left) % 1.0
        if n == 1:
            step = 1.0
        out.append(step - cur.length)
    return out


@dataclass(frozen=True)
class DiffeoTiling:
    level: int
    critical_angle: float
    cells: tuple[CombinatorialInterval, ...]

    @property
    def lengths(self) -> list[float]:
        return [c.length for c in self.cells]


def critical_orbit_points(theta: RotationNumber, c: float, m: int) -> list[int]:
    """Fixed-point positions of CP_m = {c - j*theta : 0 <= j < q_{m+1}}, sorted."""
    table = convergents(theta, m + 2)
    count = table[m + 1].q
    c0 = _to_fixed(c)
    return sorted((c0 - j * theta.fixed) % ONE for j in range(count))


def diffeo_tiling(theta: RotationNumber, c: float, m: int) -> DiffeoTiling:
    """Partition of the circle cut at the q_{m+1} preimages of c."""
    if m < 0:
        raise DomainError("level must be >= 0")
    pts = critical_orbit_points(theta, c, m)
    n = len(pts)
    cells = []
    for i, a in enumerate(pts):
        b = pts[(i + 1) % n]
        span = (b - a) % ONE if n > 1 else ONE
        length = _to_float(span)
        if length < DEGENERATE_GAP:
            raise DegenerateOrbit(f"orbit points {i} and {i + 1} coincide")
        cells.append(CombinatorialInterval(_to_float(a), length, None))
    return DiffeoTiling(m, c % 1.0, tuple(cells))
