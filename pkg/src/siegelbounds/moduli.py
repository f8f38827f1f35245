"""Fixed-point multiplier coordinates on quadratic rational maps.

A point (rho1, rho2) determines rho3 through the holomorphic index relation
rho1*rho2*rho3 - (rho1 + rho2 + rho3) + 2 = 0.  The representative used
throughout is

    f(z) = z (z + rho1) / (rho2 z + 1),

whose fixed points 0, infinity and (1 - rho1)/(1 - rho2) carry the
multipliers rho1, rho2, rho3.  Infinity is the complex number
``complex(inf, 0)``; use :func:`is_infinity` to test for it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DegenerateParameter, DomainError, ParseError

DEGENERATE_TOL = 1e-12
INFINITY = complex(math.inf, 0.0)
CHART_RADIUS = 2.0


def is_infinity(z: complex) -> bool:
    return cmath.isinf(z)


@dataclass(frozen=True)
class QuadraticMultiplierPoint:
    rho1: complex
    rho2: complex
    rho3: complex
    degenerate: bool

    def index_residual(self) -> complex:
        r1, r2, r3 = self.rho1, self.rho2, self.rho3
        return r1 * r2 * r3 - (r1 + r2 + r3) + 2

    def __str__(self) -> str:
        return format_point(self.rho1, self.rho2)


def multiplier_point(rho1: complex, rho2: complex) -> QuadraticMultiplierPoint:
    rho1, rho2 = complex(rho1), complex(rho2)
    den = 1 - rho1 * rho2
    if abs(den) < DEGENERATE_TOL:
        return QuadraticMultiplierPoint(rho1, rho2, complex(math.nan, math.nan), True)
    return QuadraticMultiplierPoint(rho1, rho2, (2 - rho1 - rho2) / den, False)


def is_obstructed_direction(rho1: complex, rho2: complex, tol: float = 1e-10) -> bool:
    """Whether (rho1, rho2) on the unit torus lies on rho2 = conj(rho1)."""
    if abs(abs(rho1) - 1) > 1e-10 or abs(abs(rho2) - 1) > 1e-10:
        raise DomainError("multipliers must lie on the unit circle")
    return abs(rho2 - rho1.conjugate()) < tol


# ---------------------------------------------------------------- the map


@dataclass(frozen=True)
class NormalFormMap:
    rho1: complex
    rho2: complex

    @property
    def fixed_points(self) -> tuple[complex, complex, complex]:
        if self.rho2 == 1:
            z3 = INFINITY
        else:
            z3 = (1 - self.rho1) / (1 - self.rho2)
        return 0j, INFINITY, z3

    @property
    def critical_points(self) -> tuple[complex, complex]:
        """Roots of rho2 z^2 + 2 z + rho1 (infinity when rho2 = 0)."""
        a, r1 = self.rho2, self.rho1
        if a == 0:
            return -r1 / 2, INFINITY
        disc = cmath.sqrt(1 - a * r1)
        # stable root pair: the smaller one from the rationalized form
        big = -(1 + disc) / a if abs(1 + disc) >= abs(1 - disc) else -(1 - disc) / a
        small = r1 / (a * big)
        return small, big

    def derivative(self, z: complex) -> complex:
        r1, r2 = self.rho1, self.rho2
        return (r2 * z * z + 2 * z + r1) / (r2 * z + 1) ** 2

    def multiplier(self, z: complex) -> complex:
        """Multiplier at a fixed point z (finite or infinity)."""
        if is_infinity(z):
            return self.chart_derivative_at_infinity()
        return self.derivative(z)

    def chart_derivative_at_infinity(self) -> complex:
        # g(w) = 1/f(1/w) = w (rho2 + w) / (1 + rho1 w); g'(0) = rho2
        return self.rho2

    def chart_map(self, w: complex) -> complex:
        """The map read in the chart w = 1/z at both ends."""
        return w * (self.rho2 + w) / (1 + self.rho1 * w)


def normal_form(point: QuadraticMultiplierPoint) -> NormalFormMap:
    if point.degenerate:
        raise DegenerateParameter("rho1*rho2 = 1: the map drops degree")
    return NormalFormMap(point.rho1, point.rho2)


def _projective_image(f: NormalFormMap, z: complex, chart: str) -> tuple[complex, complex]:
    """Image of a point as a pair (num, den) with f = num/den."""
    r1, r2 = f.rho1, f.rho2
    if chart == "z":
        return z * (z + r1), r2 * z + 1
    # z = 1/w: f = (1 + r1 w) / (w (r2 + w))
    w = z
    return 1 + r1 * w, w * (r2 + w)


def evaluate_in_chart(f: NormalFormMap, z: complex, chart: str) -> complex:
    """f(z) computed from the z-chart (``"z"``) or the w = 1/z chart (``"w"``).

    The result is returned in the z coordinate; infinity as INFINITY.
    """
    if chart == "w":
        if is_infinity(z):
            w = 0j
        else:
            if z == 0:
                raise DomainError("0 is not in the w chart")
            w = 1 / z
        num, den = _projective_image(f, w, "w")
    elif chart == "z":
        if is_infinity(z):
            raise DomainError("infinity is not in the z chart")
        num, den = _projective_image(f, z, "z")
    else:
        raise ValueError(chart)
    if den == 0:
        return INFINITY
    return num / den


def evaluate(f: NormalFormMap, z: complex) -> complex:
    if is_infinity(z) or abs(z) > CHART_RADIUS:
        return evaluate_in_chart(f, z, "w")
    return evaluate_in_chart(f, z, "z")


# ---------------------------------------------------------------- text format


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s:
        raise ParseError("empty complex number")
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        raise ParseError(f"bad complex number {text!r}") from None


def format_complex(z: complex) -> str:
    sign = "+" if z.imag >= 0 or math.isnan(z.imag) else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def format_point(rho1: complex, rho2: complex) -> str:
    return f"rho1={format_complex(complex(rho1))} rho2={format_complex(complex(rho2))}"


def parse_point(text: str) -> tuple[complex, complex]:
    """Parse ``"rho1=a+bi rho2=c+di"``."""
    fields = {}
    for tok in text.split():
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}")
        key, val = tok.split("=", 1)
        fields[key] = parse_complex(val)
    if set(fields) != {"rho1", "rho2"}:
        raise ParseError(f"need rho1 and rho2, got {sorted(fields)}")
    return fields["rho1"], fields["rho2"]
