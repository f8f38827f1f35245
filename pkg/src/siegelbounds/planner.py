"""Level-by-level skeleton of a geodesic pseudo-Siegel disk.

For a rotation number theta and the width K_F of the map, every level m
gets a threshold M_m, a near-parabolic flag and, on near-parabolic levels,
the three endpoint offsets (fjord dam, inner buffer, outer mark) measured in
cells of length l_{m+1}.  Level -1 is included, with l_{-1} = 1.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DepthExceeded, DomainError, InvalidThresholds
from .rotation import ConvergentTable, RotationNumber, convergents

DEFAULT_K = 100.0
DEFAULT_M = 10.0
DEFAULT_V = 8.0
DEFAULT_W = 64.0
DEFAULT_DEPTH = 30
DAM_SAMPLES = 256


class _Infinite:
    """M_m below the transition level: no level ratio ever exceeds it."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "inf"

    __str__ = __repr__


INFINITE = _Infinite()


def _length(table: ConvergentTable, m: int, depth: int) -> float:
    if m >= depth:
        raise DepthExceeded(f"level {m} lies beyond depth {depth}")
    return table.length(m)


def transition_level(theta: RotationNumber, K_F: float, K: float = DEFAULT_K,
                     depth: int = DEFAULT_DEPTH) -> int:
    """m_F: -2 if K_F <= K, else the m >= -1 with K/l_m < K_F <= K/l_{m+1}."""
    if not (K_F > 0 and K > 0):
        raise DomainError("K_F and K must be positive")
    if depth < 2:
        raise DomainError("depth must be >= 2")
    if K_F <= K:
        return -2
    table = convergents(theta, depth)
    m = -1
    while _length(table, m + 1, depth) * K_F > K:
        m += 1
    return m


class Regime(enum.Enum):
    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class LevelRecord:
    m: int
    length: float
    next_length: float
    M_m: float | _Infinite
    near_parabolic: bool
    fjord_offset_cells: int
    inner_buffer_cells: int
    outer_mark_cells: int
    regime: Regime

    @property
    def ratio(self) -> float:
        return self.length / self.next_length

    @property
    def offsets(self) -> tuple[int, int, int]:
        return self.fjord_offset_cells, self.inner_buffer_cells, self.outer_mark_cells

    def absolute(self, cells: int) -> float:
        return cells * self.next_length


@dataclass(frozen=True)
class RegularizationPlan:
    theta: RotationNumber
    K_F: float
    K: float
    M: float
    v: float
    w: float
    m_F: int
    levels: tuple[LevelRecord, ...]
    failures: tuple[int, ...] = ()
    # user-supplied metadata; not computed here
    delta: float | None = None
    Delta: float | None = None

    @property
    def near_parabolic_levels(self) -> list[LevelRecord]:
        return [r for r in self.levels if r.near_parabolic]

    @property
    def is_trivial(self) -> bool:
        return not self.near_parabolic_levels

    def level(self, m: int) -> LevelRecord:
        return self.levels[m + 1]


def depth_offsets(M_m: float, v: float, w: float) -> tuple[int, int, int]:
    """(floor E, floor E/v, floor E/w) with E = exp(sqrt(ln M_m))."""
    E = math.exp(math.sqrt(math.log(M_m)))
    return math.floor(E), math.floor(E / v), math.floor(E / w)


def regime_of(m: int, m_F: int) -> Regime:
    if m > m_F:
        return Regime.A
    if m < m_F:
        return Regime.B
    return Regime.C


def build_plan(theta: RotationNumber, K_F: float, K: float = DEFAULT_K, M: float = DEFAULT_M,
               v: float = DEFAULT_V, w: float = DEFAULT_W, H: Callable[[float], float] | None = None,
               depth: int = DEFAULT_DEPTH, delta: float | None = None,
               Delta: float | None = None) -> RegularizationPlan:
    """Per-level records for m = -1 .. depth - 2.

    H defaults to x -> max(M, x).  Levels below m_F get M_m = INFINITE and
    are never regularized.
    """
    if not M >= 2:
        raise InvalidThresholds("need M >= 2")
    if not (w > v > 1):
        raise InvalidThresholds("need w > v > 1")
    if not (K_F > 0 and K > 0):
        raise InvalidThresholds("K_F and K must be positive")
    if depth < 2:
        raise InvalidThresholds("depth must be >= 2")
    if H is None:
        def H(x, M=M):
            return max(M, x)
    m_F = transition_level(theta, K_F, K, depth)
    table = convergents(theta, depth)
    records, failures = [], []
    for m in range(-1, depth - 1):
        lm, ln = table.length(m), table.length(m + 1)
        if m > m_F:
            M_m = M
        elif m == m_F:
            M_m = float(H(lm * K_F))
            if not M_m >= M:
                raise InvalidThresholds(f"H({lm * K_F}) = {M_m} is below M = {M}")
        else:
            M_m = INFINITE
        near = M_m is not INFINITE and lm > M_m * ln
        cells = depth_offsets(M_m, v, w) if near else (0, 0, 0)
        if near and cells[0] * ln >= lm / 4:
            failures.append(m)
        records.append(LevelRecord(m, lm, ln, M_m, near, *cells, regime_of(m, m_F)))
    return RegularizationPlan(theta, K_F, K, M, v, w, m_F, tuple(records), tuple(failures),
                              delta, Delta)


# ---------------------------------------------------------------- stability


@dataclass(frozen=True)
class StabilityReport:
    k_I: dict[int, float]
    k_plus: dict[int, float]
    k_m: dict[int, float]


def stability_report(plan: RegularizationPlan) -> StabilityReport:
    """k_I = outer_mark_cells - 2 on regularized levels (every interval of a
    level has the same offsets), and k_m = min over regularized n >= m of
    k_I^+, infinite when no such level exists."""
    k_I = {r.m: float(r.outer_mark_cells - 2) for r in plan.levels if r.near_parabolic}
    k_plus = {m: max(k, 0.0) for m, k in k_I.items()}
    k_m, run = {}, math.inf
    for r in reversed(plan.levels):
        if r.m in k_plus:
            run = min(run, k_plus[r.m])
        k_m[r.m] = run
    return StabilityReport(k_I, k_plus, dict(sorted(k_m.items())))


# ---------------------------------------------------------------- width regimes


@dataclass(frozen=True)
class WidthPrediction:
    regime: Regime
    vertical_bound_form: str
    peripheral_bound_form: str
    vertical_driver: float
    peripheral_driver: float
    merged_vertical: float
    merged_peripheral: float


def predicted_width_regime(plan: RegularizationPlan, m: int, interval_length: float) -> WidthPrediction:
    """Which case of the a priori bounds applies to an interval J of level m."""
    if m < -1:
        raise DomainError("levels start at -1")
    table = convergents(plan.theta, max(m + 2, 2))
    lm, ln = table.length(m), table.length(m + 1)
    if not ln < interval_length <= lm:
        raise DomainError(f"need l_{m + 1} < |J| <= l_{m}")
    x = lm * plan.K_F
    merged = (x + 1.0, math.sqrt(x) + 1.0)
    reg = regime_of(m, plan.m_F)
    if reg is Regime.A:
        return WidthPrediction(reg, "W+ver(J) = O(1)", "W+per(J) ~ 1", 1.0, 1.0, *merged)
    if reg is Regime.B:
        return WidthPrediction(reg, "W+ver(J) ~ |J| K_F", "W+per(J) = O(1)",
                               interval_length * plan.K_F, 1.0, *merged)
    return WidthPrediction(reg, "W+ver(J) = O(l_m K_F)", "W+per(J) = O(sqrt(l_m K_F))",
                           x, math.sqrt(x), *merged)


# ---------------------------------------------------------------- dams


@dataclass(frozen=True)
class Dam:
    points: np.ndarray
    through_infinity: bool


def geodesic_dam(a_prime: float, b_prime: float, samples: int = DAM_SAMPLES) -> Dam:
    """Hyperbolic geodesic of the exterior of the unit disk joining the
    angles a', b' (in turns): 1/z of the orthogonal arc joining 1/a', 1/b'."""
    if abs((a_prime - b_prime + 0.5) % 1.0 - 0.5) < 1e-15:
        raise DomainError("dam endpoints must differ")
    P = np.exp(-2j * np.pi * a_prime)
    Q = np.exp(-2j * np.pi * b_prime)
    half = (np.angle(Q / P)) / 2
    if abs(abs(half) - np.pi / 2) < 1e-12:
        # antipodal: the orthogonal arc is a diameter, its image two rays
        s = np.linspace(-1.0, 1.0, samples)
        inner = -s * P
        with np.errstate(divide="ignore"):
            return Dam(1 / inner, True)
    c = P * np.exp(1j * half) / np.cos(half)
    t0 = np.angle(P - c)
    t1 = np.angle(Q - c)
    sweep = (t1 - t0 + np.pi) % (2 * np.pi) - np.pi
    t = t0 + sweep * np.linspace(0.0, 1.0, samples)
    inner = c + abs(P - c) * np.exp(1j * t)
    inner[0], inner[-1] = P, Q
    return Dam(1 / inner, False)


# ---------------------------------------------------------------- output

PLAN_COLUMNS = ["m", "l_m", "M_m", "near_parabolic", "fjord_offset_cells", "inner_buffer_cells",
                "outer_mark_cells", "fjord_offset", "inner_buffer", "outer_mark", "regime"]


def plan_csv(plan: RegularizationPlan) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(PLAN_COLUMNS)
    for r in plan.levels:
        out.writerow([r.m, repr(r.length), str(r.M_m) if r.M_m is INFINITE else repr(r.M_m),
                      int(r.near_parabolic), *r.offsets,
                      *(repr(r.absolute(c)) for c in r.offsets), r.regime.value])
    return buf.getvalue()
