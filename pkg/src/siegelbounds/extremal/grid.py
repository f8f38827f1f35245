"""Discrete extremal width on uniform grids.

A domain is rasterized into square cells.  Each cell carries a label:
interior cells hold the unknown potential, BASE and ROOF cells impose the
potential 0 and 1, everything else is insulating.  The potential solves the
five-point (finite volume) Laplacian; the extremal width of the family of
curves joining base to roof is the total current, i.e. the effective
conductance of the resistor network.

Where a level-set function ``phi`` (negative inside the domain) is known,
the link from an interior cell to a Dirichlet cell gets conductance
1/t with t the fraction of the link lying inside the domain.  On
grid-aligned edges t = 1/2, which is the plain finite-volume scheme and is
exact for rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from ..errors import DomainError, SolverDiverged

OUTSIDE = 0
INTERIOR = 1
BASE = 2
ROOF = 3
SIDE0 = 4
SIDE1 = 5

RESIDUAL = 1e-10
MIN_FRACTION = 1e-2
AMG_THRESHOLD = 40_000
LAW_SLACK = 0.03

# phi(x, y) < 0 inside; classify(x, y) labels exterior points
LevelSet = Callable[[np.ndarray, np.ndarray], np.ndarray]
Classifier = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Shape:
    """A quadrilateral (or two-conductor domain) described geometrically.

    ``classify`` is evaluated on cells outside the domain and returns one of
    BASE, ROOF, SIDE0, SIDE1, OUTSIDE.  ``scale`` is the length that the
    resolution parameter ``n`` divides (usually the shorter side).
    """

    bbox: tuple[float, float, float, float]
    phi: LevelSet
    classify: Classifier
    scale: float

    def discretize(self, n: int) -> "GridQuadrilateral":
        h = self.scale / n
        x0, x1, y0, y1 = self.bbox
        nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 4
        ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 4
        xs = x0 + (np.arange(nx) - 1.5) * h
        ys = y0 + (np.arange(ny) - 1.5) * h
        X, Y = np.meshgrid(xs, ys)
        phi = np.asarray(self.phi(X, Y), dtype=float)
        labels = np.where(phi < 0, INTERIOR, OUTSIDE).astype(np.int8)
        ext = phi >= 0
        labels[ext] = np.asarray(self.classify(X[ext], Y[ext]), dtype=np.int8)
        labels[0, :] = labels[-1, :] = labels[:, 0] = labels[:, -1] = OUTSIDE
        return GridQuadrilateral(labels, phi, h, self, n)

    def dual(self) -> "Shape":
        """Same domain with base/roof and the two sides exchanging roles."""
        swap = {BASE: OUTSIDE, ROOF: OUTSIDE, SIDE0: BASE, SIDE1: ROOF, OUTSIDE: OUTSIDE}

        def classify(x, y):
            codes = np.asarray(self.classify(x, y))
            out = np.zeros_like(codes)
            for old, new in swap.items():
                out[codes == old] = new
            return out

        return replace(self, classify=classify)


@dataclass
class GridQuadrilateral:
    labels: np.ndarray
    phi: np.ndarray | None
    h: float
    shape: Shape | None = None
    n: int | None = None

    def __post_init__(self):
        if not np.any(self.labels == INTERIOR):
            raise DomainError("grid has no interior cells")

    @property
    def cell_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.labels == code))
                for name, code in [("interior", INTERIOR), ("base", BASE), ("roof", ROOF)]}


@dataclass(frozen=True)
class WidthEstimate:
    value: float
    method: str
    grid_spacing: float | None = None
    error_estimate: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"width must be non-negative, got {self.value}")

    def __float__(self):
        return self.value


@dataclass
class Solution:
    width: float
    potential: np.ndarray
    iterations: int


def _link_conductance(phi_in, phi_out):
    if phi_in is None:
        return 2.0
    t = phi_in / (phi_in - phi_out)
    t = np.where(np.isfinite(t), t, 0.5)
    return 1.0 / np.clip(t, MIN_FRACTION, 1.0)


def solve(grid: GridQuadrilateral, rtol: float = RESIDUAL, maxiter: int | None = None) -> Solution:
    """Potential and conductance between the BASE and ROOF cells."""
    labels = grid.labels
    interior = labels == INTERIOR
    n = int(interior.sum())
    index = np.full(labels.shape, -1, dtype=np.int64)
    index[interior] = np.arange(n)
    phi = grid.phi

    diag = np.zeros(n)
    rhs = np.zeros(n)
    rows, cols = [], []
    # (index, conductance, value) per Dirichlet link, kept for the flux
    dirichlet = []

    for axis in (0, 1):
        a = [slice(None), slice(None)]
        b = [slice(None), slice(None)]
        a[axis] = slice(0, -1)
        b[axis] = slice(1, None)
        la, lb = labels[tuple(a)], labels[tuple(b)]
        ia, ib = index[tuple(a)], index[tuple(b)]
        both = (la == INTERIOR) & (lb == INTERIOR)
        rows.append(ia[both])
        cols.append(ib[both])
        np.add.at(diag, ia[both], 1.0)
        np.add.at(diag, ib[both], 1.0)
        for inner_l, outer_l, inner_i, sel_in, sel_out in (
            (la, lb, ia, tuple(a), tuple(b)),
            (lb, la, ib, tuple(b), tuple(a)),
        ):
            for code, value in ((BASE, 0.0), (ROOF, 1.0)):
                mask = (inner_l == INTERIOR) & (outer_l == code)
                if not mask.any():
                    continue
                if phi is None:
                    cond = np.full(mask.sum(), 2.0)
                else:
                    cond = _link_conductance(phi[sel_in][mask], phi[sel_out][mask])
                idx = inner_i[mask]
                np.add.at(diag, idx, cond)
                np.add.at(rhs, idx, cond * value)
                dirichlet.append((idx, cond, value))

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    off = -np.ones(r.size)
    A = sp.coo_matrix((np.concatenate([off, off, diag]),
                       (np.concatenate([r, c, np.arange(n)]), np.concatenate([c, r, np.arange(n)]))),
                      shape=(n, n)).tocsr()

    if not np.any(rhs) or not any(v == 0.0 for _, _, v in dirichlet):
        # no roof or no base reachable: the family is empty or has no resistance
        u = np.ones(n) if np.any(rhs) else np.zeros(n)
        return Solution(0.0, _embed(u, interior, labels), 0)

    if n >= AMG_THRESHOLD:
        # "local" weighting avoids pyamg's randomly started spectral radius
        # estimate, which would make repeated runs differ in the last digits
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric",
                                               smooth=("jacobi", {"weighting": "local"}))
        precond = ml.aspreconditioner(cycle="V")
    else:
        safe = np.where(diag > 0, diag, 1.0)
        precond = LinearOperator((n, n), matvec=lambda x: x / safe)
    count = [0]

    def _tick(_):
        count[0] += 1

    u, info = cg(A, rhs, rtol=rtol, atol=0.0, M=precond,
                 maxiter=maxiter or 20 * n + 1000, callback=_tick)
    resid = np.linalg.norm(rhs - A @ u) / np.linalg.norm(rhs)
    if info != 0 or not resid <= 10 * rtol:
        raise SolverDiverged(f"CG stopped with info={info}, relative residual {resid:.2e}")

    flux_base = sum(float(np.sum(cond * (u[idx] - value))) for idx, cond, value in dirichlet if value == 0.0)
    flux_roof = sum(float(np.sum(cond * (value - u[idx]))) for idx, cond, value in dirichlet if value == 1.0)
    return Solution(0.5 * (flux_base + flux_roof), _embed(u, interior, labels), count[0])


def _embed(u, interior, labels):
    full = np.full(labels.shape, np.nan)
    full[interior] = u
    full[labels == BASE] = 0.0
    full[labels == ROOF] = 1.0
    return full


def grid_width(shape: Shape, n: int, richardson: bool = True) -> WidthEstimate:
    """Width at resolution n; the error estimate compares with resolution n/2."""
    fine = solve(shape.discretize(n))
    err = 0.0
    extras = {"iterations": fine.iterations, "n": n}
    if richardson and n >= 8:
        coarse = solve(shape.discretize(n // 2))
        err = abs(fine.width - coarse.width)
        extras["coarse"] = coarse.width
    return WidthEstimate(fine.width, "grid_laplace", shape.scale / n, err, extras)


def width_rectangle(q: GridQuadrilateral, richardson: bool = True) -> WidthEstimate:
    """Extremal width of the curves joining base to roof in ``q``."""
    if q.shape is not None and q.n is not None:
        if q.n < 16:
            raise DomainError("need at least 16 cells across the shorter side")
        return grid_width(q.shape, q.n, richardson)
    sol = solve(q)
    return WidthEstimate(sol.width, "grid_laplace", q.h, 0.0, {"iterations": sol.iterations})


# ---------------------------------------------------------------- shapes


def _box_phi(x0, x1, y0, y1):
    def phi(x, y):
        return np.maximum.reduce([x0 - x, x - x1, y0 - y, y - y1])
    return phi


def rectangle(width: float, height: float = 1.0) -> Shape:
    """[0, width] x [0, height] with base y = 0 and roof y = height."""

    def classify(x, y):
        codes = np.full(np.shape(x), OUTSIDE, dtype=np.int8)
        codes[x < 0] = SIDE0
        codes[x > width] = SIDE1
        codes[y < 0] = BASE
        codes[y > height] = ROOF
        return codes

    return Shape((0.0, width, 0.0, height), _box_phi(0, width, 0, height), classify,
                 min(width, height))


def l_shape(a: float = 2.0, b: float = 1.0) -> Shape:
    """[0,a]x[0,b] union [0,b]x[b,a]: base along y = 0, roof along y = a,
    left side x = 0, right side the staircase."""
    lower = _box_phi(0, a, 0, b)
    upper = _box_phi(0, b, b, a)

    def phi(x, y):
        return np.minimum(lower(x, y), upper(x, y))

    def classify(x, y):
        codes = np.full(np.shape(x), SIDE1, dtype=np.int8)
        codes[x < 0] = SIDE0
        codes[y < 0] = BASE
        codes[y > a] = ROOF
        return codes

    return Shape((0.0, a, 0.0, a), phi, classify, b)


def cut_below(shape: Shape, cut: Callable[[np.ndarray], np.ndarray]) -> Shape:
    """Part of ``shape`` under the curve y = cut(x), the cut becoming the roof."""

    def phi(x, y):
        return np.maximum(shape.phi(x, y), y - cut(x))

    def classify(x, y):
        codes = np.asarray(shape.classify(x, y)).copy()
        codes[(shape.phi(x, y) < 0) & (y >= cut(x))] = ROOF
        return codes

    return replace(shape, phi=phi, classify=classify)


def cut_above(shape: Shape, cut: Callable[[np.ndarray], np.ndarray]) -> Shape:
    """Part of ``shape`` over the curve y = cut(x), the cut becoming the base."""

    def phi(x, y):
        return np.maximum(shape.phi(x, y), cut(x) - y)

    def classify(x, y):
        codes = np.asarray(shape.classify(x, y)).copy()
        codes[(shape.phi(x, y) < 0) & (y <= cut(x))] = BASE
        return codes

    return replace(shape, phi=phi, classify=classify)


def annulus_shape(outer: tuple[complex, float], inner: tuple[complex, float]) -> Shape:
    """Region between two nested circles; inner circle is the base."""
    (co, R), (ci, r) = outer, inner

    def phi(x, y):
        z = x + 1j * y
        return np.maximum(np.abs(z - co) - R, r - np.abs(z - ci))

    def classify(x, y):
        z = x + 1j * y
        return np.where(np.abs(z - ci) <= r, BASE, ROOF).astype(np.int8)

    return Shape((co.real - R, co.real + R, co.imag - R, co.imag + R), phi, classify, 2 * R)


# ---------------------------------------------------------------- annuli


def harmonic_sum(x: float, y: float) -> float:
    """x (+) y = 1/(1/x + 1/y); math.inf acts as the neutral element."""
    if x <= 0 or y <= 0:
        raise DomainError("harmonic sum needs positive arguments")
    if math.isinf(x):
        return y
    if math.isinf(y):
        return x
    return x * y / (x + y)


def concentric_ratio(outer: tuple[complex, float], inner: tuple[complex, float]) -> float:
    """R'/r' after a Mobius map sending both circles to circles about 0."""
    (co, R), (ci, r) = outer, inner
    d = abs(ci - co)
    if d < 1e-15 * R:
        return R / r
    # common symmetric points on the line of centers, outer center at 0
    s = R * R + d * d - r * r
    # the symmetric pair x, R^2/x; the root inside the inner disk, in stable form
    x = 2 * d * R * R / (s + math.sqrt(s * s - 4 * d * d * R * R))
    p, q = x, R * R / x

    def T(z):
        return abs((z - p) / (z - q))

    return T(R) / T(d + r)


def modulus_annulus(outer: tuple[complex, float], inner: tuple[complex, float],
                    method: str = "auto", n: int = 256) -> WidthEstimate:
    """Modulus of {z in outer disk} minus {closed inner disk}.

    Concentric annuli use (1/2pi) log(R/r) unless ``method="grid"``; all
    other cases solve for the radial conductance W and return 1/W.
    """
    (co, R), (ci, r) = (complex(outer[0]), float(outer[1])), (complex(inner[0]), float(inner[1]))
    if not (r > 0 and R > 0 and abs(ci - co) + r < R):
        raise DomainError("inner disk must lie inside the outer disk")
    concentric = abs(ci - co) < 1e-15 * R
    if method == "auto":
        method = "closed_form" if concentric else "grid"
    if method == "closed_form":
        return WidthEstimate(math.log(concentric_ratio((co, R), (ci, r))) / (2 * math.pi), "closed_form")
    est = grid_width(annulus_shape((co, R), (ci, r)), n)
    mod = 1.0 / est.value
    err = est.error_estimate / est.value ** 2
    return WidthEstimate(mod, "grid_laplace", est.grid_spacing, err, est.extras)


# ---------------------------------------------------------------- laws


@dataclass(frozen=True)
class SeriesLawReport:
    width: float
    lower_width: float
    upper_width: float
    bound: float
    holds: bool
    slack: float = LAW_SLACK


def check_series_law(shape: Shape, cut: Callable[[np.ndarray], np.ndarray], n: int = 64,
                     slack: float = LAW_SLACK) -> SeriesLawReport:
    """W(q) <= W(q1) (+) W(q2) for q cut into q1 (below) and q2 (above)."""
    w = grid_width(shape, n, richardson=False).value
    w1 = grid_width(cut_below(shape, cut), n, richardson=False).value
    w2 = grid_width(cut_above(shape, cut), n, richardson=False).value
    bound = harmonic_sum(w1, w2)
    return SeriesLawReport(w, w1, w2, bound, w <= bound * (1 + slack), slack)


@dataclass(frozen=True)
class ParallelLawReport:
    width: float
    part_widths: tuple[float, float]
    holds: bool


def check_parallel_law(shape: Shape, split_x: float, n: int = 64,
                       slack: float = LAW_SLACK) -> ParallelLawReport:
    """W(F) <= W(G1) + W(G2) with the base split at x = split_x."""

    def keep_base(side):
        def classify(x, y):
            codes = np.asarray(shape.classify(x, y)).copy()
            drop = (codes == BASE) & ((x >= split_x) if side == 0 else (x < split_x))
            codes[drop] = OUTSIDE
            return codes
        return replace(shape, classify=classify)

    w = grid_width(shape, n, richardson=False).value
    g1 = grid_width(keep_base(0), n, richardson=False).value
    g2 = grid_width(keep_base(1), n, richardson=False).value
    return ParallelLawReport(w, (g1, g2), w <= (g1 + g2) * (1 + slack))
