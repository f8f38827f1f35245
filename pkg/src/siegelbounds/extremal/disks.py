"""Widths on the sphere minus finitely many round disks.

The configuration is first moved by z -> 1/(z - p) so that one disk becomes
the complement of a round disk and the remaining domain is bounded.  The
pole p is chosen among a fixed set of candidates to make the smallest
feature of the image (radius or gap) as large as possible relative to the
outer radius.  Widths are conformal invariants, so nothing else changes.

Marked intervals are angle ranges in turns (R/Z), measured from the disk
center in the original coordinates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from ..errors import DomainError, ParseError, SaturatedInterval
from ..rotation import CombinatorialInterval, scale_interval
from .grid import (BASE, INTERIOR, OUTSIDE, ROOF, GridQuadrilateral, WidthEstimate,
                   concentric_ratio, solve)

# smallest radius or gap of the chart should span this many cells
FEATURE_CELLS = 6
MAX_CELLS = 1024


@dataclass(frozen=True)
class Disk:
    """Closed round disk; with ``exterior`` the closed complement {|z - c| >= r}."""

    center: complex
    radius: float
    exterior: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("disk radius must be positive")

    def contains(self, z) -> np.ndarray | bool:
        d = np.abs(np.asarray(z) - self.center)
        return d >= self.radius if self.exterior else d <= self.radius

    def angle_of(self, z) -> np.ndarray:
        return (np.angle(np.asarray(z) - self.center) / (2 * np.pi)) % 1.0


@dataclass(frozen=True)
class Mark:
    disk: int
    theta0: float
    theta1: float

    @property
    def interval(self) -> CombinatorialInterval:
        length = (self.theta1 - self.theta0) % 1.0 or 1.0
        return CombinatorialInterval(self.theta0, length)


@dataclass(frozen=True)
class DiskConfiguration:
    disks: tuple[Disk, ...]
    marks: tuple[Mark, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))
        object.__setattr__(self, "marks", tuple(self.marks))
        if sum(d.exterior for d in self.disks) > 1:
            raise DomainError("at most one disk may contain infinity")
        for i, a in enumerate(self.disks):
            for b in self.disks[i + 1:]:
                if not _disjoint(a, b):
                    raise DomainError(f"disks {a} and {b} do not have disjoint closures")
        for m in self.marks:
            if not 0 <= m.disk < len(self.disks):
                raise DomainError(f"mark refers to missing disk {m.disk}")

    @property
    def boundary_count(self) -> int:
        return len(self.disks)

    @property
    def euler_characteristic(self) -> int:
        return 2 - len(self.disks)


def _disjoint(a: Disk, b: Disk) -> bool:
    d = abs(a.center - b.center)
    if a.exterior and b.exterior:
        return False
    if a.exterior or b.exterior:
        inner, outer = (b, a) if a.exterior else (a, b)
        return d + inner.radius < outer.radius
    return d > a.radius + b.radius


def in_convex_position(cfg: DiskConfiguration) -> bool:
    pts = np.array([[d.center.real, d.center.imag] for d in cfg.disks if not d.exterior])
    if len(pts) <= 2:
        return True
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return False
    return len(hull.vertices) == len(pts)


# ---------------------------------------------------------------- Mobius charts


def _image_disk(disk: Disk, pole: complex | None) -> Disk:
    """Image of a disk under z -> 1/(z - pole) (identity for pole None)."""
    if pole is None:
        return disk
    c, r = disk.center, disk.radius
    off = c - pole
    u = off / abs(off) if abs(off) > 0 else 1.0
    w1 = 1 / (c + r * u - pole)
    w2 = 1 / (c - r * u - pole)
    pole_inside = abs(off) < r
    # the image region contains infinity exactly when the pole lies in the region
    exterior = pole_inside != disk.exterior
    return Disk((w1 + w2) / 2, abs(w1 - w2) / 2, exterior)


@dataclass(frozen=True)
class Chart:
    pole: complex | None
    disks: tuple[Disk, ...]

    @property
    def outer(self) -> int:
        return next(i for i, d in enumerate(self.disks) if d.exterior)

    def pull_back(self, w):
        return w if self.pole is None else self.pole + 1 / w

    def feature_ratio(self) -> float:
        outer = self.disks[self.outer]
        sizes = []
        for i, d in enumerate(self.disks):
            if i == self.outer:
                continue
            sizes.append(d.radius)
            sizes.append(outer.radius - abs(d.center - outer.center) - d.radius)
            for e in self.disks[i + 1:]:
                if not e.exterior:
                    sizes.append(abs(d.center - e.center) - d.radius - e.radius)
        return min(sizes) / outer.radius


def _candidate_poles(disk: Disk):
    angles = np.exp(2j * np.pi * np.arange(24) / 24)
    if disk.exterior:
        radii = disk.radius * np.array([1.05, 1.2, 1.5, 2.0, 4.0, 10.0])
    else:
        radii = disk.radius * np.array([0.3, 0.6, 0.85, 0.95])
        yield disk.center
    for rho in radii:
        for a in angles:
            yield disk.center + rho * a


def best_chart(cfg: DiskConfiguration, forbidden: tuple[int, ...] = ()) -> Chart:
    """Bounded chart maximizing the smallest relative feature size.

    The pole is never placed in a disk listed in ``forbidden``.
    """
    charts = []
    for k, disk in enumerate(cfg.disks):
        if k in forbidden:
            continue
        if disk.exterior:
            charts.append(Chart(None, cfg.disks))
        for p in _candidate_poles(disk):
            charts.append(Chart(complex(p), tuple(_image_disk(d, p) for d in cfg.disks)))
    if not charts:
        raise DomainError("no disk available to hold the pole")
    best = max(charts, key=lambda ch: ch.feature_ratio())
    if best.pole is None:
        return best
    home = next(d for k, d in enumerate(cfg.disks)
                if k not in forbidden and _pole_in(d, best.pole))

    def cost(v):
        p = complex(v[0], v[1])
        if not _pole_in(home, p, margin=1e-6):
            return 1.0
        return -Chart(p, tuple(_image_disk(d, p) for d in cfg.disks)).feature_ratio()

    res = minimize(cost, [best.pole.real, best.pole.imag], method="Nelder-Mead",
                   options={"xatol": 1e-10 * home.radius, "fatol": 1e-12, "maxiter": 400})
    if res.fun < -best.feature_ratio():
        p = complex(res.x[0], res.x[1])
        best = Chart(p, tuple(_image_disk(d, p) for d in cfg.disks))
    return best


def _pole_in(disk: Disk, p: complex, margin: float = 0.0) -> bool:
    d = abs(p - disk.center)
    if disk.exterior:
        return d > disk.radius * (1 + margin)
    return d < disk.radius * (1 - margin)


# ---------------------------------------------------------------- rasterizing


def _chart_grid(chart: Chart, n: int):
    outer = chart.disks[chart.outer]
    h = 2 * outer.radius / n
    m = n + 6
    offs = (np.arange(m) - (m - 1) / 2) * h
    W = outer.center + offs[None, :] + 1j * offs[:, None]
    return W, h


def _levels(chart: Chart, W: np.ndarray, skip: tuple[int, ...] = ()):
    """phi per disk (positive inside the disk) and the combined domain level set."""
    terms = []
    for k, d in enumerate(chart.disks):
        dist = np.abs(W - d.center)
        terms.append(dist - d.radius if d.exterior else d.radius - dist)
    terms = np.array(terms)
    active = [k for k in range(len(chart.disks)) if k not in skip]
    phi = np.max(terms[active], axis=0)
    owner = np.array(active)[np.argmax(terms[active], axis=0)]
    return phi, owner, terms


def _boundary_angle(chart: Chart, cfg: DiskConfiguration, k: int, W: np.ndarray) -> np.ndarray:
    d = chart.disks[k]
    rel = W - d.center
    mag = np.abs(rel)
    proj = d.center + d.radius * np.where(mag > 0, rel / np.where(mag > 0, mag, 1), 1)
    return cfg.disks[k].angle_of(chart.pull_back(proj))


def _in_interval(angles: np.ndarray, iv: CombinatorialInterval) -> np.ndarray:
    if iv.is_full_circle:
        return np.ones(np.shape(angles), dtype=bool)
    return ((angles - iv.left) % 1.0) <= iv.length


def resolution_for(chart: Chart, n: int, cap: int = MAX_CELLS,
                   feature: float | None = None) -> tuple[int, bool]:
    """Cells across the chart so the smallest feature spans FEATURE_CELLS cells.

    ``feature`` is an extra length (in chart units) that must be resolved too.
    Returns the resolution and whether the cap stopped it short.
    """
    ratio = chart.feature_ratio()
    if feature is not None:
        ratio = min(ratio, feature / chart.disks[chart.outer].radius)
    want = math.ceil(FEATURE_CELLS * 2 / ratio)
    want += want % 2
    res = max(n, min(want, cap))
    return res, want > res


def _checked(grid: GridQuadrilateral) -> GridQuadrilateral:
    if not (np.any(grid.labels == BASE) and np.any(grid.labels == ROOF)):
        raise DomainError("a conductor is smaller than one grid cell; raise the resolution")
    return grid


def _estimate(grid_for, n: int, richardson: bool, spacing: float, extras=None) -> WidthEstimate:
    fine = solve(_checked(grid_for(n)))
    err = 0.0
    info = dict(extras or {}, n=n, iterations=fine.iterations)
    if richardson:
        coarse = solve(_checked(grid_for(n // 2)))
        err = abs(fine.width - coarse.width)
        info["coarse"] = coarse.width
    return WidthEstimate(fine.width, "grid_laplace", spacing, err, info)


# ---------------------------------------------------------------- widths


def arc_degeneration_pair(cfg: DiskConfiguration, i: int, j: int, n: int = 256,
                          richardson: bool = True, method: str = "auto") -> WidthEstimate:
    """Width of the arcs joining disk i to disk j in the complement of all disks.

    With exactly two disks the domain is a round annulus after a Mobius map
    and ``method="auto"`` returns 2 pi / log(R/r) instead of solving.
    """
    if i == j or not (0 <= i < len(cfg.disks) and 0 <= j < len(cfg.disks)):
        raise DomainError("need two distinct disk indices")
    if not in_convex_position(cfg):
        raise DomainError("disk centers are not in convex position")
    chart = best_chart(cfg)
    if method == "auto":
        method = "closed_form" if len(cfg.disks) == 2 else "grid"
    if method == "closed_form":
        if len(cfg.disks) != 2:
            raise DomainError("closed form needs exactly two disks")
        outer = chart.disks[chart.outer]
        inner = chart.disks[1 - chart.outer]
        ratio = concentric_ratio((outer.center, outer.radius), (inner.center, inner.radius))
        return WidthEstimate(2 * math.pi / math.log(ratio), "closed_form")
    if method != "grid":
        raise DomainError(f"unknown method {method!r}")

    def grid_for(res):
        W, h = _chart_grid(chart, res)
        phi, owner, _ = _levels(chart, W)
        labels = np.where(phi < 0, INTERIOR, OUTSIDE).astype(np.int8)
        labels[(phi >= 0) & (owner == i)] = BASE
        labels[(phi >= 0) & (owner == j)] = ROOF
        _frame(labels)
        return GridQuadrilateral(labels, phi, h)

    n, under = resolution_for(chart, n)
    spacing = 2 * chart.disks[chart.outer].radius / n
    return _estimate(grid_for, n, richardson, spacing, {"pole": chart.pole, "under_resolved": under})


def _arc_in_chart(chart: Chart, cfg: DiskConfiguration, k: int, iv: CombinatorialInterval) -> float:
    """Length of the image in the chart of the boundary arc ``iv`` of disk k."""
    d = cfg.disks[k]
    t = iv.left + iv.length * np.linspace(0, 1, 65)
    z = d.center + d.radius * np.exp(2j * np.pi * t)
    w = z if chart.pole is None else 1 / (z - chart.pole)
    return float(np.sum(np.abs(np.diff(w))))


def _frame(labels):
    labels[0, :] = labels[-1, :] = labels[:, 0] = labels[:, -1] = OUTSIDE


@dataclass(frozen=True)
class LocalDegeneration:
    W_plus: WidthEstimate
    W_sphere: WidthEstimate


def local_degeneration(cfg: DiskConfiguration, disk: int, interval: CombinatorialInterval,
                       lam: float = 10.0, n: int = 256, allow_saturated: bool = False,
                       richardson: bool = True) -> LocalDegeneration:
    """Widths of the curves from I to B = boundary minus lambda*I.

    W_plus counts curves in the complement of every disk.  W_sphere lets the
    curves also cross the disk carrying I; the other disks stay obstacles
    held at the potential of B.
    """
    if len(cfg.disks) < 2:
        raise DomainError("need at least two disks")
    if lam < 10:
        raise DomainError("lambda must be >= 10")
    scaled = scale_interval(interval, lam)
    if scaled.is_full_circle and not allow_saturated:
        raise SaturatedInterval(f"{lam} * |I| covers the circle")
    chart = best_chart(cfg, forbidden=(disk,))

    def plus_grid(res):
        W, h = _chart_grid(chart, res)
        phi, owner, _ = _levels(chart, W)
        labels = np.where(phi < 0, INTERIOR, OUTSIDE).astype(np.int8)
        ext = phi >= 0
        labels[ext] = ROOF
        on_disk = ext & (owner == disk)
        ang = _boundary_angle(chart, cfg, disk, W[on_disk])
        sub = np.full(ang.shape, ROOF, dtype=np.int8)
        sub[_in_interval(ang, scaled)] = OUTSIDE
        sub[_in_interval(ang, interval)] = BASE
        labels[on_disk] = sub
        _frame(labels)
        return GridQuadrilateral(labels, phi, h)

    def sphere_grid(res):
        W, h = _chart_grid(chart, res)
        phi, owner, terms = _levels(chart, W, skip=(disk,))
        labels = np.where(phi < 0, INTERIOR, ROOF).astype(np.int8)
        # the circle of the carrying disk becomes a pair of slits
        slit = np.abs(terms[disk]) <= h / math.sqrt(2)
        slit &= phi < 0
        ang = _boundary_angle(chart, cfg, disk, W[slit])
        sub = np.full(ang.shape, ROOF, dtype=np.int8)
        sub[_in_interval(ang, scaled)] = INTERIOR
        sub[_in_interval(ang, interval)] = BASE
        labels[slit] = sub
        phi = phi.copy()
        phi[slit & (labels != INTERIOR)] = 0.0
        _frame(labels)
        return GridQuadrilateral(labels, phi, h)

    n, under = resolution_for(chart, n, feature=_arc_in_chart(chart, cfg, disk, interval))
    spacing = 2 * chart.disks[chart.outer].radius / n
    extras = {"pole": chart.pole, "saturated": scaled.is_full_circle, "under_resolved": under}
    return LocalDegeneration(
        _estimate(plus_grid, n, richardson, spacing, extras),
        _estimate(sphere_grid, n, richardson, spacing, extras),
    )


# ---------------------------------------------------------------- text formats


def parse_config(text: str) -> DiskConfiguration:
    """Lines ``disk cx cy r [exterior]`` and ``mark disk_index theta0 theta1``."""
    disks, marks = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "disk" and len(tok) in (4, 5):
                ext = len(tok) == 5
                if ext and tok[4] != "exterior":
                    raise ParseError(f"line {lineno}: unknown disk flag {tok[4]!r}")
                disks.append(Disk(complex(float(tok[1]), float(tok[2])), float(tok[3]), ext))
            elif tok[0] == "mark" and len(tok) == 4:
                marks.append(Mark(int(tok[1]), float(tok[2]), float(tok[3])))
            else:
                raise ParseError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"line {lineno}: {exc}") from None
    try:
        return DiskConfiguration(tuple(disks), tuple(marks))
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def read_config(path) -> DiskConfiguration:
    return parse_config(Path(path).read_text())


def format_config(cfg: DiskConfiguration) -> str:
    lines = []
    for d in cfg.disks:
        flag = " exterior" if d.exterior else ""
        lines.append(f"disk {d.center.real!r} {d.center.imag!r} {d.radius!r}{flag}")
    for m in cfg.marks:
        lines.append(f"mark {m.disk} {m.theta0!r} {m.theta1!r}")
    return "\n".join(lines) + "\n"


def width_csv(rows: list[tuple[str, WidthEstimate]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "value", "error_estimate", "grid"])
    for name, est in rows:
        writer.writerow([name, repr(est.value), repr(est.error_estimate), repr(est.grid_spacing)])
    return buf.getvalue()
