"""Blaschke models of attracting basins, basin rasterization and Siegel-disk
boundary approximations for the normal-form family."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, NoCriticalPoint
from .moduli import INFINITY, NormalFormMap, is_infinity

UNDECIDED = 0
BASIN_ZERO = 1
BASIN_INFINITY = 2
BASIN_THIRD = 3

LABEL_NAMES = {
    UNDECIDED: "undecided",
    BASIN_ZERO: "basin-0",
    BASIN_INFINITY: "basin-inf",
    BASIN_THIRD: "basin-z3",
}
PALETTE = {
    UNDECIDED: (0, 0, 0),
    BASIN_ZERO: (31, 119, 180),
    BASIN_INFINITY: (255, 127, 14),
    BASIN_THIRD: (44, 160, 44),
}

CONVERGENCE_RADIUS = 1e-6


# ---------------------------------------------------------------- Blaschke model


@dataclass(frozen=True)
class BlaschkeModel:
    """F(z) = z (z + rho) / (1 + conj(rho) z) on the unit disk."""

    rho: complex

    def __post_init__(self):
        if abs(self.rho) >= 1:
            raise DomainError("Blaschke model needs |rho| < 1")

    @property
    def radius(self) -> float:
        return max(0.5, abs(self.rho))

    def __call__(self, z):
        rho = self.rho
        return z * (z + rho) / (1 + np.conj(rho) * z)

    @property
    def critical_point(self) -> complex:
        """The critical point of F inside the unit disk."""
        rho = complex(self.rho)
        return -rho / (1 + math.sqrt(1 - abs(rho) ** 2))


def valuable_domain_modulus(rho: complex) -> float:
    """Modulus of the annulus between the basin and its valuable sub-disk."""
    if abs(rho) >= 1:
        raise DomainError("attracting multiplier needs |rho| < 1")
    return math.log(1 / max(0.5, abs(rho))) / (2 * math.pi)


@dataclass(frozen=True)
class InvarianceReport:
    max_excess: float
    critical_inside: bool


def blaschke_invariance_check(rho: complex, samples: int = 1000) -> InvarianceReport:
    """Sample |F(z)| - r over the closed disk of radius r = max(1/2, |rho|)."""
    if samples < 100:
        raise DomainError("need at least 100 samples")
    model = BlaschkeModel(rho)
    r = model.radius
    t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    radii = r * np.array([1.0, 0.75, 0.5, 0.25])
    z = (radii[:, None] * np.exp(1j * t)[None, :]).ravel()
    excess = float(np.max(np.abs(model(z))) - r)
    return InvarianceReport(excess, abs(model.critical_point) < r)


# ---------------------------------------------------------------- rasterization


@dataclass(frozen=True)
class Viewport:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise DomainError("empty viewport")

    def pixel_centers(self, width: int, height: int) -> np.ndarray:
        xs = self.xmin + (np.arange(width) + 0.5) * (self.xmax - self.xmin) / width
        ys = self.ymax - (np.arange(height) + 0.5) * (self.ymax - self.ymin) / height
        return xs[None, :] + 1j * ys[:, None]


@dataclass
class RasterImage:
    width: int
    height: int
    viewport: Viewport
    labels: np.ndarray
    classes: tuple[int, ...] = tuple(LABEL_NAMES)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DomainError("image dimensions must be positive")
        if self.labels.shape != (self.height, self.width):
            raise DomainError("label array does not match dimensions")
        if not np.isin(self.labels, self.classes).all():
            raise DomainError("label outside the declared classes")

    def undecided_fraction(self) -> float:
        return float(np.mean(self.labels == UNDECIDED))


def _attractors(f: NormalFormMap) -> list[tuple[int, complex]]:
    out = []
    if abs(f.rho1) < 1:
        out.append((BASIN_ZERO, 0j))
    if abs(f.rho2) < 1:
        out.append((BASIN_INFINITY, INFINITY))
    z3 = f.fixed_points[2]
    if not is_infinity(z3) and abs(f.multiplier(z3)) < 1:
        out.append((BASIN_THIRD, z3))
    return out


def _step(f: NormalFormMap, u: np.ndarray, in_w: np.ndarray):
    """One application of f on chart coordinates, choosing the output chart."""
    r1, r2 = f.rho1, f.rho2
    num = np.where(in_w, 1 + r1 * u, u * (u + r1))
    den = np.where(in_w, u * (r2 + u), r2 * u + 1)
    to_w = np.abs(num) > 2 * np.abs(den)
    with np.errstate(divide="ignore", invalid="ignore"):
        new = np.where(to_w, den / num, num / den)
    return new, to_w


def _detect(u, in_w, labels, attractors):
    for label, point in attractors:
        if is_infinity(point):
            hit = in_w & (np.abs(u) < CONVERGENCE_RADIUS)
        elif abs(point) <= 2:
            hit = ~in_w & (np.abs(u - point) < CONVERGENCE_RADIUS)
        else:
            hit = in_w & (np.abs(u - 1 / point) < CONVERGENCE_RADIUS)
        labels[hit & (labels == UNDECIDED)] = label


def classify_points(f: NormalFormMap, z: np.ndarray, max_iter: int) -> np.ndarray:
    """Basin label of every point of ``z`` (any shape)."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    in_w = ~np.isfinite(z) | (np.abs(z) > 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(in_w, np.where(np.isfinite(z), 1 / z, 0), z)
    labels = np.zeros(z.shape, dtype=np.uint8)
    attractors = _attractors(f)
    _detect(u, in_w, labels, attractors)
    active = np.flatnonzero(labels == UNDECIDED)
    for _ in range(max_iter):
        if active.size == 0:
            break
        new, to_w = _step(f, u[active], in_w[active])
        u[active] = new
        in_w[active] = to_w
        sub = labels[active]
        _detect(u[active], in_w[active], sub, attractors)
        labels[active] = sub
        active = active[sub == UNDECIDED]
    return labels.reshape(shape)


def rasterize_basins(f: NormalFormMap, viewport: Viewport, resolution: tuple[int, int],
                     max_iter: int = 200, workers: int = 1) -> RasterImage:
    """Label each pixel by the attracting fixed point its orbit reaches.

    Rows are independent; ``workers`` only changes scheduling, never output.
    """
    width, height = resolution
    if width <= 0 or height <= 0:
        raise DomainError("resolution must be positive")
    grid = viewport.pixel_centers(width, height)
    if workers <= 1:
        labels = classify_points(f, grid, max_iter)
    else:
        chunks = np.array_split(np.arange(height), min(workers * 4, height))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda rows: classify_points(f, grid[rows], max_iter), chunks))
        labels = np.concatenate(parts, axis=0)
    return RasterImage(width, height, viewport, labels)


def write_ppm(image: RasterImage, path, comment: str | None = None) -> Path:
    """Binary P6 image plus a ``.legend`` sidecar mapping labels to colors."""
    path = Path(path)
    lut = np.zeros((256, 3), dtype=np.uint8)
    for label, rgb in PALETTE.items():
        lut[label] = rgb
    pixels = lut[image.labels]
    header = "P6\n"
    if comment:
        header += f"# {comment}\n"
    header += f"{image.width} {image.height}\n255\n"
    path.write_bytes(header.encode("ascii") + pixels.tobytes())
    legend = path.with_suffix(path.suffix + ".legend")
    lines = [f"# {comment}"] if comment else []
    lines += [f"{label} {LABEL_NAMES[label]} {r} {g} {b}" for label, (r, g, b) in PALETTE.items()]
    legend.write_text("\n".join(lines) + "\n")
    return path


def read_ppm(path) -> tuple[int, int, np.ndarray]:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        end = data.index(b"\n", pos)
        line = data[pos:end]
        pos = end + 1
        if line.startswith(b"#"):
            continue
        tokens += line.split()
    if tokens[0] != b"P6":
        raise ValueError("not a P6 file")
    width, height = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos:], dtype=np.uint8).reshape(height, width, 3)
    return width, height, pixels


# ---------------------------------------------------------------- Siegel orbits


@dataclass(frozen=True)
class SiegelOrbit:
    """Critical orbit in the chart centered at a neutral fixed point.

    ``orbit`` keeps iteration order; ``points`` is sorted by argument.
    """

    orbit: np.ndarray
    chart_params: tuple[complex, complex]

    @property
    def points(self) -> np.ndarray:
        return self.orbit[np.argsort(np.angle(self.orbit), kind="stable")]

    def step(self, u: np.ndarray) -> np.ndarray:
        a, b = self.chart_params
        return u * (u + a) / (b * u + 1)


def siegel_boundary_orbit(f: NormalFormMap, which_fixed_point: str = "0",
                          n_points: int = 10_000) -> SiegelOrbit:
    """Orbit of the critical point nearest a neutral fixed point (0 or "inf").

    Near infinity the map is read in w = 1/z, where it is again of normal
    form with the roles of rho1 and rho2 exchanged.
    """
    if which_fixed_point in ("0", 0):
        a, b = f.rho1, f.rho2
    elif which_fixed_point in ("inf", "infinity"):
        a, b = f.rho2, f.rho1
    else:
        raise DomainError(f"unknown fixed point {which_fixed_point!r}")
    if abs(abs(a) - 1) > 1e-9:
        raise DomainError("the selected fixed point is not neutral")
    chart = NormalFormMap(a, b)
    finite = [c for c in chart.critical_points if not is_infinity(c)]
    if not finite:
        raise NoCriticalPoint("no finite critical point in the chart")
    u = min(finite, key=abs)
    orbit = np.empty(n_points, dtype=complex)
    for k in range(n_points):
        orbit[k] = u
        u = u * (u + a) / (b * u + 1)
    return SiegelOrbit(orbit, (a, b))


def rotation_deviation(orbit: SiegelOrbit, rotation: float) -> float:
    """max_k of the R/Z distance between the normalized argument of the k-th
    orbit point (measured from the first) and the rigid-rotation position k*rotation."""
    pts = orbit.orbit
    ang = (np.angle(pts) - np.angle(pts[0])) / (2 * np.pi)
    model = np.arange(len(pts)) * rotation
    d = (ang - model) % 1.0
    return float(np.max(np.minimum(d, 1 - d)))


def argument_discrepancy(orbit: SiegelOrbit) -> float:
    """Kolmogorov distance between the argument distribution and uniform."""
    a = np.sort((np.angle(orbit.orbit) / (2 * np.pi)) % 1.0)
    n = len(a)
    i = np.arange(n)
    return float(max(np.max((i + 1) / n - a), np.max(a - i / n)))
