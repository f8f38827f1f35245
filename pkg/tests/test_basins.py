import cmath
import math

import numpy as np
import pytest

from siegelbounds.basins import (
    BASIN_INFINITY,
    BASIN_ZERO,
    UNDECIDED,
    BlaschkeModel,
    Viewport,
    blaschke_invariance_check,
    classify_points,
    rasterize_basins,
    read_ppm,
    rotation_deviation,
    siegel_boundary_orbit,
    valuable_domain_modulus,
    write_ppm,
)
from siegelbounds.errors import DomainError
from siegelbounds.moduli import NormalFormMap

G = (math.sqrt(5) - 1) / 2


def test_modulus_examples():
    assert abs(valuable_domain_modulus(0) - 0.110318) < 1e-6
    assert valuable_domain_modulus(0.8) == math.log(1 / 0.8) / (2 * math.pi)
    assert valuable_domain_modulus(0.999999) < 1e-6
    with pytest.raises(DomainError):
        valuable_domain_modulus(1.0)


def test_modulus_clamp_and_monotone():
    r = np.linspace(0, 0.9999, 400)
    vals = [valuable_domain_modulus(x * cmath.exp(1j * x)) for x in r]
    assert all(v == math.log(2) / (2 * math.pi) for v, x in zip(vals, r) if x <= 0.5)
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert max(abs(a - b) for a, b in zip(vals, vals[1:])) < 1e-2


def test_blaschke_examples():
    rep = blaschke_invariance_check(0)
    assert rep.max_excess <= 0 and rep.critical_inside
    z = 0.5 * np.exp(2j * np.pi * np.linspace(0, 1, 100))
    assert np.allclose(np.abs(BlaschkeModel(0)(z)), 0.25)
    rep = blaschke_invariance_check(0.5)
    assert rep.max_excess <= 0 and rep.critical_inside
    assert blaschke_invariance_check(0.9j).max_excess <= 0


def test_blaschke_random():
    rng = np.random.default_rng(4)
    for _ in range(100):
        rho = math.sqrt(rng.uniform(0, 0.999)) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        rep = blaschke_invariance_check(rho, 1000)
        assert rep.max_excess <= 1e-10
        assert rep.critical_inside


def test_critical_point_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(20):
        rho = complex(*rng.uniform(-0.6, 0.6, 2))
        F = BlaschkeModel(rho)
        c = F.critical_point
        h = 1e-6
        assert abs((F(c + h) - F(c - h)) / (2 * h)) < 1e-7


def test_z_squared_dichotomy():
    f = NormalFormMap(0, 0)
    t = np.exp(2j * np.pi * np.linspace(0, 1, 500, endpoint=False))
    assert np.all(classify_points(f, 0.5 * t, 200) == BASIN_ZERO)
    assert np.all(classify_points(f, 2.0 * t, 200) == BASIN_INFINITY)
    img = rasterize_basins(f, Viewport(-2, 2, -2, 2), (64, 64))
    z = Viewport(-2, 2, -2, 2).pixel_centers(64, 64)
    inside = np.abs(z) < 0.95
    outside = np.abs(z) > 1.05
    assert np.all(img.labels[inside] == BASIN_ZERO)
    assert np.all(img.labels[outside] == BASIN_INFINITY)


def test_undecided_shrinks_with_iterations():
    f = NormalFormMap(0.92 * cmath.exp(0.3j), 0.9)
    view = Viewport(-3, 3, -3, 3)
    a = rasterize_basins(f, view, (80, 80), max_iter=100).undecided_fraction()
    b = rasterize_basins(f, view, (80, 80), max_iter=200).undecided_fraction()
    assert a > 0
    assert b < a


def test_labels_are_invariant():
    f = NormalFormMap(0.4 + 0.3j, 0.5 - 0.2j)
    rng = np.random.default_rng(6)
    z = rng.uniform(-3, 3, 4000) + 1j * rng.uniform(-3, 3, 4000)
    lab = classify_points(f, z, 300)
    keep = lab != UNDECIDED
    z, lab = z[keep][:1000], lab[keep][:1000]
    fz = z * (z + f.rho1) / (f.rho2 * z + 1)
    assert np.array_equal(classify_points(f, fz, 300), lab)


def test_workers_do_not_change_output():
    f = NormalFormMap(0.6j, 0.3)
    view = Viewport(-2, 2, -1.5, 1.5)
    one = rasterize_basins(f, view, (61, 47), workers=1).labels
    four = rasterize_basins(f, view, (61, 47), workers=4).labels
    assert np.array_equal(one, four)


def test_ppm_round_trip(tmp_path):
    img = rasterize_basins(NormalFormMap(0, 0), Viewport(-2, 2, -1, 1), (20, 10))
    path = write_ppm(img, tmp_path / "b.ppm", comment="rho1=0 rho2=0")
    w, h, pix = read_ppm(path)
    assert (w, h) == (20, 10)
    assert tuple(pix[5, 10]) == (31, 119, 180)
    legend = (tmp_path / "b.ppm.legend").read_text().splitlines()
    assert legend[0] == "# rho1=0 rho2=0"
    assert len(legend) == 5


def test_siegel_orbit():
    f = NormalFormMap(cmath.exp(2j * math.pi * G), 0.5)
    orb = siegel_boundary_orbit(f, "0", 10_000)
    pts = orb.orbit
    # forward invariance of the cloud
    assert np.max(np.abs(orb.step(pts[:-1]) - pts[1:])) < 1e-6
    r = np.abs(pts)
    assert r.max() < 10 * r[:100].min()
    ang = np.angle(orb.points)
    assert np.all(np.diff(ang) >= 0)
    assert rotation_deviation(orb, G) < 0.05


def test_siegel_orbit_at_infinity():
    f = NormalFormMap(0.5, cmath.exp(2j * math.pi * G))
    orb = siegel_boundary_orbit(f, "inf", 2000)
    assert rotation_deviation(orb, G) < 0.05


def test_siegel_needs_neutral_point():
    with pytest.raises(DomainError):
        siegel_boundary_orbit(NormalFormMap(0.5, 0.5), "0", 10)
