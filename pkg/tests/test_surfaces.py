import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckytool import shapes
from ckytool import surfaces as sf
from ckytool.charts import ANTI_DE_SITTER, DE_SITTER, MINKOWSKI


def _second_form(geo):
    """Scalar second fundamental form along en for a slice surface."""
    return np.einsum("abmk,mnk,nk->abk", geo.forms.II, geo.g, geo.frame.en)


def _gauss_curvature(geo):
    h = _second_form(geo)
    s = geo.forms.sigma
    return (h[0, 0] * h[1, 1] - h[0, 1] ** 2) / (s[0, 0] * s[1, 1] - s[0, 1] ** 2)


def _ellipsoid_mean_curvature(p, axes):
    """Sum of principal curvatures of the level set Σ x_m²/a_m² = 1, outward normal."""
    a = np.asarray(axes)[:, None]
    grad = 2 * p / a**2
    hess = 2 / a**2
    n = np.linalg.norm(grad, axis=0)
    return (n**2 * hess.sum(axis=0) - np.sum(grad**2 * hess, axis=0)) / n**3


@given(st.floats(0.2, 3.0))
def test_minkowski_sphere_area_and_mean_curvature(rho):
    mesh = sf.build_mesh(shapes.sphere(MINKOWSKI, rho), 10)
    assert sf.integrate(mesh, np.ones(mesh.size)) == pytest.approx(4 * math.pi * rho**2, rel=1e-12)
    np.testing.assert_allclose(sf.mesh_geometry(mesh).H_Lbar, 2 / rho, rtol=1e-11)


def test_sphere_radius_two_area():
    mesh = sf.build_mesh(shapes.sphere(MINKOWSKI, 2.0), 12)
    assert sf.integrate(mesh, np.ones(mesh.size)) == pytest.approx(16 * math.pi, rel=1e-13)


def test_inward_orientation_flips_sign():
    geo = sf.mesh_geometry(sf.build_mesh(shapes.sphere(MINKOWSKI, 1.0, inward=True), 8))
    np.testing.assert_allclose(geo.H_Lbar, -2.0, rtol=1e-12)


@pytest.mark.parametrize(
    "spacetime, radius_of, curvature_of, area_of",
    [
        # t = 0 slice of AdS is the Poincaré ball model of hyperbolic space
        (ANTI_DE_SITTER, lambda r: 2 * math.atanh(r), lambda R: 2 / math.tanh(R), lambda R: 4 * math.pi * math.sinh(R) ** 2),
        # t = 0 slice of dS is the unit round sphere in stereographic coordinates
        (DE_SITTER, lambda r: 2 * math.atan(r), lambda R: 2 / math.tan(R), lambda R: 4 * math.pi * math.sin(R) ** 2),
    ],
)
@pytest.mark.parametrize("rho", [0.2, 0.5, 0.7])
def test_curved_slice_spheres(spacetime, radius_of, curvature_of, area_of, rho):
    mesh = sf.build_mesh(shapes.sphere(spacetime, rho), 12)
    R = radius_of(rho)
    assert sf.integrate(mesh, np.ones(mesh.size)) == pytest.approx(area_of(R), rel=1e-12)
    geo = sf.mesh_geometry(mesh)
    np.testing.assert_allclose(geo.H_Lbar, curvature_of(R), rtol=1e-10)
    assert np.max(np.abs(geo.forms.zeta)) < 1e-12


def test_ellipsoid_mean_curvature_matches_implicit_oracle():
    axes = (1.0, 0.8, 0.5)
    mesh = sf.build_mesh(shapes.ellipsoid(MINKOWSKI, axes), 24)
    geo = sf.mesh_geometry(mesh)
    np.testing.assert_allclose(geo.H_Lbar, _ellipsoid_mean_curvature(mesh.X[1:], axes), rtol=1e-10)

    # dense independent midpoint-rule integral of H over the ellipsoid
    n = 1200
    psi = (np.arange(n) + 0.5) * math.pi / n
    phi = (np.arange(2 * n) + 0.5) * math.pi / n
    P, F = np.meshgrid(psi, phi, indexing="ij")
    a, b, c = axes
    p = np.stack([a * np.sin(P) * np.cos(F), b * np.sin(P) * np.sin(F), c * np.cos(P)])
    tu = np.stack([a * np.cos(P) * np.cos(F), b * np.cos(P) * np.sin(F), -c * np.sin(P)])
    tv = np.stack([-a * np.sin(P) * np.sin(F), b * np.sin(P) * np.cos(F), 0 * P])
    dA = np.linalg.norm(np.cross(tu, tv, axis=0), axis=0) * (math.pi / n) ** 2
    H_dense = float(np.sum(_ellipsoid_mean_curvature(p.reshape(3, -1), axes) * dA.ravel()))
    assert sf.integrate(mesh, geo.H_Lbar) == pytest.approx(H_dense, rel=1e-4)


@pytest.mark.parametrize("axes", [(1.0, 1.0, 0.5), (1.2, 0.7, 0.9)])
def test_gauss_bonnet(axes):
    mesh = sf.build_mesh(shapes.ellipsoid(MINKOWSKI, axes), 48)
    K = _gauss_curvature(sf.mesh_geometry(mesh))
    assert sf.integrate(mesh, K) == pytest.approx(4 * math.pi, rel=1e-10)


def test_gauge_rescaling():
    mesh = sf.build_mesh(shapes.sphere(MINKOWSKI, 1.5, time_wiggle=0.2), 10)
    g1 = sf.mesh_geometry(mesh)
    g3 = sf.mesh_geometry(mesh, gauge=3.0)
    np.testing.assert_allclose(g3.H_Lbar, g1.H_Lbar / 3, rtol=1e-12)
    np.testing.assert_allclose(g1.pair(g1.frame.L, g1.frame.Lbar), -2.0, rtol=1e-12)
    for v in (g1.frame.L, g1.frame.Lbar):
        assert np.max(np.abs(g1.pair(v, v))) < 1e-12
        assert np.max(np.abs(np.einsum("m...,mn...,an...->a...", v, g1.g, g1.dX))) < 1e-12


def test_flat_disk_meets_support_orthogonally():
    mesh = sf.build_mesh(shapes.flat_disk(), 12)
    assert sf.free_boundary_residual(mesh, mesh.surface.support) < 1e-12


@pytest.mark.parametrize("spacetime", [MINKOWSKI, ANTI_DE_SITTER, DE_SITTER])
@pytest.mark.parametrize("radius", [0.5, 0.75])
def test_caps_meet_support_orthogonally(spacetime, radius):
    surf = shapes.cap(spacetime, radius * (0.4 if spacetime is not MINKOWSKI else 1.0))
    mesh = sf.build_mesh(surf, 12)
    assert np.max(sf.support_distance(mesh, surf.support)) < 1e-12
    assert sf.free_boundary_residual(mesh, surf.support) < 1e-12


def test_perturbed_caps_keep_orthogonal_contact():
    for mode in shapes.CAP_MODES:
        surf = shapes.cap(MINKOWSKI, 0.75, bump=0.5, mode=mode)
        mesh = sf.build_mesh(surf, 12)
        assert sf.free_boundary_residual(mesh, surf.support) < 1e-12


def test_shifted_cap_is_rejected():
    surf = shapes.cap(MINKOWSKI, 0.75, shift=0.1)
    mesh = sf.build_mesh(surf, 12)
    with pytest.raises(sf.BoundaryOffSupportError) as err:
        sf.free_boundary_residual(mesh, surf.support)
    assert err.value.distance > 1e-2


def test_cap_area_oracle():
    mesh = sf.build_mesh(shapes.cap(MINKOWSKI, 0.75), 12)
    assert sf.integrate(mesh, np.ones(mesh.size)) == pytest.approx(shapes.cap_area(0.75), rel=1e-13)


def test_slice_radius_and_l_validation():
    assert sf.slice_radius(MINKOWSKI) == 1.0
    assert sf.slice_radius(ANTI_DE_SITTER, math.cosh(1.0)) == pytest.approx(math.tanh(0.5))
    assert sf.slice_radius(DE_SITTER, math.cos(0.5)) == pytest.approx(math.tan(0.25))
    with pytest.raises(ValueError):
        sf.validate_l(ANTI_DE_SITTER, 0.9)
    with pytest.raises(ValueError):
        sf.validate_l(DE_SITTER, 1.2)


def test_support_surface_contains_slice_sphere():
    sup = sf.support_surface(ANTI_DE_SITTER, 1.4)
    R = sup.slice_radius
    x = np.array([[0.0], [R], [0.0], [0.0]])
    assert abs(sup.residual(x)[0]) < 1e-14


def test_degenerate_immersions_are_rejected():
    with pytest.raises(sf.DegenerateSurfaceError):
        sf.build_mesh(shapes.sphere(MINKOWSKI, 0.0), 6)
    with pytest.raises(ValueError):
        sf.build_mesh(shapes.sphere(MINKOWSKI, 1.0), 1)


def test_spectral_jets_reproduce_analytic_jets():
    mesh = sf.build_mesh(shapes.cap(MINKOWSKI, 0.75, bump=0.3), 16)
    grid = sf.SpectralGrid.for_mesh(mesh)
    dX, ddX = grid.jets(mesh.X)
    assert np.max(np.abs(dX - mesh.dX)) < 1e-9
    assert np.max(np.abs(ddX - mesh.ddX)) < 1e-7
    assert np.max(np.abs(grid.to_edge(mesh.X) - mesh.boundary.X)) < 1e-11


def test_random_graphs_are_spacelike():
    for seed in range(5):
        mesh = sf.build_mesh(shapes.random_graph(seed), 8)
        assert np.all(mesh.weights > 0)


def test_mesh_dump(tmp_path):
    mesh = sf.build_mesh(shapes.sphere(MINKOWSKI, 1.0), 4)
    path = tmp_path / "mesh.csv"
    sf.dump_mesh_csv(mesh, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["u1", "u2", "x0", "x1", "x2", "x3", "weight"]
    assert len(rows) == mesh.size + 1
