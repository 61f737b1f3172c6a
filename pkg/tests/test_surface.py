import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import ellipe, ellipeinc, ellipkinc

from oracles import ellipsoid_gauss_curvature
from weyl_lab import surface as sf
from weyl_lab.errors import (RegularityError, SingularityError, TracingError, TransversalityError,
                             ValidationError)


def ellipsoid_area(a, b, c):
    a, b, c = sorted([a, b, c], reverse=True)
    phi = np.arccos(c / a)
    m = a * a * (b * b - c * c) / (b * b * (a * a - c * c))
    return 2 * np.pi * c * c + 2 * np.pi * a * b / np.sin(phi) * (
        ellipeinc(phi, m) * np.sin(phi) ** 2 + ellipkinc(phi, m) * np.cos(phi) ** 2)


@pytest.mark.parametrize("dim,r,area", [(2, 1.7, 2 * np.pi * 1.7), (3, 0.8, 4 * np.pi * 0.64),
                                        (4, 1.3, 2 * np.pi**2 * 1.3**3)])
def test_sphere_mesh_area(dim, r, area):
    rule = sf.mesh_surface(sf.sphere(dim, r), 16)
    assert rule.total == pytest.approx(area, rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(rule.nodes, axis=1), r, rtol=1e-14)
    # inward normals
    np.testing.assert_allclose(rule.normals, -rule.nodes / r, atol=1e-14)


def test_ellipse_perimeter():
    rule = sf.mesh_surface(sf.ellipsoid([1.0, 0.6]), 512)
    assert rule.total == pytest.approx(4.0 * ellipe(1.0 - 0.36), rel=1e-9)


def test_ellipsoid_area_converges():
    ref = ellipsoid_area(1.0, 0.7, 1.3)
    rule = sf.mesh_surface(sf.ellipsoid([1.0, 0.7, 1.3]), 64)
    assert rule.total == pytest.approx(ref, rel=1e-9)
    assert np.abs(sf.ellipsoid([1.0, 0.7, 1.3]).q(rule.nodes)).max() < sf.NODE_TOL


def trig_curve_length():
    """cos 2 pi x + cos 2 pi y = 1 has eight congruent arcs between the
    diagonal point (1/6, 1/6) and (1/4, 0); integrate one as a graph x(y)."""

    def speed(y):
        x = np.arccos(1.0 - np.cos(2 * np.pi * y)) / (2 * np.pi)
        dxdy = -np.sin(2 * np.pi * y) / np.sin(2 * np.pi * x)
        return np.hypot(1.0, dxdy)

    return 8.0 * quad(speed, 0.0, 1.0 / 6.0, epsabs=1e-14, epsrel=1e-14)[0]


def test_trig_curve_perimeter():
    s = sf.trig_level_surface(1)
    ref = trig_curve_length()
    errs = [abs(sf.mesh_surface(s, res).total - ref) for res in (256, 512)]
    assert errs[1] < 1e-8
    assert errs[1] < errs[0] / 8  # at least third order
    assert np.abs(s.q(sf.mesh_surface(s, 256).nodes)).max() < sf.NODE_TOL


def test_trig_surface_only_low_dimensions():
    from weyl_lab.errors import CapacityError

    with pytest.raises(CapacityError):
        sf.trig_level_surface(3)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_sphere_directions_solid_angle(dim):
    dirs, w = sf.sphere_directions(dim, 12)
    total = {2: 2 * np.pi, 3: 4 * np.pi, 4: 2 * np.pi**2}[dim]
    assert w.sum() == pytest.approx(total, rel=1e-13)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, rtol=1e-14)
    # second moments are isotropic
    M = (dirs * w[:, None]).T @ dirs / w.sum()
    np.testing.assert_allclose(M, np.eye(dim) / dim, atol=1e-13)


def test_seed_must_lie_on_surface():
    with pytest.raises(ValidationError):
        sf.ImplicitSurface(2, lambda w: np.sum(w**2, axis=-1) - 1.0, lambda w: 2 * w,
                           lambda w: 2 * np.eye(2), np.array([0.5, 0.0]), np.array([[-2, -2], [2, 2.0]]))


def test_singular_gradient_detected():
    s = sf.sphere(3)
    with pytest.raises(SingularityError):
        s.inward_normal(np.zeros(3))


def test_ray_solve_hits_sphere(rng):
    s = sf.sphere(3, 1.4)
    dirs = rng.normal(size=(50, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = sf.ray_solve(s.level_fn, s.grad_fn, np.zeros(3), dirs, 5.0)
    np.testing.assert_allclose(r, 1.4, rtol=1e-14)


def test_ray_solve_errors():
    s = sf.sphere(2)
    with pytest.raises(ValidationError):
        sf.ray_solve(s.level_fn, s.grad_fn, np.array([2.0, 0.0]), np.array([[1.0, 0.0]]), 5.0)
    with pytest.raises(TracingError):
        sf.ray_solve(s.level_fn, s.grad_fn, np.zeros(2), np.array([[1.0, 0.0]]), 0.5)


@given(st.floats(-1.0, 1.0), st.floats(0.0, 2 * np.pi))
def test_ellipsoid_gauss_curvature_closed_form(z, phi):
    axes = np.array([1.0, 0.7, 1.3])
    rho = np.sqrt(1.0 - z * z)
    w = axes * np.array([rho * np.cos(phi), rho * np.sin(phi), z])
    K, k = sf.gaussian_curvature(sf.ellipsoid(axes), w)
    assert K == pytest.approx(ellipsoid_gauss_curvature(axes, w), rel=1e-10)
    assert k[0] > 0


def test_sphere_principal_curvatures():
    K, k = sf.gaussian_curvature(sf.sphere(4, 2.0), np.array([0.0, 2.0, 0.0, 0.0]))
    np.testing.assert_allclose(k, 0.5, rtol=1e-13)
    assert K == pytest.approx(0.125)


def test_second_fundamental_form_requires_tangent():
    s = sf.sphere(3)
    w = np.array([1.0, 0.0, 0.0])
    assert sf.second_fundamental_form(s, w, [0, 1.0, 0], [0, 1.0, 0]) == pytest.approx(2.0 / 2.0)
    with pytest.raises(ValidationError):
        sf.second_fundamental_form(s, w, [1.0, 0, 0], [0, 1.0, 0])
    with pytest.raises(ValidationError):
        sf.gaussian_curvature(s, np.array([0.5, 0.0, 0.0]))


def test_plane_requires_orthonormal_frame():
    with pytest.raises(ValidationError):
        sf.Plane(np.zeros(3), np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]))
    p = sf.Plane.from_normal([0.0, 0.0, 2.0], 0.3)
    np.testing.assert_allclose(p.to_ambient([0.1, -0.2]) @ [0, 0, 1.0], 0.3)


def test_curvature_identity_on_ellipsoid():
    s = sf.ellipsoid([1.0, 0.7, 1.3])
    for i, plane in enumerate(sf.random_transversal_planes(s, 4, seed=3)):
        err, ratio = sf.slice_curvature_check(s, plane, 6, seed=i)
        assert err < 1e-6
        assert ratio >= 1.0 - 1e-8


def test_curvature_identity_in_four_dimensions_codim_two():
    s = sf.ellipsoid([1.0, 0.8, 1.2, 0.9])
    plane = sf.random_transversal_planes(s, 1, seed=5, codim=2)[0]
    err, ratio = sf.slice_curvature_check(s, plane, 4)
    assert err < 1e-6 and ratio >= 1.0 - 1e-8


def test_plane_missing_surface_is_rejected():
    s = sf.sphere(3)
    with pytest.raises(TransversalityError):
        sf.slice_curvature_check(s, sf.Plane.from_normal([0, 0, 1.0], 1.5), 4)


def test_projection_regularity_on_sphere():
    s = sf.sphere(4)
    # at (1, 0, 0, 0) the tangent space is e2, e3, e4
    s1, s2 = sf.projection_regularity(s, np.array([1.0, 0.0, 0.0, 0.0]))
    assert s1 == pytest.approx(0.0, abs=1e-14)
    assert s2 == pytest.approx(1.0)
    w = np.array([1.0, 0.0, 1.0, 0.0]) / np.sqrt(2.0)
    assert min(sf.projection_regularity(s, w)) == pytest.approx(1 / np.sqrt(2.0))
    with pytest.raises(ValidationError):
        sf.projection_regularity(sf.sphere(3), np.array([1.0, 0, 0]))


def test_slice_of_sphere_is_sphere():
    s = sf.sphere(4)
    x = np.array([0.3, -0.2])
    rule = sf.slice_surface(s, x, 64)
    rho = np.sqrt(1.0 - x @ x)
    np.testing.assert_allclose(np.linalg.norm(rule.nodes[:, 2:], axis=1), rho, rtol=1e-13)
    np.testing.assert_allclose(rule.nodes[:, :2], np.broadcast_to(x, (len(rule), 2)))
    assert rule.total == pytest.approx(2 * np.pi * rho, rel=1e-12)
    # J_{Pi_1} = |grad_y q| / |grad q| = rho on the unit sphere
    np.testing.assert_allclose(rule.annotations["jacobian"], rho, rtol=1e-12)
    np.testing.assert_allclose(sf.slice_gaussian_curvatures(s, x, 16), 1.0 / rho, rtol=1e-10)


def test_slice_outside_projection_is_empty_and_rim_is_singular():
    s = sf.sphere(4)
    assert len(sf.slice_surface(s, np.array([1.2, 0.0]), 16)) == 0
    with pytest.raises(RegularityError):
        sf.slice_surface(s, np.array([1.0 - 1e-14, 0.0]), 16)


def test_slice_batch_matches_single_slices():
    s = sf.ellipsoid([1.0, 0.8, 1.2, 0.9])
    xs = np.array([[0.1, 0.2], [-0.4, 0.1], [0.0, 0.0]])
    batch = sf.slice_batch(s, xs, 32)
    for i, x in enumerate(xs):
        single = sf.slice_surface(s, x, 32)
        np.testing.assert_allclose(batch.rule(i).nodes, single.nodes)
        np.testing.assert_allclose(batch.rule(i).weights, single.weights)
    assert np.array_equal(np.bincount(batch.owner), np.diff(batch.offsets))


def test_projected_region_radius_sphere():
    assert sf.projected_region_radius(sf.sphere(4), np.array([1.0, 0.0])) == pytest.approx(1.0, abs=1e-9)
