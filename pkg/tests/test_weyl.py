import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_genlaguerre

from oracles import gaussian_weyl_diagonal, hermite_function, rep_oracle_1d
from weyl_lab import experiments as ex
from weyl_lab import measure as msr
from weyl_lab import surface as sf
from weyl_lab import weyl
from weyl_lab.errors import CapacityError, PreconditionError, ValidationError
from weyl_lab.hermite import CONVERGES, basis_enumerate

coord = st.floats(-1.5, 1.5)


@given(coord, coord)
def test_rep_matrix_is_displacement(x, y):
    basis = basis_enumerate(1, 10)
    R = weyl.rep_matrix([x], [y], basis)
    assert np.abs(R.entries - rep_oracle_1d(x, y, 11)).max() < 1e-12
    assert R.provenance == "representation"
    assert R.meta["unitarity_defect"] < 1e-12


def test_rep_matrix_by_direct_integration():
    # <rho(x, y) h_a, h_b> = int e^{pi i (x y + 2 y t)} h_a(t + x) h_b(t) dt on a fine grid
    x, y = 0.45, -0.7
    t = np.linspace(-9.0, 9.0, 40001)
    ph = np.exp(1j * np.pi * (x * y + 2 * y * t))
    ref = np.array([[np.trapezoid(ph * hermite_function(a, t + x) * hermite_function(b, t), t)
                     for a in range(6)] for b in range(6)])
    R = weyl.rep_matrix([x], [y], basis_enumerate(1, 5)).entries
    assert np.abs(R - ref).max() < 1e-10


def test_rep_matrix_tensor_structure():
    basis = basis_enumerate(2, 6)
    x, y = np.array([0.3, -0.8]), np.array([0.5, 0.2])
    R = weyl.rep_matrix(x, y, basis).entries
    D = [rep_oracle_1d(x[j], y[j], 7) for j in range(2)]
    idx = basis.indices
    ref = D[0][np.ix_(idx[:, 0], idx[:, 0])] * D[1][np.ix_(idx[:, 1], idx[:, 1])]
    assert np.abs(R - ref).max() < 1e-12


@given(coord, coord, coord, coord)
def test_group_law(x1, y1, x2, y2):
    big = basis_enumerate(1, 90)
    A = weyl.rep_matrix([x1], [y1], big, check=False).entries
    B = weyl.rep_matrix([x2], [y2], big, check=False).entries
    C = weyl.rep_matrix([x1 + x2], [y1 + y2], big, check=False).entries
    phase = np.exp(1j * np.pi * (x1 * y2 - y1 * x2))
    assert np.abs((A @ B)[:10, :10] - phase * C[:10, :10]).max() < 1e-10


def test_rep_matrix_input_checks():
    basis = basis_enumerate(2, 3)
    with pytest.raises(ValidationError):
        weyl.rep_matrix([0.1], [0.2], basis)
    with pytest.raises(ValidationError):
        weyl.rep_matrix([0.1, np.inf], [0.2, 0.0], basis)


def test_translation_reach_grows_with_shift():
    reach = [weyl.translation_reach(6, s) for s in (0.0, 0.5, 1.0, 2.0, 3.0)]
    assert reach[0] == 6
    assert reach == sorted(reach)
    F = rep_oracle_1d(2.0 / np.sqrt(np.pi), 0.0, reach[3] + 20)
    assert np.abs(F[reach[3] + 1:, :7]).max() < 1e-13
    assert np.abs(F[reach[3], :7]).max() >= 1e-14


def test_gauss_hermite_weights_integrate_gaussian_moments():
    u, ws = weyl.gauss_hermite(40)
    w = ws * np.exp(-u * u)
    assert w.sum() == pytest.approx(np.sqrt(np.pi), rel=1e-14)
    assert (w * u**2).sum() == pytest.approx(np.sqrt(np.pi) / 2, rel=1e-13)


def test_point_mass_transform_is_representation():
    basis = basis_enumerate(2, 4)
    w = np.array([0.2, -0.4, 0.6, 0.1])
    A = weyl.weyl_of_measure(msr.point_mass(w, 2.5), basis)
    R = weyl.rep_matrix(w[:2], w[2:], basis)
    assert np.abs(A.entries - 2.5 * R.entries).max() < 1e-14
    assert A.provenance == "measure-quadrature"
    with pytest.raises(ValidationError):
        weyl.weyl_of_measure(msr.point_mass([0.0, 0.0]), basis)


def test_gaussian_transform_closed_form():
    A = weyl.weyl_of_function(ex.gaussian, basis_enumerate(1, 8), weyl.Grid(5.0, 0.1), check=False)
    assert np.abs(np.diag(A.entries) - gaussian_weyl_diagonal(8)).max() < 1e-12
    assert np.abs(A.entries - np.diag(np.diag(A.entries))).max() < 1e-12


def test_weyl_of_function_from_samples_and_aliasing_guard():
    from weyl_lab.errors import AccuracyError

    grid = weyl.Grid(5.0, 0.1)
    basis = basis_enumerate(1, 4)
    samples = ex.gaussian(grid.points(2))
    A = weyl.weyl_of_function(samples, basis, grid)
    assert np.abs(np.diag(A.entries) - gaussian_weyl_diagonal(4)).max() < 1e-12
    with pytest.raises(ValidationError):
        weyl.weyl_of_function(samples[:-1], basis, grid)
    with pytest.raises(AccuracyError):
        weyl.weyl_of_function(lambda w: np.exp(-np.pi * (w**2).sum(-1) / 0.01), basis, weyl.Grid(1.0, 0.25))


def test_fourier_conjugation():
    basis = basis_enumerate(1, 8)
    mu = msr.SmoothMeasure(sf.mesh_surface(sf.ellipsoid([1.0, 0.6]), 256))
    assert weyl.fourier_conjugation_check(mu, basis) < 1e-10
    atoms = msr.atomic_measure([[0.3, 0.1], [-0.2, 0.5]], [1.0, 1j])
    assert weyl.fourier_conjugation_check(atoms, basis, interior=True) < 1e-12


def test_fourier_matrix_diagonal():
    f = weyl.fourier_matrix(basis_enumerate(2, 3))
    assert set(np.round(f, 12).tolist()) == {1, -1j, -1, 1j}


@pytest.mark.parametrize("n,r", [(1, 1.0), (2, 0.5), (3, 1.3)])
def test_sphere_eigenvalues_laguerre(n, r):
    from math import comb

    lam = weyl.sphere_eigenvalues(n, r, 30)
    x = np.pi * r * r
    ref = [eval_genlaguerre(k, n - 1, x) * np.exp(-x / 2) / comb(k + n - 1, n - 1) for k in range(31)]
    np.testing.assert_allclose(lam, ref, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("n,r", [(1, 1.0), (2, 0.5)])
def test_quadrature_matches_closed_form_block_structure(n, r):
    summary = ex.block_structure(n, r, K=8)
    assert summary["offdiag_max"] < 1e-12
    assert summary["stratum_spread"] < 1e-12
    assert summary["closed_form_error"] < 1e-10
    assert summary["c"] == pytest.approx(np.pi, rel=1e-9)


def test_calibration_preconditions():
    with pytest.raises(PreconditionError):
        weyl.calibrate_normalization(1, 1.0, basis_enumerate(1, 4))
    with pytest.raises(ValidationError):
        weyl.calibrate_normalization(2, 1.0, basis_enumerate(1, 8))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_closed_form_envelope(n):
    report = weyl.sphere_weyl_closed_form(n, 1.0, 20_000)
    assert report.envelope_fit.exponent == pytest.approx(-(2 * n - 1) / 4, abs=0.01)
    assert report.critical_p == pytest.approx(4 * n / (2 * n - 1), abs=0.05)
    assert np.all(np.diff(report.singular_values) <= 0)


def test_spectrum_report_on_dense_operator():
    basis = basis_enumerate(1, 40)
    lam = weyl.sphere_eigenvalues(1, 1.0, 40)
    A = weyl.OperatorMatrix(basis, np.diag(lam), "closed-form")
    rep = weyl.spectrum_report(A)
    np.testing.assert_allclose(rep.stratum_means, np.abs(lam), atol=1e-15)
    np.testing.assert_allclose(np.sort(rep.singular_values), np.sort(np.abs(lam)), atol=1e-15)


def test_schatten_norm_values():
    s = np.array([3.0, 4.0])
    assert weyl.schatten_norm(s, 2).value == pytest.approx(5.0)
    assert weyl.schatten_norm(s, 1, multiplicities=[2, 1]).value == pytest.approx(10.0)
    with pytest.raises(ValidationError):
        weyl.schatten_norm(s, 0)
    rep = weyl.sphere_weyl_closed_form(1, 1.0, 10_000)
    assert weyl.schatten_norm(rep, 2.0).tail_flag  # divergent tail
    low = weyl.schatten_norm(rep, 12.0)
    assert not low.tail_flag and low.tail_estimate < 1e-6


def test_schatten_partial_sum_trend():
    conv = weyl.schatten_partial_sums(1, 1.0, 5.0, (10**3, 10**4, 10**5))
    div = weyl.schatten_partial_sums(1, 1.0, 3.5, (10**3, 10**4, 10**5))
    assert not conv.divergent and div.divergent
    # increments per decade shrink for a convergent tail and grow for a divergent one
    dc, dd = np.diff(conv.partial_sums), np.diff(div.partial_sums)
    assert dc[1] < dc[0] and dd[1] > dd[0]


def test_oscillator_composition():
    basis = basis_enumerate(1, 10)
    A = weyl.OperatorMatrix(basis, np.eye(basis.size), "closed-form")
    with pytest.raises(PreconditionError):
        weyl.compose_with_oscillator(A)
    B = weyl.compose_with_oscillator(A, basis.with_calibration(np.pi))
    np.testing.assert_array_equal(np.diag(B.entries).real, 2 * np.arange(11) + 1)
    fit = weyl.oscillator_composite_trend(1, 1.0, 20_000)
    assert fit.exponent == pytest.approx(0.75, abs=0.01)
    assert weyl.calibrated_basis(1, 8).calibration == pytest.approx(np.pi)


def test_operator_matrix_validation_and_algebra():
    basis = basis_enumerate(1, 2)
    with pytest.raises(ValidationError):
        weyl.OperatorMatrix(basis, np.eye(2), "closed-form")
    with pytest.raises(ValidationError):
        weyl.OperatorMatrix(basis, np.eye(3), "guesswork")
    A = weyl.OperatorMatrix(basis, np.eye(3), "closed-form")
    assert (2 * A - A).hs_norm() == pytest.approx(np.sqrt(3))
    assert (A + A).provenance == "derived"
    with pytest.raises(ValidationError):
        A + weyl.OperatorMatrix(basis_enumerate(1, 3), np.eye(4), "closed-form")


def test_singular_values_limits():
    with pytest.raises(ValidationError):
        weyl.singular_values(np.full((2, 2), np.nan))
    with pytest.raises(CapacityError):
        weyl.singular_values(np.zeros((weyl.MAX_SVD_SIZE + 1, 1)))


def test_kernel_route_matches_measure_route_small():
    summary = ex.kernel_routes(K=2)
    assert summary["max_entry_difference"] < 1e-6
    assert summary["hermiticity_defect_kernel"] < 1e-12


def test_classifier_verdict_for_fitted_exponent():
    rep = weyl.sphere_weyl_closed_form(2, 1.0, 20_000)
    from weyl_lab.hermite import schatten_tail_classifier

    assert schatten_tail_classifier(1, rep.envelope_fit.exponent, 3.0).verdict == CONVERGES
