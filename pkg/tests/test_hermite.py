import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_genlaguerre

from oracles import hermite_function
from weyl_lab import hermite as hm
from weyl_lab.errors import CapacityError, ValidationError


@pytest.mark.parametrize("m", [0, 1, 2, 5, 17, 40])
def test_hermite_matches_scipy(m):
    s = np.linspace(-3.0, 3.0, 101)
    np.testing.assert_allclose(hm.hermite_eval(m, s), hermite_function(m, s), atol=1e-12)


def test_hermite_orthonormal():
    s = np.linspace(-8.0, 8.0, 8001)
    H = hm.hermite_functions(30, s)
    G = (H * (s[1] - s[0])) @ H.T
    assert np.abs(G - np.eye(31)).max() < 1e-12


def test_hermite_high_order_no_overflow():
    s = np.array([0.0, 5.0, 30.0, 60.0])
    vals = hm.hermite_functions(5000, s)
    assert np.all(np.isfinite(vals))
    # far outside the oscillatory region everything underflows to zero
    assert abs(vals[5000, 3]) < 1e-300


def test_hermite_rejects_bad_input():
    with pytest.raises(ValidationError):
        hm.hermite_eval(-1, 0.0)
    with pytest.raises(ValidationError):
        hm.hermite_eval(hm.MAX_HERMITE_ORDER + 1, 0.0)
    with pytest.raises(ValidationError):
        hm.hermite_eval(3, np.nan)


@pytest.mark.parametrize("a", [0, 1, 2, 5])
@pytest.mark.parametrize("x", [0.0, 0.7, np.pi, 12.0])
def test_laguerre_matches_scipy(a, x):
    seq = hm.laguerre_sequence(40, a, x)
    ref = eval_genlaguerre(np.arange(41), a, x)
    np.testing.assert_allclose(seq, ref, rtol=1e-10, atol=1e-12)
    assert hm.laguerre_eval(7, a, x) == pytest.approx(float(eval_genlaguerre(7, a, x)), rel=1e-12, abs=1e-14)


def test_laguerre_functions_stay_bounded_at_large_degree():
    x = 400.0
    seq = hm.laguerre_sequence(200_000, 2, x, -x / 2)
    assert np.all(np.isfinite(seq))
    # |L_k^{(a)}(x) e^{-x/2}| <= binom(k + a, k)
    k = np.arange(len(seq))
    assert np.all(np.abs(seq) <= (k + 1.0) * (k + 2.0) / 2.0 * (1 + 1e-9))


def test_laguerre_rejects_negative_type():
    with pytest.raises(ValidationError):
        hm.laguerre_eval(3, -1.0, 1.0)


@pytest.mark.parametrize("n,K", [(1, 5), (2, 4), (3, 3), (4, 2)])
def test_basis_enumeration_graded_lex(n, K):
    basis = hm.basis_enumerate(n, K)
    ref = sorted((a for a in itertools.product(range(K + 1), repeat=n) if sum(a) <= K), key=lambda a: (sum(a), a))
    assert [tuple(r) for r in basis.indices] == ref
    assert basis.size == comb(K + n, n)
    for k in range(K + 1):
        assert np.all(basis.degrees[basis.stratum(k)] == k)
        assert basis.stratum(k).stop - basis.stratum(k).start == comb(k + n - 1, n - 1)


def test_basis_position_and_interior():
    basis = hm.basis_enumerate(2, 6)
    for i, a in enumerate(basis.indices):
        assert basis.position(a) == i
    with pytest.raises(KeyError):
        basis.position([7, 0])
    assert basis.interior().sum() == comb(3 + 2, 2)
    assert basis.with_calibration(np.pi).calibration == np.pi


def test_basis_limits():
    with pytest.raises(ValidationError):
        hm.basis_enumerate(0, 3)
    with pytest.raises(CapacityError):
        hm.basis_enumerate(6, 40)


@given(st.integers(1, 8), st.integers(0, 200))
def test_multiplicity_is_binomial(n, k):
    assert hm.multiplicity(k, n) == pytest.approx(comb(k + n - 1, n - 1), rel=1e-12)


def test_oscillator_spectrum():
    spec = hm.oscillator_spectrum(3, 4)
    np.testing.assert_array_equal(spec.eigenvalues, [3, 5, 7, 9, 11])
    np.testing.assert_array_equal(spec.multiplicities, [1, 3, 6, 10, 15])


@given(st.integers(0, 6), st.floats(-3.0, -0.05), st.floats(0.1, 20.0))
def test_tail_classifier_rule(d, e, p):
    verdict = hm.schatten_tail_classifier(d, e, p)
    gap = d + e * p + 1.0
    if abs(gap) > 1e-9:
        assert (verdict.verdict == hm.CONVERGES) == (gap < 0)
    assert verdict.critical_p == pytest.approx(-(1.0 + d) / e)


def test_tail_classifier_boundary_is_divergent():
    assert hm.schatten_tail_classifier(1, -0.75, 8.0 / 3.0).verdict == hm.DIVERGES
    with pytest.raises(ValidationError):
        hm.schatten_tail_classifier(1, 0.25, 2.0)


@given(st.integers(1, 6), st.floats(0.05, 10.0))
def test_oscillator_inverse_schatten_threshold(n, p):
    res = hm.oscillator_inverse_schatten(n, 50, p)
    if abs(p - n) > 1e-9:
        assert (res.verdict == hm.CONVERGES) == (p > n)
    assert res.partial_sum > 0


def test_oscillator_inverse_partial_sum_exact():
    # n = 1: sum_k (2k + 1)^{-2}
    k = np.arange(11)
    assert hm.oscillator_inverse_schatten(1, 10, 2.0).partial_sum == pytest.approx(np.sum((2 * k + 1.0) ** -2))
    with pytest.raises(ValidationError):
        hm.oscillator_inverse_schatten(1, 10, 0.0)
