import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import modalpf as m
from conftest import random_factorization, random_system


def test_ex1_eigenvalues_and_ordering(ex1):
    basis = m.eigendecompose(ex1)
    expected = np.array([-0.50 + 4.97j, -0.50 - 4.97j, 0.0, -1.00])
    assert np.max(np.abs(basis.eigenvalues - expected)) < 0.01


def test_references_are_unit_norm_and_phase_fixed(ex1):
    basis = m.eigendecompose(ex1)
    for i in range(4):
        assert np.linalg.norm(basis.phi_hat[:, i], basis.norm_ord) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(basis.psi_hat[i, :], basis.norm_ord) == pytest.approx(1.0, abs=1e-12)
        pivot = basis.phi_hat[int(np.argmax(np.abs(basis.phi_hat[:, i]))), i]
        assert pivot.imag == pytest.approx(0.0, abs=1e-12)
        assert pivot.real > 0


def test_two_norm_references_available(ex1):
    basis = m.eigendecompose(ex1, norm_ord=2)
    for i in range(4):
        assert np.linalg.norm(basis.phi_hat[:, i], 2) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(basis.psi_hat[i, :], 2) == pytest.approx(1.0, abs=1e-12)


def test_eigenvector_residuals_and_biorthogonality(ex1):
    basis = m.eigendecompose(ex1)
    scale = np.linalg.norm(ex1.A, 2)
    for i in range(4):
        lam = basis.eigenvalues[i]
        assert np.linalg.norm(ex1.A @ basis.phi_hat[:, i] - lam * basis.phi_hat[:, i]) <= 1e-9 * scale
        assert np.linalg.norm(basis.psi_hat[i, :] @ ex1.A - lam * basis.psi_hat[i, :]) <= 1e-9 * scale
        for j in range(4):
            if i != j:
                assert abs(basis.psi_hat[i, :] @ basis.phi_hat[:, j]) <= 1e-9


def test_conjugate_pairs_carry_conjugate_references(ex1):
    basis = m.eigendecompose(ex1)
    assert basis.conjugate_partner(0) == 1
    np.testing.assert_array_equal(basis.phi_hat[:, 1], np.conj(basis.phi_hat[:, 0]))
    np.testing.assert_array_equal(basis.psi_hat[1, :], np.conj(basis.psi_hat[0, :]))


def test_eigendecompose_is_deterministic(ex1):
    a = m.eigendecompose(ex1)
    b = m.eigendecompose(ex1)
    assert np.max(np.abs(a.phi_hat - b.phi_hat)) < 1e-10
    assert np.max(np.abs(a.psi_hat - b.psi_hat)) < 1e-10


def test_descending_sort_puts_larger_real_eigenvalue_first():
    sys = m.PolynomialSystem(n=2, A=np.diag([2.0, 1.0]), tensors={})
    basis = m.eigendecompose(sys)
    np.testing.assert_allclose(basis.eigenvalues, [2.0, 1.0])
    np.testing.assert_allclose(basis.phi_hat, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(basis.psi_hat, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(basis.cos_delta, [1.0, 1.0], atol=1e-14)


def test_repeated_eigenvalue_raises_strong_resonance():
    sys = m.PolynomialSystem(n=2, A=np.eye(2), tensors={})
    with pytest.raises(m.StrongResonanceError):
        m.eigendecompose(sys)


def test_scheme_factors_match_reference_table(ex1):
    basis = m.eigendecompose(ex1)
    b1 = m.apply_scheme(basis, "I")
    np.testing.assert_allclose(np.abs(b1.theta), [0.138, 0.138, 0.250, 0.250], atol=1e-3)
    np.testing.assert_allclose(b1.sigma, np.ones(4))
    np.testing.assert_allclose(b1.xi, np.ones(4))
    b2 = m.apply_scheme(basis, "II")
    np.testing.assert_allclose(np.abs(b2.xi), [7.236, 7.236, 4.000, 4.000], atol=1e-3)
    np.testing.assert_allclose(b2.theta, np.ones(4), atol=1e-12)
    b3 = m.apply_scheme(basis, "III")
    np.testing.assert_allclose(b3.sigma, b2.xi)
    np.testing.assert_allclose(b3.theta, np.ones(4), atol=1e-12)


def test_schemes_are_identity_for_decoupled_states():
    sys = m.PolynomialSystem(n=2, A=np.diag([2.0, 1.0]), tensors={})
    for scheme in ("I", "II", "III"):
        b = m.apply_scheme(m.eigendecompose(sys), scheme)
        np.testing.assert_allclose(b.sigma, [1, 1], atol=1e-14)
        np.testing.assert_allclose(b.xi, [1, 1], atol=1e-14)
        np.testing.assert_allclose(b.theta, [1, 1], atol=1e-14)


def test_degenerate_mode_guard():
    basis = m.eigendecompose(m.PolynomialSystem(n=2, A=np.diag([2.0, 1.0]), tensors={}))
    from dataclasses import replace

    crippled = replace(basis, cos_delta=np.array([1.0, 1e-13], dtype=complex))
    with pytest.raises(m.DegenerateModeError):
        m.apply_scheme(crippled, "II")
    with pytest.raises(m.DegenerateModeError):
        m.apply_scheme(crippled, "III")


def test_extract_scaling_identity(ex1):
    basis = m.eigendecompose(ex1)
    sigma, xi, theta = m.extract_scaling(basis, basis.phi_hat, basis.psi_hat)
    np.testing.assert_allclose(sigma, np.ones(4), atol=1e-12)
    np.testing.assert_allclose(xi, np.ones(4), atol=1e-12)
    np.testing.assert_allclose(theta, basis.cos_delta, atol=1e-12)


def test_extract_scaling_constructed_column(ex1):
    basis = m.eigendecompose(ex1)
    Phi = basis.phi_hat.copy()
    Phi[:, 0] *= 2j
    sigma, xi, theta = m.extract_scaling(basis, Phi, basis.psi_hat)
    assert sigma[0] == pytest.approx(2j, abs=1e-12)
    assert theta[0] == pytest.approx(2j * basis.cos_delta[0], abs=1e-12)


def test_extract_scaling_recovers_scheme_two(ex1):
    basis = m.eigendecompose(ex1)
    b2 = m.apply_scheme(basis, "II")
    sigma, xi, theta = m.extract_scaling(basis, b2.Phi, b2.Psi)
    assert abs(xi[0]) == pytest.approx(7.236, abs=1e-3)
    np.testing.assert_allclose(theta, np.ones(4), atol=1e-10)


def test_extract_scaling_rejects_non_eigenvector(ex1):
    basis = m.eigendecompose(ex1)
    Phi = basis.phi_hat.copy()
    Phi[:, 2] = np.array([1.0, -1.0, 0.5, 0.25])
    with pytest.raises(m.NotAnEigenvectorError):
        m.extract_scaling(basis, Phi, basis.psi_hat)


def test_extract_applied_scaling_roundtrip():
    rng = np.random.default_rng(11)
    for trial in range(20):
        sys = random_system(rng, int(rng.integers(2, 6)), max_order=1)
        basis = m.eigendecompose(sys)
        sigma = rng.standard_normal(basis.n) + 1j * rng.standard_normal(basis.n)
        xi = rng.standard_normal(basis.n) + 1j * rng.standard_normal(basis.n)
        sigma[np.abs(sigma) < 0.1] += 0.5
        xi[np.abs(xi) < 0.1] += 0.5
        scaled = m.apply_scaling(basis, sigma, xi)
        s2, x2, t2 = m.extract_scaling(basis, scaled.Phi, scaled.Psi)
        np.testing.assert_allclose(s2, sigma, rtol=1e-10)
        np.testing.assert_allclose(x2, xi, rtol=1e-10)
        np.testing.assert_allclose(t2, sigma * xi * basis.cos_delta, rtol=1e-9)


def test_linear_pf_column_sums_equal_theta(ex1):
    rng = np.random.default_rng(5)
    basis = m.eigendecompose(ex1)
    theta = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    sigma, xi = random_factorization(rng, basis, theta)
    scaled = m.apply_scaling(basis, sigma, xi)
    P = m.linear_pf(scaled.Phi, scaled.Psi)
    np.testing.assert_allclose(P.sum(axis=0), scaled.theta, atol=1e-10)


def test_resonance_scan_ex1(ex1):
    basis = m.eigendecompose(ex1)
    rs = m.detect_resonances(basis.eigenvalues, 2, tol=1e-6)
    found = {(tuple(a + 1 for a in t), i + 1) for t, i in rs.tuples}
    assert found == {((1, 2), 4), ((1, 3), 1), ((2, 3), 2), ((3, 3), 3), ((3, 4), 4)}


def test_resonance_scan_empty_for_separated_reals():
    rs = m.detect_resonances(np.array([-1.0, -2.5]), 2, tol=1e-6)
    assert rs.tuples == ()
    # (-1, -2) is NOT resonance-free: -1 + -1 hits -2 exactly
    rs = m.detect_resonances(np.array([-1.0, -2.0]), 2, tol=1e-6)
    assert rs.tuples == (((0, 0), 1),)


def test_zero_eigenvalue_gives_identity_resonances(ex1):
    # lambda_z + lambda_i = lambda_i for the zero mode z, for every target i
    basis = m.eigendecompose(ex1)
    z = int(np.argmin(np.abs(basis.eigenvalues)))
    rs = m.detect_resonances(basis.eigenvalues, 2)
    found = set(rs.tuples)
    for i in range(4):
        assert (tuple(sorted((z, i))), i) in found


def test_resonance_boundary_behavior():
    # defect just above the tolerance stays non-resonant
    lam = np.array([1.0, 2.0 + 1.01e-6])
    rs = m.detect_resonances(lam, 2, tol=1e-6)
    assert (((0, 0), 1)) not in rs.tuples
    lam = np.array([1.0, 2.0 + 0.99e-6])
    rs = m.detect_resonances(lam, 2, tol=1e-6)
    assert (((0, 0), 1)) in rs.tuples


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=2, max_size=5))
@settings(max_examples=50, deadline=None)
def test_detected_tuples_are_canonical_and_within_tolerance(lams):
    lam = np.array(lams, dtype=complex)
    if np.max(np.abs(lam)) == 0:
        return
    rs = m.detect_resonances(lam, 2)
    for t, i in rs.tuples:
        assert t == tuple(sorted(t))
        assert abs(lam[list(t)].sum() - lam[i]) <= rs.tolerance
