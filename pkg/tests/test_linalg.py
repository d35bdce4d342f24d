import numpy as np
import numpy.testing as npt
import pytest

from geomdmr.exceptions import (
    DegenerateDiagonalError,
    NotPositiveDefiniteError,
    ValidationError,
)
from geomdmr.linalg import (
    as_correlation,
    as_spd,
    cholesky,
    is_spd,
    normalize_to_correlation,
    pd_tolerance,
    sym_eigen,
    symmetrize,
    whiten,
)

from conftest import make_spd


class TestCholesky:
    def test_identity(self):
        npt.assert_array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        npt.assert_allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_reconstruction(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        l = cholesky(a)
        npt.assert_allclose(l @ l.T, a, atol=1e-12)
        assert np.all(np.diag(l) > 0)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_pivot_floor_rejected(self):
        # positive definite but with a pivot below the scale-aware floor
        a = np.diag([1.0, 1e-25])
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(a)

    def test_roundtrip_corpus(self, rng):
        # 200 random SPD matrices across dims 2..20
        for k in range(200):
            n = int(rng.integers(2, 21))
            a = make_spd(rng, n)
            l = cholesky(a)
            resid = np.max(np.abs(l @ l.T - a)) / np.max(np.abs(a))
            assert resid < 1e-10


class TestSymEigen:
    def test_diagonal(self):
        w, q = sym_eigen(np.diag([3.0, 1.0, 2.0]))
        npt.assert_allclose(w, [1.0, 2.0, 3.0])
        # axis-aligned up to sign and permutation
        npt.assert_allclose(np.abs(q), np.eye(3)[:, [1, 2, 0]], atol=1e-12)

    def test_identity(self):
        w, _ = sym_eigen(np.eye(4))
        npt.assert_allclose(w, np.ones(4))

    def test_reconstruction_random(self, rng):
        a = rng.normal(size=(5, 5))
        a = 0.5 * (a + a.T)
        w, q = sym_eigen(a)
        npt.assert_allclose(q @ np.diag(w) @ q.T, a,
                            atol=1e-9 * np.max(np.abs(a)))
        assert np.all(np.diff(w) >= 0)

    def test_orthogonality_corpus(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 21))
            a = make_spd(rng, n)
            _, q = sym_eigen(a)
            assert np.max(np.abs(q.T @ q - np.eye(n))) < 1e-10


class TestWhiten:
    def test_identity_reference(self, rng):
        a = make_spd(rng, 4)
        npt.assert_allclose(whiten(np.eye(4), a), a, atol=1e-12)

    def test_self_whitening_gives_unit_eigenvalues(self, rng):
        a = make_spd(rng, 5)
        w = np.linalg.eigvalsh(whiten(a, a))
        npt.assert_allclose(w, np.ones(5), atol=1e-12)

    def test_scalar_case(self):
        npt.assert_allclose(whiten(np.diag([4.0]), np.diag([8.0])), [[2.0]])

    def test_eigenvalues_match_matrix_sqrt_oracle(self, rng):
        # similar matrices share eigenvalues; the oracle forms b1^-1/2 directly
        b1, b2 = make_spd(rng, 6), make_spd(rng, 6)
        w, q = np.linalg.eigh(b1)
        inv_sqrt = q @ np.diag(1.0 / np.sqrt(w)) @ q.T
        oracle = np.linalg.eigvalsh(inv_sqrt @ b2 @ inv_sqrt)
        ours = np.linalg.eigvalsh(whiten(b1, b2))
        npt.assert_allclose(ours, oracle, rtol=1e-9)

    def test_positive_eigenvalues_corpus(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 11))
            m = whiten(make_spd(rng, n), make_spd(rng, n))
            assert np.linalg.eigvalsh(m)[0] > 0

    def test_dim_mismatch(self, rng):
        with pytest.raises(ValidationError):
            whiten(make_spd(rng, 3), make_spd(rng, 4))


class TestNormalizeToCorrelation:
    def test_correlation_fixed_point(self, rng):
        c = normalize_to_correlation(make_spd(rng, 5))
        npt.assert_allclose(normalize_to_correlation(c), c, atol=1e-14)

    def test_diagonal_to_identity(self):
        npt.assert_array_equal(normalize_to_correlation(np.diag([4.0, 9.0])),
                               np.eye(2))

    def test_two_by_two(self):
        out = normalize_to_correlation(np.array([[4.0, 2.0], [2.0, 4.0]]))
        npt.assert_allclose(out, [[1.0, 0.5], [0.5, 1.0]])

    def test_idempotent_exactly(self, rng):
        for _ in range(20):
            c = normalize_to_correlation(make_spd(rng, int(rng.integers(2, 12))))
            npt.assert_array_equal(normalize_to_correlation(c), c)

    def test_degenerate_diagonal(self):
        with pytest.raises(DegenerateDiagonalError):
            normalize_to_correlation(np.diag([1.0, 0.0]))


class TestIsSpd:
    def test_identity(self):
        assert is_spd(np.eye(3), tol=1e-12)

    def test_indefinite(self):
        assert not is_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), tol=1e-12)

    def test_default_tolerance_scale_aware(self):
        assert is_spd(1e8 * np.eye(3))
        assert pd_tolerance(1e8 * np.eye(3)) > pd_tolerance(np.eye(3))


class TestSymmetrize:
    def test_averages_tiny_asymmetry(self):
        a = np.array([[1.0, 0.5 + 1e-12], [0.5, 1.0]])
        out = symmetrize(a)
        npt.assert_array_equal(out, out.T)

    def test_rejects_gross_asymmetry(self):
        with pytest.raises(ValidationError):
            symmetrize(np.array([[1.0, 0.9], [0.1, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValidationError):
            symmetrize(np.ones((2, 3)))


class TestValidatedConstructors:
    def test_as_spd_cleans_and_checks(self, rng):
        a = make_spd(rng, 4)
        npt.assert_array_equal(as_spd(a), a)
        with pytest.raises(ValidationError):
            as_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_as_correlation_diag_gate(self):
        bad = np.array([[0.9, 0.1], [0.1, 1.0]])
        with pytest.raises(ValidationError):
            as_correlation(bad)

    def test_as_correlation_magnitude_gate(self):
        bad = np.array([[1.0, 1.5], [1.5, 1.0]])
        with pytest.raises(ValidationError):
            as_correlation(bad)

    def test_as_correlation_accepts_roundtrip_noise(self, rng):
        c = normalize_to_correlation(make_spd(rng, 4))
        c2 = c.copy()
        c2[0, 0] = 1.0 + 5e-13
        npt.assert_allclose(as_correlation(c2), c, atol=1e-12)
