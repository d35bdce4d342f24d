import itertools

import numpy as np
import numpy.testing as npt
import pytest

from geomdmr.distances import (
    DistanceMeasure,
    dissimilarity_matrix,
    dist_affine_invariant,
    dist_correlation,
    dist_euclidean,
    dist_sphere,
    vectorize_upper,
)
from geomdmr.exceptions import (
    LengthMismatchError,
    NotPositiveDefiniteError,
    NotUnitVectorError,
    ValidationError,
    ZeroVarianceError,
)

from conftest import make_correlation, make_spd


def geodesic_oracle(b1, b2):
    """Independent route via the explicit matrix square root of b1."""
    w, q = np.linalg.eigh(b1)
    inv_sqrt = q @ np.diag(1.0 / np.sqrt(w)) @ q.T
    sigma = np.linalg.eigvalsh(inv_sqrt @ b2 @ inv_sqrt)
    return np.sqrt(np.sum(np.log(sigma) ** 2))


class TestAffineInvariantDistance:
    def test_identity_pair(self):
        assert dist_affine_invariant(np.eye(3), np.eye(3)) == 0.0

    def test_diagonal_closed_form(self):
        d = dist_affine_invariant(np.eye(2), np.diag([np.e ** 2, np.e ** 2]))
        npt.assert_allclose(d, 2.0 * np.sqrt(2.0), rtol=1e-14)

    def test_scalar_multiple(self, rng):
        a = make_spd(rng, 5)
        for c in (0.5, 2.0, 7.3):
            npt.assert_allclose(dist_affine_invariant(a, c * a),
                                np.sqrt(5) * abs(np.log(c)), rtol=1e-12)

    def test_matches_matrix_sqrt_oracle(self, rng):
        for _ in range(25):
            b1, b2 = make_spd(rng, 4), make_spd(rng, 4)
            npt.assert_allclose(dist_affine_invariant(b1, b2),
                                geodesic_oracle(b1, b2), rtol=1e-9)

    def test_symmetry(self, rng):
        a, b = make_spd(rng, 6), make_spd(rng, 6)
        assert abs(dist_affine_invariant(a, b) - dist_affine_invariant(b, a)) < 1e-12

    def test_affine_invariance(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 11))
            a, b = make_spd(rng, n), make_spd(rng, n)
            m = rng.normal(size=(n, n))
            d0 = dist_affine_invariant(a, b)
            d1 = dist_affine_invariant(m @ a @ m.T, m @ b @ m.T)
            assert abs(d1 - d0) < 1e-8 * (1.0 + d0)

    def test_inversion_invariance(self, rng):
        a, b = make_spd(rng, 5), make_spd(rng, 5)
        d0 = dist_affine_invariant(a, b)
        d1 = dist_affine_invariant(np.linalg.inv(a), np.linalg.inv(b))
        assert abs(d1 - d0) < 1e-8

    def test_not_spd_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            dist_affine_invariant(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))


class TestVectorizeUpper:
    def test_two_by_two(self):
        npt.assert_array_equal(vectorize_upper([[1.0, 0.3], [0.3, 1.0]]), [0.3])

    def test_row_major_order(self):
        c = np.array([[1.0, 0.1, 0.2], [0.1, 1.0, 0.3], [0.2, 0.3, 1.0]])
        npt.assert_array_equal(vectorize_upper(c), [0.1, 0.2, 0.3])

    def test_identity(self):
        npt.assert_array_equal(vectorize_upper(np.eye(4)), np.zeros(6))

    def test_roundtrip_injective(self, rng):
        c = make_correlation(rng, 5)
        v = vectorize_upper(c)
        rebuilt = np.eye(5)
        rebuilt[np.triu_indices(5, 1)] = v
        rebuilt = rebuilt + np.triu(rebuilt, 1).T
        npt.assert_array_equal(vectorize_upper(rebuilt), v)

    def test_rejects_vectors(self):
        with pytest.raises(ValidationError):
            vectorize_upper(np.ones(4))


class TestVectorDistances:
    def test_euclidean_345(self):
        assert dist_euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_euclidean_identity(self, rng):
        u = rng.normal(size=7)
        assert dist_euclidean(u, u) == 0.0

    def test_euclidean_sqrt3(self):
        npt.assert_allclose(dist_euclidean([1.0, 1.0, 1.0], [2.0, 2.0, 2.0]),
                            np.sqrt(3.0))

    def test_euclidean_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            dist_euclidean([1.0], [1.0, 2.0])

    def test_correlation_identical(self):
        assert dist_correlation([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_correlation_anticorrelated(self):
        u = np.array([1.0, 2.0, 3.0])
        npt.assert_allclose(dist_correlation(u, -u + 5.0), 2.0, rtol=1e-12)

    def test_correlation_half(self):
        # Pearson r between (1,2,3) and (1,3,2) is 0.5, so sqrt(2*(1-r)) = 1
        npt.assert_allclose(dist_correlation([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]), 1.0,
                            rtol=1e-12)

    def test_correlation_one_minus_r(self):
        npt.assert_allclose(
            dist_correlation([1.0, 2.0, 3.0], [1.0, 3.0, 2.0], formula="one_minus_r"),
            0.5, rtol=1e-12)

    def test_correlation_constant_vector(self):
        with pytest.raises(ZeroVarianceError):
            dist_correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_sphere_basics(self):
        e1, e2 = np.eye(3)[0], np.eye(3)[1]
        assert dist_sphere(e1, e1) == 0.0
        npt.assert_allclose(dist_sphere(e1, e2), np.pi / 2)
        npt.assert_allclose(dist_sphere(e1, -e1), np.pi)

    def test_sphere_not_unit(self):
        with pytest.raises(NotUnitVectorError):
            dist_sphere([1.0, 1.0, 0.0], [1.0, 0.0, 0.0])


class TestDissimilarityMatrix:
    def test_identical_responses(self, rng):
        c = make_correlation(rng, 4)
        d = dissimilarity_matrix([c, c.copy()], DistanceMeasure("geodesic"))
        npt.assert_array_equal(d, np.zeros((2, 2)))

    def test_one_dimensional_euclidean(self):
        d = dissimilarity_matrix([np.array([0.0]), np.array([1.0]), np.array([3.0])],
                                 DistanceMeasure("euclidean"))
        npt.assert_array_equal(d, [[0, 1, 3], [1, 0, 2], [3, 2, 0]])

    def test_triangle_inequality_geodesic(self, rng):
        mats = [make_spd(rng, 4) for _ in range(5)]
        d = dissimilarity_matrix(mats, DistanceMeasure("geodesic"))
        for i, j, k in itertools.permutations(range(5), 3):
            assert d[i, j] <= d[i, k] + d[k, j] + 1e-9

    def test_triangle_inequality_all_vector_measures(self, rng):
        vecs = [rng.normal(size=6) for _ in range(5)]
        for kind in ("euclidean", "correlation"):
            d = dissimilarity_matrix(vecs, DistanceMeasure(kind))
            for i, j, k in itertools.permutations(range(5), 3):
                assert d[i, j] <= d[i, k] + d[k, j] + 1e-9

    def test_matches_pairwise_function(self, rng):
        mats = [make_correlation(rng, 6) for _ in range(6)]
        d = dissimilarity_matrix(mats, DistanceMeasure("geodesic"))
        for i in range(6):
            for j in range(6):
                expect = dist_affine_invariant(mats[i], mats[j])
                assert abs(d[i, j] - expect) < 1e-12
        vecs = [vectorize_upper(m) for m in mats]
        d = dissimilarity_matrix(vecs, DistanceMeasure("correlation"))
        for i in range(6):
            for j in range(6):
                expect = dist_correlation(vecs[i], vecs[j])
                assert abs(d[i, j] - expect) < 1e-14

    def test_symmetric_zero_diagonal(self, rng):
        mats = [make_spd(rng, 5) for _ in range(4)]
        d = dissimilarity_matrix(mats, DistanceMeasure("geodesic"))
        npt.assert_array_equal(d, d.T)
        npt.assert_array_equal(np.diag(d), np.zeros(4))

    def test_pair_error_carries_index(self):
        vecs = [np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([0.0, 2.0])]
        with pytest.raises(ZeroVarianceError, match="response 1"):
            dissimilarity_matrix(vecs, DistanceMeasure("correlation"))
        bad = [np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]])]
        with pytest.raises(NotPositiveDefiniteError, match="response 1"):
            dissimilarity_matrix(bad, DistanceMeasure("geodesic"))

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValidationError, match="response 1"):
            dissimilarity_matrix([np.ones(3), np.ones(4)],
                                 DistanceMeasure("euclidean"))

    def test_needs_two(self):
        with pytest.raises(ValidationError):
            dissimilarity_matrix([np.ones(3)], DistanceMeasure("euclidean"))

    def test_unknown_measure(self):
        with pytest.raises(ValidationError, match="geodesic"):
            DistanceMeasure("mahalanobis")

    def test_unknown_formula(self):
        with pytest.raises(ValidationError):
            DistanceMeasure("correlation", correlation_formula="spearman")
