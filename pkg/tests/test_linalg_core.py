"""Tests for the dense linear algebra helpers"""

import numpy as np
import pytest

from modules.errors import InvalidMatrix, ParameterError, SpectralFunctionError
from modules.linalg_core import (
    canonicalize_signs,
    center_columns,
    projector_distance,
    pseudo_inverse,
    pseudo_reciprocal,
    row_projector,
    spectral_apply,
    sym_eig,
    top_eigenpairs,
)
from tests.helpers import random_psd

SQRT_HALF = np.sqrt(0.5)


class TestSymEig:
    def test_diagonal(self):
        eig = sym_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(eig.eigenvalues, [3.0, 1.0])
        np.testing.assert_allclose(eig.eigenvectors, np.eye(2), atol=1e-15)

    def test_rank_one_block(self):
        eig = sym_eig(np.array([[2.0, -2.0], [-2.0, 2.0]]))
        np.testing.assert_allclose(eig.eigenvalues, [4.0, 0.0], atol=1e-12)
        # magnitude tie: the lower index carries the positive sign
        np.testing.assert_allclose(eig.eigenvectors[:, 0], [SQRT_HALF, -SQRT_HALF], atol=1e-12)

    def test_identity(self):
        eig = sym_eig(np.eye(4))
        np.testing.assert_allclose(eig.eigenvalues, np.ones(4))

    def test_empty(self):
        eig = sym_eig(np.zeros((0, 0)))
        assert eig.eigenvalues.size == 0

    def test_random_reconstruction_and_order(self, rng):
        A = rng.standard_normal((50, 50))
        M = A + A.T
        eig = sym_eig(M)
        assert np.linalg.norm(eig.reconstruct() - M) <= 1e-10 * np.linalg.norm(M)
        np.testing.assert_allclose(eig.eigenvectors.T @ eig.eigenvectors, np.eye(50), atol=1e-10)
        assert np.all(np.diff(eig.eigenvalues) <= 0)

    def test_bit_identical_on_repeat(self, rng):
        M = random_psd(rng, 30)
        first, second = sym_eig(M), sym_eig(M.copy())
        assert np.array_equal(first.eigenvalues, second.eigenvalues)
        assert np.array_equal(first.eigenvectors, second.eigenvectors)

    def test_sign_convention(self, rng):
        eig = sym_eig(random_psd(rng, 20))
        for column in eig.eigenvectors.T:
            assert column[np.argmax(np.abs(column))] >= 0

    def test_rejects_non_square(self):
        with pytest.raises(InvalidMatrix):
            sym_eig(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidMatrix):
            sym_eig(np.array([[1.0, np.nan], [np.nan, 1.0]]))

    def test_top_eigenpairs(self):
        values, vectors = top_eigenpairs(np.diag([1.0, 5.0, 3.0]), 2)
        np.testing.assert_allclose(values, [5.0, 3.0])
        np.testing.assert_allclose(np.abs(vectors), [[0, 0], [1, 0], [0, 1]], atol=1e-15)


class TestCanonicalizeSigns:
    def test_flips_negative_peak(self):
        out = canonicalize_signs(np.array([[0.1], [-0.9]]))
        np.testing.assert_allclose(out[:, 0], [-0.1, 0.9])

    def test_tie_uses_lowest_index(self):
        out = canonicalize_signs(np.array([[-0.5], [0.5]]))
        np.testing.assert_allclose(out[:, 0], [0.5, -0.5])


class TestSpectralApply:
    def test_square_of_identity(self):
        np.testing.assert_allclose(spectral_apply(np.eye(3), lambda v: v ** 2), np.eye(3))

    def test_shift(self):
        M = np.array([[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_allclose(spectral_apply(M, lambda v: v + 1.0), [[2.0, -1.0], [-1.0, 2.0]], atol=1e-12)

    def test_identity_function(self, rng):
        M = random_psd(rng, 12)
        np.testing.assert_allclose(spectral_apply(M, lambda v: v), M, atol=1e-10 * np.abs(M).max())

    def test_pseudo_reciprocal_path(self):
        M = np.array([[2.0, -2.0], [-2.0, 2.0]])
        np.testing.assert_allclose(spectral_apply(M, pseudo_reciprocal), [[0.125, -0.125], [-0.125, 0.125]],
                                   atol=1e-12)

    def test_non_finite_output(self):
        with pytest.raises(SpectralFunctionError):
            spectral_apply(np.eye(2), lambda v: np.full_like(v, np.inf))


class TestPseudoInverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3))

    def test_singular_diagonal(self):
        np.testing.assert_allclose(pseudo_inverse(np.diag([4.0, 0.0])), np.diag([0.25, 0.0]), atol=1e-15)

    def test_rank_one(self):
        M = np.array([[2.0, -2.0], [-2.0, 2.0]])
        np.testing.assert_allclose(pseudo_inverse(M), [[0.125, -0.125], [-0.125, 0.125]], atol=1e-12)

    def test_matches_inverse_when_definite(self, rng):
        M = random_psd(rng, 8) + np.eye(8)
        np.testing.assert_allclose(pseudo_inverse(M), np.linalg.inv(M), rtol=1e-6, atol=1e-9)

    def test_moore_penrose_identities(self, rng):
        M = random_psd(rng, 10, rank=4)
        Mp = pseudo_inverse(M)
        scale = np.linalg.norm(M)
        assert np.linalg.norm(M @ Mp @ M - M) <= 1e-8 * scale
        assert np.linalg.norm(Mp @ M @ Mp - Mp) <= 1e-8 * np.linalg.norm(Mp)

    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(ParameterError):
            pseudo_inverse(np.eye(2), tol=0.0)


class TestCentering:
    def test_two_samples(self):
        np.testing.assert_allclose(center_columns(np.array([[1.0, 3.0]])), [[-1.0, 1.0]])

    def test_idempotent(self, rng):
        Y = rng.standard_normal((4, 9))
        once = center_columns(Y)
        np.testing.assert_allclose(center_columns(once), once, atol=1e-14)
        np.testing.assert_allclose(once.mean(axis=1), 0.0, atol=1e-14)

    def test_constant_columns(self):
        np.testing.assert_allclose(center_columns(np.full((3, 5), 2.5)), 0.0)


class TestProjectors:
    def test_projector_ignores_row_scaling(self, rng):
        psi = rng.standard_normal((2, 10))
        assert projector_distance(psi, np.diag([3.0, -0.5]) @ psi) <= 1e-10

    def test_projector_is_idempotent(self, rng):
        P = row_projector(rng.standard_normal((3, 12)))
        np.testing.assert_allclose(P @ P, P, atol=1e-12)
        assert abs(np.trace(P) - 3.0) <= 1e-12

    def test_orthogonal_subspaces(self):
        a = np.array([[1.0, 0.0, 0.0]])
        b = np.array([[0.0, 1.0, 0.0]])
        assert abs(projector_distance(a, b) - np.sqrt(2.0)) <= 1e-12
