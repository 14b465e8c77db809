"""
Dense Linear Algebra Module

Deterministic symmetric eigendecomposition, spectral functions of matrices,
pseudo-inverse and centering shared by every solver in the toolkit.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import linalg

from modules.errors import InvalidMatrix, ParameterError, SpectralFunctionError

logger = logging.getLogger(__name__)

DEFAULT_PINV_TOL = 1e-10

# Entries whose magnitude is this close to the column maximum count as ties
# when choosing the sign-defining entry of an eigenvector.
_SIGN_TIE_TOL = 1e-10


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Return V diag(w) V^T"""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def _as_square(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidMatrix(f"Expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix("Matrix contains non-finite entries")
    return M


def canonicalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry (lowest index on ties) is nonnegative"""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    magnitudes = np.abs(vectors)
    peak = magnitudes.max(axis=0)
    # argmax over a boolean mask returns the first True, i.e. the lowest index
    pivot = np.argmax(magnitudes >= peak - _SIGN_TIE_TOL, axis=0)
    signs = np.where(vectors[pivot, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return vectors * signs


def sym_eig(M: np.ndarray) -> SymEig:
    """
    Eigendecompose a symmetric matrix

    The input is symmetrized as (M + M^T)/2 and factored with LAPACK's dense
    symmetric driver. Eigenvalues are returned in nonincreasing order and every
    eigenvector is sign-canonicalized, so identical inputs give bit-identical
    outputs.

    Args:
        M: N x N real matrix, symmetric up to roundoff

    Returns:
        SymEig with descending eigenvalues and orthonormal eigenvectors
    """
    M = _as_square(M)
    if M.shape[0] == 0:
        return SymEig(np.zeros(0), np.zeros((0, 0)))
    sym = 0.5 * (M + M.T)
    values, vectors = linalg.eigh(sym, check_finite=False)
    values = values[::-1].copy()
    vectors = canonicalize_signs(vectors[:, ::-1])
    return SymEig(eigenvalues=values, eigenvectors=vectors)


def top_eigenpairs(M: np.ndarray, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Return the d leading eigenvalues and the matching N x d eigenvectors"""
    eig = sym_eig(M)
    return eig.eigenvalues[:d].copy(), eig.eigenvectors[:, :d].copy()


def spectral_apply(M: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Compute U f(Lambda) U^T for a symmetric matrix M = U Lambda U^T

    ``f`` receives the whole eigenvalue vector (descending) and must return an
    array of the same length, which lets rank-dependent maps see the spectrum.
    """
    eig = sym_eig(M)
    mapped = np.asarray(f(eig.eigenvalues), dtype=float)
    if mapped.shape != eig.eigenvalues.shape:
        mapped = np.asarray([f(value) for value in eig.eigenvalues], dtype=float)
    if not np.all(np.isfinite(mapped)):
        raise SpectralFunctionError("Spectral function produced non-finite values")
    result = (eig.eigenvectors * mapped) @ eig.eigenvectors.T
    return 0.5 * (result + result.T)


def pseudo_reciprocal(values: np.ndarray, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Map eigenvalues above tol * max to their reciprocal and the rest to zero"""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    if values.size == 0:
        return out
    largest = values.max()
    if largest <= 0:
        return out
    keep = values > tol * largest
    out[keep] = 1.0 / values[keep]
    return out


def pseudo_inverse(M: np.ndarray, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Spectral Moore-Penrose inverse of a symmetric PSD matrix"""
    if tol <= 0:
        raise ParameterError(f"Pseudo-inverse tolerance must be positive, got {tol}")
    return spectral_apply(M, lambda values: pseudo_reciprocal(values, tol))


def center_columns(Y: np.ndarray) -> np.ndarray:
    """Subtract the sample mean (mean column) from every column of a D x N matrix"""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise InvalidMatrix(f"Expected a D x N data matrix with N >= 1, got shape {Y.shape}")
    return Y - Y.mean(axis=1, keepdims=True)


def row_projector(psi: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the row space of a d x N matrix"""
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    basis = linalg.orth(psi.T)
    return basis @ basis.T


def projector_distance(psi_a: np.ndarray, psi_b: np.ndarray) -> float:
    """Frobenius distance between the row-space projectors of two embeddings"""
    return float(np.linalg.norm(row_projector(psi_a) - row_projector(psi_b)))
