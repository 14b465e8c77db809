"""
Data Kernel Module

Kernel functions on data vectors, Gram-matrix construction, feature-space
centering and nonnegative mixtures of kernel matrices.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.preprocessing import KernelCenterer

from modules.errors import DimensionError, InvalidMatrix, NotPSD, ParameterError

logger = logging.getLogger(__name__)

# D x N matrix, one sample per column
DataMatrix = np.ndarray
# N x N symmetric positive-semidefinite Gram matrix
KernelMatrix = np.ndarray

KERNEL_KINDS = ("linear", "gaussian", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its parameters"""
    kind: str = "gaussian"
    sigma2: float = 1.0
    degree: int = 2
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ParameterError(f"Unknown kernel kind '{self.kind}', expected one of {KERNEL_KINDS}")
        if self.kind == "gaussian" and not self.sigma2 > 0:
            raise ParameterError(f"Gaussian kernel needs sigma2 > 0, got {self.sigma2}")
        if self.kind == "polynomial" and int(self.degree) < 1:
            raise ParameterError(f"Polynomial kernel needs degree >= 1, got {self.degree}")

    def describe(self) -> dict:
        """Parameters relevant to this kind, for metadata output"""
        if self.kind == "gaussian":
            return {"kind": self.kind, "sigma2": self.sigma2}
        if self.kind == "polynomial":
            return {"kind": self.kind, "degree": int(self.degree), "offset": self.offset}
        return {"kind": self.kind}


def _cross_kernel(spec: KernelSpec, A: np.ndarray, B: np.ndarray = None) -> np.ndarray:
    """Kernel values between the columns of A and the columns of B (B defaults to A)"""
    other = A if B is None else B
    if spec.kind == "gaussian":
        sq_dist = cdist(A.T, other.T, metric="sqeuclidean")
        return np.exp(-sq_dist / (2.0 * spec.sigma2))
    inner = A.T @ other
    if spec.kind == "polynomial":
        return (inner + spec.offset) ** int(spec.degree)
    return inner


def eval_kernel(spec: KernelSpec, y_i: np.ndarray, y_j: np.ndarray) -> float:
    """Evaluate the kernel on two vectors of equal dimension"""
    y_i = np.asarray(y_i, dtype=float).ravel()
    y_j = np.asarray(y_j, dtype=float).ravel()
    if y_i.shape != y_j.shape:
        raise DimensionError(f"Kernel arguments differ in dimension: {y_i.size} vs {y_j.size}")
    return float(_cross_kernel(spec, y_i[:, None], y_j[:, None])[0, 0])


def gram_matrix(spec: KernelSpec, Y: DataMatrix) -> KernelMatrix:
    """
    Build the N x N Gram matrix of the columns of Y

    Args:
        spec: kernel family and parameters
        Y: D x N data matrix

    Returns:
        Symmetric Gram matrix with entry (i, j) = kappa(y_i, y_j)
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise DimensionError(f"Expected a D x N data matrix with N >= 1, got shape {Y.shape}")
    K = _cross_kernel(spec, Y)
    K = 0.5 * (K + K.T)
    if spec.kind == "gaussian":
        np.fill_diagonal(K, 1.0)
    logger.debug(f"Built {spec.kind} Gram matrix of size {K.shape[0]}")
    return K


def gaussian_bandwidths(count: int = 10, low: float = 0.01, high: float = 1.0) -> np.ndarray:
    """Equispaced sigma^2 grid for a Gaussian kernel dictionary"""
    if count < 1 or not 0 < low <= high:
        raise ParameterError(f"Invalid bandwidth grid: count={count}, low={low}, high={high}")
    return np.linspace(low, high, count)


def kernel_dictionary(Y: DataMatrix, sigma2_values: Sequence[float]) -> List[KernelMatrix]:
    """Gaussian Gram matrices of Y, one per bandwidth"""
    return [gram_matrix(KernelSpec("gaussian", sigma2=float(s)), Y) for s in sigma2_values]


def center_kernel(K: KernelMatrix) -> KernelMatrix:
    """Double-center a kernel matrix, K <- H K H with H = I - 11^T/N"""
    K = validate_kernel_matrix(K, psd=False)
    centered = KernelCenterer().fit_transform(K)
    return 0.5 * (centered + centered.T)


def mix_kernels(kernels: Sequence[KernelMatrix], theta) -> KernelMatrix:
    """Weighted sum sum_q theta_q K_q of equally sized kernel matrices"""
    weights = np.asarray(getattr(theta, "weights", theta), dtype=float).ravel()
    if len(kernels) == 0:
        raise DimensionError("At least one kernel matrix is required")
    if weights.size != len(kernels):
        raise DimensionError(f"Got {len(kernels)} kernels but {weights.size} weights")
    if np.any(weights < 0):
        raise ParameterError("Mixture weights must be nonnegative")
    if not _same_shape(kernels):
        raise DimensionError("All kernel matrices must share the same N x N shape")
    stack = np.stack([np.asarray(K, dtype=float) for K in kernels])
    return np.tensordot(weights, stack, axes=1)


def _same_shape(matrices: Sequence[np.ndarray]) -> bool:
    shapes = {np.shape(M) for M in matrices}
    if len(shapes) != 1:
        return False
    shape = shapes.pop()
    return len(shape) == 2 and shape[0] == shape[1]


def validate_kernel_matrix(K: KernelMatrix, psd: bool = True, tol: float = 1e-8) -> KernelMatrix:
    """
    Check that K is a finite symmetric (optionally PSD) square matrix

    Raises:
        InvalidMatrix: non-square, non-finite or asymmetric input
        NotPSD: smallest eigenvalue below -tol * largest
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidMatrix(f"Kernel matrix must be square, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise InvalidMatrix("Kernel matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(K).max()) if K.size else 1.0)
    if not np.allclose(K, K.T, atol=1e-10 * scale, rtol=0.0):
        raise InvalidMatrix("Kernel matrix is not symmetric")
    if psd and K.size:
        values = np.linalg.eigvalsh(0.5 * (K + K.T))
        if values[0] < -tol * max(values[-1], 0.0) - 1e-12:
            raise NotPSD(f"Kernel matrix has eigenvalue {values[0]:.3e} below zero")
    return K
