"""
Local Embedding Module

Locally linear embedding (LLE) and its nonlinear generalization: neighbour
reconstruction weights, sparse polynomial link coefficients fitted by
proximal gradient, the induced kernel [(I - W)(I - W)^T]^dagger and the
graph-regularized embedding built on it.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg
from sklearn.neighbors import NearestNeighbors

from modules.errors import CoefficientOverflowError, ParameterError, RankDeficientEmbedding
from modules.graphs import GraphSpec, laplacian
from modules.linalg_core import DEFAULT_PINV_TOL, sym_eig
from modules.parallel import ordered_map
from modules.spectral_embeddings import Embedding, effective_matrix, leading_embedding

logger = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-9
DEFAULT_L1_WEIGHT = 0.01
DEFAULT_ISTA_MAX_ITER = 1000
DEFAULT_ISTA_TOL = 1e-8
COLLAPSE_MODES = ("sum", "l2")


@dataclass
class NeighborhoodWeights:
    """N x N reconstruction weights; column j rebuilds sample j from its neighbours"""
    w: np.ndarray
    neighbor_sets: List[np.ndarray]

    @property
    def n_samples(self) -> int:
        return self.w.shape[0]


@dataclass
class PolyCoeffs:
    """Polynomial link coefficients, coeffs[i, j, p - 1] = w_ij[p]"""
    coeffs: np.ndarray
    order: int
    l1_weight: float
    neighbor_sets: List[np.ndarray]
    scale: np.ndarray
    residual_norms: np.ndarray = field(default=None)
    n_iter: np.ndarray = field(default=None)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coeffs))


def euclidean_neighbors(Y: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest columns of Y for every column, self excluded (N x k)"""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[1]
    if not 1 <= k < n:
        raise ParameterError(f"Need 1 <= k < N neighbours, got k={k}, N={n}")
    nn = NearestNeighbors(n_neighbors=k, algorithm="brute").fit(Y.T)
    return nn.kneighbors(return_distance=False)


def lle_weights(Y: np.ndarray, k: int, ridge: float = DEFAULT_RIDGE,
                workers: Optional[int] = None) -> NeighborhoodWeights:
    """
    Sum-to-one reconstruction weights of every sample from its k neighbours

    Each column solves min ||y_j - sum_i w_ij y_i||^2 s.t. sum_i w_ij = 1
    through the local Gram system G w = 1, with ridge * tr(G) / k added to the
    diagonal so duplicates and k above the local rank stay solvable.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[1]
    neighbors = euclidean_neighbors(Y, k)

    def solve_column(j: int) -> np.ndarray:
        Z = Y[:, neighbors[j]] - Y[:, [j]]
        G = Z.T @ Z
        trace = float(np.trace(G))
        G[np.diag_indices_from(G)] += ridge * trace / k if trace > 0 else ridge
        weights = linalg.solve(G, np.ones(k), assume_a="pos")
        return weights / weights.sum()

    columns = ordered_map(solve_column, range(n), workers)
    W = np.zeros((n, n))
    for j, weights in enumerate(columns):
        W[neighbors[j], j] = weights
    return NeighborhoodWeights(w=W, neighbor_sets=[row.copy() for row in neighbors])


def reconstruction_matrix(w: NeighborhoodWeights) -> np.ndarray:
    """(I - W)(I - W)^T"""
    residual = np.eye(w.n_samples) - w.w
    M = residual @ residual.T
    return 0.5 * (M + M.T)


def _nonconstant_spectrum(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Descending eigenpairs of M on the complement of the constant vector"""
    n = M.shape[0]
    ones = np.full((n, 1), 1.0 / np.sqrt(n))
    constant = ones @ ones.T
    centering = np.eye(n) - constant
    # the shift exceeds every eigenvalue of M, so the constant vector comes first
    shift = float(np.linalg.norm(M)) + 1.0
    eig = sym_eig(centering @ M @ centering + shift * constant)
    return eig.eigenvalues[1:], eig.eigenvectors[:, 1:]


def lle_kernel(w: NeighborhoodWeights, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """
    Kernel [(I - W)(I - W)^T]^dagger induced by reconstruction weights

    The constant direction is dropped. Every other eigenvalue below
    tol * largest is clamped to that cutoff before inversion, so directions
    that W reconstructs exactly (the coordinates of data lying on an affine
    manifold) lead the kernel instead of vanishing from it.
    """
    M = reconstruction_matrix(w)
    values, vectors = _nonconstant_spectrum(M)
    if values.size == 0 or values[0] <= 0:
        return np.zeros_like(M)
    inverse = 1.0 / np.maximum(values, tol * values[0])
    K = (vectors * inverse) @ vectors.T
    return 0.5 * (K + K.T)


def _bottom_embedding(M: np.ndarray, d: int) -> Embedding:
    """d smallest-cost directions of M orthogonal to the constant vector"""
    n = M.shape[0]
    values, vectors = _nonconstant_spectrum(M)
    largest = max(float(values[0]), 0.0) if values.size else 0.0
    nonzero = int(np.count_nonzero(values > DEFAULT_PINV_TOL * largest)) if largest > 0 else 0
    if nonzero < d or d > n - 1:
        raise RankDeficientEmbedding(
            f"Requested d={d} but (I - W)(I - W)^T has only {nonzero} nonzero eigenvalues"
        )
    costs = values[::-1][:d].copy()
    psi = vectors[:, ::-1][:, :d].T.copy()
    return Embedding(psi=psi, eigenvalues=-costs, objective_trace=-float(costs.sum()),
                     info={"reconstruction_cost": float(costs.sum())})


def lle_embed(Y: np.ndarray, k: int, d: int, workers: Optional[int] = None) -> Embedding:
    """
    Locally linear embedding

    Rows of psi are the eigenvectors of (I - W)(I - W)^T with the d smallest
    eigenvalues once the constant vector is excluded.
    """
    weights = lle_weights(Y, k, workers=workers)
    embedding = _bottom_embedding(reconstruction_matrix(weights), d)
    embedding.info.update({"method": "lle", "k": k})
    return embedding


def soft_threshold(x, threshold: float):
    """Proximal map of threshold * |.|: sign(x) * max(|x| - threshold, 0)"""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def ista_lasso(Phi: np.ndarray, target: np.ndarray, l1_weight: float,
               max_iter: int = DEFAULT_ISTA_MAX_ITER, tol: float = DEFAULT_ISTA_TOL,
               x0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, List[float]]:
    """
    Minimize ||target - Phi w||^2 + l1_weight * ||w||_1 by iterative shrinkage

    The step is 1 / L with L the largest eigenvalue of Phi^T Phi, which makes
    every iteration a descent step. Without ``x0`` the iterate starts from the
    minimum-norm least-squares solution.

    Returns:
        (w, objective_history) with the starting objective first
    """
    Phi = np.asarray(Phi, dtype=float)
    target = np.asarray(target, dtype=float).ravel()

    def objective(w: np.ndarray) -> float:
        residual = target - Phi @ w
        return float(residual @ residual + l1_weight * np.abs(w).sum())

    lipschitz = float(np.linalg.norm(Phi, 2) ** 2) if Phi.size else 0.0
    if lipschitz == 0.0:
        w = np.zeros(Phi.shape[1])
        return w, [objective(w)]

    w = np.linalg.lstsq(Phi, target, rcond=None)[0] if x0 is None else np.asarray(x0, dtype=float).copy()
    history = [objective(w)]
    threshold = l1_weight / (2.0 * lipschitz)
    for _ in range(max_iter):
        gradient = Phi.T @ (Phi @ w - target)
        w = soft_threshold(w - gradient / lipschitz, threshold)
        history.append(objective(w))
        if abs(history[-2] - history[-1]) <= tol * max(abs(history[-2]), np.finfo(float).tiny):
            break
    return w, history


def _feature_scale(Y: np.ndarray) -> np.ndarray:
    scale = Y.std(axis=1)
    floor = 1e-12 * np.maximum(1.0, np.abs(Y).max(axis=1))
    return np.where(scale > floor, scale, 1.0)


def lneg_coeffs(Y: np.ndarray, k: int, P: int = 2, l1_weight: float = DEFAULT_L1_WEIGHT,
                max_iter: int = DEFAULT_ISTA_MAX_ITER, tol: float = DEFAULT_ISTA_TOL,
                standardize: bool = True, workers: Optional[int] = None) -> PolyCoeffs:
    """
    Sparse polynomial link coefficients between every sample and its neighbours

    By default every feature is scaled to unit variance (no centering). For column j the
    design Phi_j stacks [y_i, y_i^2, ..., y_i^P] of each neighbour i entrywise
    across the D features, and ||y_j - Phi_j w_j||^2 + l1_weight ||w_j||_1 is
    minimized with ista_lasso.

    Args:
        Y: D x N data
        k: neighbours per sample (Euclidean, on the raw data)
        P: polynomial order >= 1
        l1_weight: sparsity weight >= 0
        max_iter: ISTA iteration cap per column
        tol: relative objective change that stops ISTA
        standardize: scale features to unit variance before powering
        workers: thread budget for the per-column solves

    Raises:
        CoefficientOverflowError: powers of the scaled data are not finite
    """
    if int(P) < 1:
        raise ParameterError(f"Polynomial order must be >= 1, got {P}")
    if l1_weight < 0:
        raise ParameterError(f"l1_weight must be nonnegative, got {l1_weight}")
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[1]
    P = int(P)
    scale = _feature_scale(Y) if standardize else np.ones(Y.shape[0])
    scaled = Y / scale[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        powers = np.stack([scaled ** p for p in range(1, P + 1)], axis=2)  # D x N x P
    if not np.all(np.isfinite(powers)):
        raise CoefficientOverflowError(
            f"Order-{P} powers of the data overflow; rescale the data or lower P"
        )
    neighbors = euclidean_neighbors(Y, k)

    def solve_column(j: int):
        Phi = powers[:, neighbors[j], :].reshape(Y.shape[0], k * P)
        w, history = ista_lasso(Phi, scaled[:, j], l1_weight, max_iter=max_iter, tol=tol)
        residual = float(np.linalg.norm(scaled[:, j] - Phi @ w))
        return w.reshape(k, P), residual, len(history) - 1

    results = ordered_map(solve_column, range(n), workers)
    coeffs = np.zeros((n, n, P))
    residuals = np.zeros(n)
    iterations = np.zeros(n, dtype=int)
    for j, (w, residual, steps) in enumerate(results):
        coeffs[neighbors[j], j, :] = w
        residuals[j] = residual
        iterations[j] = steps
    logger.info(f"Fitted order-{P} coefficients for {n} samples: "
                f"{np.count_nonzero(coeffs)} nonzeros, mean residual {residuals.mean():.3e}")
    return PolyCoeffs(coeffs=coeffs, order=P, l1_weight=float(l1_weight),
                      neighbor_sets=[row.copy() for row in neighbors], scale=scale,
                      residual_norms=residuals, n_iter=iterations)


def collapse_coeffs(c: PolyCoeffs, mode: str = "sum", renormalize: bool = False) -> NeighborhoodWeights:
    """
    Reduce per-order coefficients to one N x N weight matrix

    ``sum`` takes sum_p w_ij[p] (the link function evaluated at 1), ``l2`` the
    norm ||w_ij||_2. ``renormalize`` rescales each column to sum to one.
    """
    if mode == "sum":
        W = c.coeffs.sum(axis=2)
    elif mode == "l2":
        W = np.sqrt((c.coeffs ** 2).sum(axis=2))
    else:
        raise ParameterError(f"Unknown collapse mode '{mode}', expected one of {COLLAPSE_MODES}")
    if renormalize:
        sums = W.sum(axis=0)
        nonzero = np.abs(sums) > 0
        W[:, nonzero] = W[:, nonzero] / sums[nonzero]
    return NeighborhoodWeights(w=W, neighbor_sets=[s.copy() for s in c.neighbor_sets])


def lneg_embed(Y: np.ndarray, k: int, P: int = 2, l1_weight: float = DEFAULT_L1_WEIGHT, d: int = 2,
               gamma: float = 0.0, g: Optional[GraphSpec] = None, collapse: str = "sum",
               renormalize: bool = False, max_iter: int = DEFAULT_ISTA_MAX_ITER,
               tol: float = DEFAULT_ISTA_TOL, workers: Optional[int] = None) -> Embedding:
    """
    Local nonlinear embedding, optionally regularized over a graph

    Fits polynomial coefficients, collapses them to W, forms the kernel
    K_y from the non-constant spectrum of (I - W)(I - W)^T and returns the d leading eigenvectors of
    K_y - gamma L_G (or of K_y alone when no graph is given or gamma = 0).
    """
    coeffs = lneg_coeffs(Y, k, P=P, l1_weight=l1_weight, max_iter=max_iter, tol=tol, workers=workers)
    weights = collapse_coeffs(coeffs, mode=collapse, renormalize=renormalize)
    K_y = lle_kernel(weights)
    penalties = [(gamma, laplacian(g))] if g is not None and gamma > 0 else []
    embedding = leading_embedding(effective_matrix(K_y, penalties=penalties), d)
    embedding.info.update({
        "method": "lneg" if penalties else "lne",
        "k": k,
        "P": int(P),
        "l1_weight": float(l1_weight),
        "gamma": float(gamma) if penalties else 0.0,
        "nonzero_coefficients": coeffs.nnz,
        "mean_residual": float(coeffs.residual_norms.mean()),
        "mean_ista_iterations": float(coeffs.n_iter.mean()),
    })
    return embedding
