"""
Spectral Embedding Module

Trace-maximization embedding solvers: PCA, dual PCA, kernel PCA, kernel PCA
on graphs, multi-kernel / multi-graph kernel PCA, multi-layer graph embedding
and semi-supervised embedding with must-link / cannot-link graphs.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from modules.errors import (
    DegenerateMixture,
    DimensionError,
    NotPSD,
    ParameterError,
)
from modules.graphs import GraphKernelSpec, GraphSpec, graph_kernel
from modules.kernels import KernelSpec, gram_matrix, mix_kernels
from modules.linalg_core import center_columns, row_projector, sym_eig

logger = logging.getLogger(__name__)

PSD_TOL = 1e-8
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-8


@dataclass
class Embedding:
    """d x N low-dimensional representation and the spectrum behind it"""
    psi: np.ndarray
    eigenvalues: np.ndarray
    objective_trace: float
    normalized: bool = True
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.psi.shape[0]

    @property
    def n_samples(self) -> int:
        return self.psi.shape[1]

    def projector(self) -> np.ndarray:
        """Projector onto the row space of psi"""
        return row_projector(self.psi)

    def gram_error(self) -> float:
        """Frobenius distance of psi psi^T from the identity"""
        return float(np.linalg.norm(self.psi @ self.psi.T - np.eye(self.d)))


@dataclass
class MixtureWeights:
    """Nonnegative weight vector with unit l2 norm"""
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.weights.size == 0:
            raise ParameterError("Mixture weights cannot be empty")
        if np.any(self.weights < 0):
            raise ParameterError("Mixture weights must be nonnegative")
        if abs(np.linalg.norm(self.weights) - 1.0) > 1e-10:
            raise ParameterError("Mixture weights must have unit l2 norm")

    @classmethod
    def uniform(cls, count: int) -> "MixtureWeights":
        return cls(np.full(count, 1.0 / np.sqrt(count)))

    def __len__(self) -> int:
        return self.weights.size

    def tolist(self) -> List[float]:
        return self.weights.tolist()


@dataclass
class GmkpcaResult:
    """Outcome of the alternating multi-kernel / multi-graph solver"""
    embedding: Embedding
    theta: MixtureWeights
    beta: Optional[MixtureWeights]
    objective_history: np.ndarray
    n_iter: int
    converged: bool

    @property
    def trace_history(self) -> np.ndarray:
        """Maximized trace per outer iteration"""
        return -self.objective_history


def _check_dimension(d: int, limit: int, what: str = "N"):
    if not 1 <= int(d) <= limit:
        raise DimensionError(f"Embedding dimension d={d} must satisfy 1 <= d <= {what}={limit}")


def _square(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def leading_embedding(M: np.ndarray, d: int) -> Embedding:
    """Rows are the d leading eigenvectors of a symmetric matrix M"""
    M = _square(M, "Effective matrix")
    _check_dimension(d, M.shape[0])
    eig = sym_eig(M)
    values = eig.eigenvalues[:d].copy()
    psi = eig.eigenvectors[:, :d].T.copy()
    return Embedding(psi=psi, eigenvalues=values, objective_trace=float(values.sum()))


def effective_matrix(base: np.ndarray,
                     penalties: Sequence[Tuple[float, np.ndarray]] = (),
                     rewards: Sequence[Tuple[float, np.ndarray]] = ()) -> np.ndarray:
    """
    Assemble K_bar = base - sum gamma L (penalties) + sum gamma R (rewards)

    Penalty terms push connected samples together (smoothness), reward terms
    add a graph kernel to the maximized trace.
    """
    K_bar = _square(base, "Base matrix").copy()
    n = K_bar.shape[0]
    for sign, terms in ((-1.0, penalties), (1.0, rewards)):
        for gamma, M in terms:
            M = _square(M, "Regularizer")
            if M.shape[0] != n:
                raise DimensionError(f"Regularizer has {M.shape[0]} nodes, data has {n} samples")
            if gamma < 0:
                raise ParameterError(f"Regularization weight must be nonnegative, got {gamma}")
            if gamma:
                K_bar += sign * gamma * M
    return 0.5 * (K_bar + K_bar.T)


def pca(Y: np.ndarray, d: int, whiten: bool = False) -> Tuple[Embedding, np.ndarray]:
    """
    Principal component analysis of a D x N data matrix

    Args:
        Y: D x N data, re-centered here
        d: target dimension, 1 <= d <= min(D, N)
        whiten: scale rows to unit norm (psi psi^T = I)

    Returns:
        (embedding, basis) where basis holds the d leading eigenvectors of Y Y^T
        and embedding.psi = basis^T Y, so psi psi^T = Lambda_d unless whitened
    """
    Y = center_columns(Y)
    D, N = Y.shape
    _check_dimension(d, min(D, N), "min(D, N)")
    eig = sym_eig(Y @ Y.T)
    basis = eig.eigenvectors[:, :d].copy()
    values = np.clip(eig.eigenvalues[:d], 0.0, None)
    psi = basis.T @ Y
    if whiten:
        scale = np.zeros_like(values)
        positive = values > 0
        scale[positive] = 1.0 / np.sqrt(values[positive])
        psi = psi * scale[:, None]
    embedding = Embedding(psi=psi, eigenvalues=values, objective_trace=float(values.sum()),
                          normalized=whiten, info={"path": "primal"})
    return embedding, basis


def _spectrum_checked(K: np.ndarray, d: int):
    K = _square(K, "Kernel matrix")
    _check_dimension(d, K.shape[0])
    eig = sym_eig(K)
    largest = max(float(eig.eigenvalues[0]), 0.0)
    leading = eig.eigenvalues[:d]
    if np.any(leading < -PSD_TOL * largest - 1e-12):
        raise NotPSD(f"Kernel has negative leading eigenvalue {leading.min():.3e}")
    return eig


def dual_pca(K: np.ndarray, d: int) -> Embedding:
    """Dual PCA: psi = Lambda_d^{1/2} V_d^T from the d leading eigenpairs of K"""
    eig = _spectrum_checked(K, d)
    values = np.clip(eig.eigenvalues[:d], 0.0, None)
    psi = np.sqrt(values)[:, None] * eig.eigenvectors[:, :d].T
    return Embedding(psi=psi, eigenvalues=values, objective_trace=float(values.sum()),
                     normalized=False, info={"path": "dual"})


def kernel_pca(K: np.ndarray, d: int, whiten: bool = False) -> Embedding:
    """
    Kernel PCA with orthonormal rows psi = V_d^T

    ``whiten=True`` returns the dual-PCA scaling Lambda_d^{1/2} V_d^T instead.
    """
    if whiten:
        return dual_pca(K, d)
    eig = _spectrum_checked(K, d)
    values = eig.eigenvalues[:d].copy()
    psi = eig.eigenvectors[:, :d].T.copy()
    return Embedding(psi=psi, eigenvalues=values, objective_trace=float(values.sum()))


def gkpca(K: np.ndarray, g: GraphSpec, gspec: Optional[GraphKernelSpec], gamma: float, d: int,
          mode: str = "reward") -> Embedding:
    """
    Kernel PCA on a graph

    ``mode='penalty'`` maximizes tr(psi (K - gamma L) psi^T) and requires the
    identity graph kernel; ``mode='reward'`` maximizes
    tr(psi (K + gamma r^dagger(L)) psi^T).

    Args:
        K: N x N data kernel
        g: graph over the N samples
        gspec: graph kernel (identity when None)
        gamma: regularization weight >= 0
        d: embedding dimension
        mode: 'penalty' or 'reward'
    """
    K = _square(K, "Kernel matrix")
    if g.n_nodes != K.shape[0]:
        raise DimensionError(f"Graph has {g.n_nodes} nodes but the kernel is {K.shape[0]} x {K.shape[0]}")
    gspec = gspec or GraphKernelSpec("identity")
    if mode not in ("penalty", "reward"):
        raise ParameterError(f"Unknown gkpca mode '{mode}', expected 'penalty' or 'reward'")
    if mode == "penalty" and gspec.kind != "identity":
        raise ParameterError("Penalty mode uses the raw Laplacian; pass the identity graph kernel")
    # gamma = 0 is plain kernel PCA, even for graph kernels that cannot be formed
    terms = [(gamma, graph_kernel(g, gspec))] if gamma != 0 else []
    if mode == "penalty":
        K_bar = effective_matrix(K, penalties=terms)
    else:
        K_bar = effective_matrix(K, rewards=terms)
    embedding = leading_embedding(K_bar, d)
    embedding.info.update({"mode": mode, "gamma": gamma, "graph_kernel": gspec.describe()})
    return embedding


def graph_pca(Y: np.ndarray, g: GraphSpec, gamma: float, d: int) -> Embedding:
    """Graph-regularized linear PCA in kernel form: linear kernel on centered Y, Laplacian penalty"""
    K = gram_matrix(KernelSpec("linear"), center_columns(Y))
    return gkpca(K, g, GraphKernelSpec("identity"), gamma, d, mode="penalty")


def _psi_array(psi) -> np.ndarray:
    return np.atleast_2d(np.asarray(getattr(psi, "psi", psi), dtype=float))


def _closed_form_weights(psi, matrices: Sequence[np.ndarray], name: str) -> MixtureWeights:
    """w_q = tr(psi M_q psi^T) / ||(tr(psi M_1 psi^T), ...)||_2"""
    P = _psi_array(psi)
    if len(matrices) == 0:
        raise DimensionError(f"At least one matrix is needed to update {name}")
    traces = []
    for M in matrices:
        M = _square(M, name)
        if M.shape[0] != P.shape[1]:
            raise DimensionError(f"{name} matrix has size {M.shape[0]}, embedding has {P.shape[1]} samples")
        traces.append(float(np.einsum("ij,jk,ik->", P, M, P)))
    traces = np.asarray(traces)
    if not np.all(np.isfinite(traces)):
        raise DegenerateMixture(f"Non-finite trace while updating {name}")
    if np.any(traces < 0):
        logger.warning(f"Clipping negative traces {traces[traces < 0]} while updating {name}")
        traces = np.clip(traces, 0.0, None)
    norm = np.linalg.norm(traces)
    if norm == 0:
        raise DegenerateMixture(f"All traces vanish, {name} is undefined")
    return MixtureWeights(traces / norm)


def update_theta(psi, kernels: Sequence[np.ndarray]) -> MixtureWeights:
    """Closed-form kernel weights for a fixed embedding"""
    return _closed_form_weights(psi, kernels, "theta")


def update_beta(psi, graph_kernels: Sequence[np.ndarray]) -> MixtureWeights:
    """Closed-form graph-kernel weights for a fixed embedding"""
    return _closed_form_weights(psi, graph_kernels, "beta")


def gmkpca(kernels: Sequence[np.ndarray], graph_kernels: Sequence[np.ndarray], gamma: float, d: int,
           max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
           learn_beta: bool = True) -> GmkpcaResult:
    """
    Multi-kernel PCA on graphs by alternating optimization

    Each outer iteration takes psi as the d leading eigenvectors of
    sum_q theta_q K_q + gamma sum_l beta_l R_l, then updates theta and (when
    more than one graph kernel is given and ``learn_beta``) beta in closed
    form. Every block update is the exact maximizer of its subproblem, so the
    maximized trace never decreases.

    Args:
        kernels: Q >= 1 data kernels
        graph_kernels: L >= 0 graph kernels r^dagger(L_l)
        gamma: graph weight >= 0
        d: embedding dimension
        max_iter: outer iteration cap
        tol: stop when the objective changes by less than this
        learn_beta: update beta in closed form; otherwise keep 1/sqrt(L) each

    Returns:
        GmkpcaResult whose objective_history holds the minimized value
        (negative trace) per iteration
    """
    if len(kernels) < 1:
        raise DimensionError("gmkpca needs at least one data kernel")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    if gamma < 0:
        raise ParameterError(f"gamma must be nonnegative, got {gamma}")
    n = _square(kernels[0], "Kernel matrix").shape[0]
    for M in list(kernels) + list(graph_kernels):
        if _square(M, "Kernel matrix").shape[0] != n:
            raise DimensionError("All data and graph kernels must share the same size")
    _check_dimension(d, n)

    theta = MixtureWeights.uniform(len(kernels))
    beta = MixtureWeights.uniform(len(graph_kernels)) if graph_kernels else None
    update_graph_weights = learn_beta and len(graph_kernels) > 1
    history: List[float] = []
    embedding = None
    converged = False

    for iteration in range(1, max_iter + 1):
        rewards = [(gamma, mix_kernels(graph_kernels, beta))] if beta is not None else []
        embedding = leading_embedding(effective_matrix(mix_kernels(kernels, theta), rewards=rewards), d)
        theta = update_theta(embedding, kernels)
        if update_graph_weights:
            beta = update_beta(embedding, graph_kernels)

        objective = _mixture_trace(embedding.psi, kernels, theta)
        if beta is not None and gamma:
            objective += gamma * _mixture_trace(embedding.psi, graph_kernels, beta)
        history.append(-objective)
        logger.debug(f"gmkpca iteration {iteration}: trace={objective:.12g}")

        if iteration > 1 and abs(history[-1] - history[-2]) < tol:
            converged = True
            break

    embedding.objective_trace = -history[-1]
    embedding.info.update({"theta": theta.tolist(), "beta": beta.tolist() if beta is not None else None,
                           "iterations": iteration, "converged": converged})
    logger.info(f"gmkpca finished after {iteration} iterations (converged={converged})")
    return GmkpcaResult(embedding=embedding, theta=theta, beta=beta,
                        objective_history=np.asarray(history), n_iter=iteration, converged=converged)


def gmkpca_multigraph(kernels: Sequence[np.ndarray], graph_kernels: Sequence[np.ndarray], gamma: float, d: int,
                      max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
                      learn_beta: bool = True) -> GmkpcaResult:
    """gmkpca over L >= 2 graphs with the graph weights beta learned jointly (or held equal)"""
    if len(graph_kernels) < 2:
        raise DimensionError(f"Multi-graph solver needs at least two graph kernels, got {len(graph_kernels)}")
    return gmkpca(kernels, graph_kernels, gamma, d, max_iter=max_iter, tol=tol, learn_beta=learn_beta)


def _mixture_trace(psi: np.ndarray, matrices: Sequence[np.ndarray], weights: MixtureWeights) -> float:
    return float(sum(w * np.einsum("ij,jk,ik->", psi, M, psi) for w, M in zip(weights.weights, matrices)))


def multimodal_embed(graph_kernels: Sequence[np.ndarray], d: int) -> Embedding:
    """Embedding from the d leading eigenvectors of the summed layer kernels"""
    if len(graph_kernels) < 1:
        raise DimensionError("At least one layer kernel is required")
    n = _square(graph_kernels[0], "Layer kernel").shape[0]
    total = np.zeros((n, n))
    for M in graph_kernels:
        M = _square(M, "Layer kernel")
        if M.shape[0] != n:
            raise DimensionError(f"Layer kernels differ in size: {M.shape[0]} vs {n}")
        total += M
    embedding = leading_embedding(total, d)
    embedding.info["layers"] = len(graph_kernels)
    return embedding


def semisupervised_embed(K: np.ndarray, Ls: np.ndarray, Ld: np.ndarray, gamma1: float, gamma2: float,
                         d: int) -> Embedding:
    """Embedding of K - gamma1 L^S + gamma2 L^D (must-link penalty, cannot-link reward)"""
    K_bar = effective_matrix(K, penalties=[(gamma1, Ls)], rewards=[(gamma2, Ld)])
    embedding = leading_embedding(K_bar, d)
    embedding.info.update({"gamma1": gamma1, "gamma2": gamma2})
    return embedding
