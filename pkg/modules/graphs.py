"""
Graph Construction Module

Builds weighted undirected graphs from data or pairwise constraints,
assembles Laplacians and evaluates spectral graph kernels r^dagger(L).
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Set, Tuple, Union

import numpy as np
from scipy.sparse.csgraph import laplacian as csgraph_laplacian

from modules.datasets import read_text
from modules.errors import (
    DegenerateSample,
    DimensionError,
    FormatError,
    InconsistentConstraints,
    InvalidMatrix,
    ParameterError,
    ParseError,
    SingularGraphKernel,
)
from modules.linalg_core import spectral_apply

logger = logging.getLogger(__name__)

GRAPH_KERNEL_KINDS = (
    "diffusion",
    "p_step_random_walk",
    "regularized_laplacian",
    "bandlimited",
    "identity",
)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class GraphSpec:
    """Weighted undirected graph held as a dense adjacency matrix"""
    adjacency: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidMatrix(f"Adjacency must be a non-empty square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidMatrix("Adjacency contains non-finite entries")
        if np.any(np.diag(A) != 0):
            raise InvalidMatrix("Adjacency diagonal must be exactly zero")
        if np.any(A < 0):
            raise InvalidMatrix("Adjacency weights must be nonnegative")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise InvalidMatrix("Adjacency must be symmetric")
        object.__setattr__(self, "adjacency", A)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))

    @classmethod
    def empty(cls, n_nodes: int) -> "GraphSpec":
        return cls(np.zeros((n_nodes, n_nodes)))


@dataclass(frozen=True)
class GraphKernelSpec:
    """Spectral function r(lambda) of the Laplacian and its parameters"""
    kind: str = "identity"
    sigma2: float = 1.0
    a: float = 2.0
    p: int = 1
    beta: float = 1.0
    B: int = 1

    def __post_init__(self):
        if self.kind not in GRAPH_KERNEL_KINDS:
            raise ParameterError(f"Unknown graph kernel '{self.kind}', expected one of {GRAPH_KERNEL_KINDS}")
        if self.kind in ("diffusion", "regularized_laplacian") and self.sigma2 < 0:
            raise ParameterError(f"{self.kind} kernel needs sigma2 >= 0, got {self.sigma2}")
        if self.kind == "p_step_random_walk" and (self.a < 2 or int(self.p) < 1):
            raise ParameterError(f"Random-walk kernel needs a >= 2 and p >= 1, got a={self.a}, p={self.p}")
        if self.kind == "bandlimited" and (self.beta <= 0 or int(self.B) < 1):
            raise ParameterError(f"Bandlimited kernel needs beta > 0 and B >= 1, got beta={self.beta}, B={self.B}")

    def r(self, eigenvalues: np.ndarray) -> np.ndarray:
        """Evaluate r on a Laplacian spectrum (any order)"""
        lam = np.asarray(eigenvalues, dtype=float)
        if self.kind == "diffusion":
            return np.exp(self.sigma2 * lam / 2.0)
        if self.kind == "regularized_laplacian":
            return 1.0 + self.sigma2 * lam
        if self.kind == "p_step_random_walk":
            with np.errstate(divide="ignore"):
                return np.power(self.a - lam, -float(int(self.p)))
        if self.kind == "bandlimited":
            # graph-frequency order: rank 0 is the smallest eigenvalue
            ranks = np.empty(lam.size, dtype=int)
            ranks[np.argsort(lam, kind="stable")] = np.arange(lam.size)
            return np.where(ranks < int(self.B), 1.0 / self.beta, self.beta)
        raise ParameterError("The identity graph kernel has no spectral function")

    def describe(self) -> dict:
        fields = {
            "diffusion": ("sigma2",),
            "regularized_laplacian": ("sigma2",),
            "p_step_random_walk": ("a", "p"),
            "bandlimited": ("beta", "B"),
            "identity": (),
        }[self.kind]
        return {"kind": self.kind, **{name: getattr(self, name) for name in fields}}


def laplacian(g: GraphSpec) -> np.ndarray:
    """Combinatorial Laplacian L = D - A"""
    L = csgraph_laplacian(g.adjacency, normed=False)
    return 0.5 * (L + L.T)


def correlation_knn_graph(Y: np.ndarray, k: Optional[int] = None) -> GraphSpec:
    """
    Correlation graph between the columns of Y

    Edge weights are cosine similarities y_i^T y_j / (|y_i| |y_j|), negative
    values clamped to zero. With ``k`` set, node i keeps its k most correlated
    neighbours and the selection is symmetrized by union; ``k=None`` keeps the
    dense clamped graph.

    Args:
        Y: D x N data matrix
        k: neighbours per node, 1 <= k < N, or None for the dense graph

    Returns:
        GraphSpec with N nodes
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[1]
    norms = np.linalg.norm(Y, axis=0)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise DegenerateSample(f"Column {bad} has zero norm, correlation undefined")
    unit = Y / norms
    corr = np.clip(unit.T @ unit, 0.0, None)
    corr = np.minimum(0.5 * (corr + corr.T), 1.0)
    np.fill_diagonal(corr, 0.0)
    if k is None:
        return GraphSpec(corr)
    if not 1 <= k < n:
        raise ParameterError(f"Need 1 <= k < N for a kNN graph, got k={k}, N={n}")

    ranking = np.where(np.eye(n, dtype=bool), -np.inf, unit.T @ unit)
    order = np.argsort(-ranking, axis=1, kind="stable")[:, :k]
    selected = np.zeros((n, n), dtype=bool)
    selected[np.repeat(np.arange(n), k), order.ravel()] = True
    selected |= selected.T
    adjacency = np.where(selected, corr, 0.0)
    logger.debug(f"Correlation kNN graph: {n} nodes, k={k}, {np.count_nonzero(adjacency) // 2} edges")
    return GraphSpec(adjacency)


def _normalize_pairs(pairs: Iterable[Pair], n: int, name: str) -> Set[Tuple[int, int]]:
    normalized = set()
    for pair in pairs:
        i, j = (int(v) for v in pair)
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ParameterError(f"Invalid {name} pair ({i}, {j}) for {n} nodes")
        normalized.add((min(i, j), max(i, j)))
    return normalized


def constraint_graphs(S: Iterable[Pair], D: Iterable[Pair], n: int) -> Tuple[GraphSpec, GraphSpec]:
    """Must-link and cannot-link graphs with unit weight on every listed pair"""
    must = _normalize_pairs(S, n, "must-link")
    cannot = _normalize_pairs(D, n, "cannot-link")
    overlap = must & cannot
    if overlap:
        raise InconsistentConstraints(f"Pairs listed as both must-link and cannot-link: {sorted(overlap)[:5]}")

    def build(pairs: Set[Tuple[int, int]]) -> GraphSpec:
        A = np.zeros((n, n))
        for i, j in pairs:
            A[i, j] = A[j, i] = 1.0
        return GraphSpec(A)

    return build(must), build(cannot)


def labeled_subset(n: int, fraction: float, seed: int) -> np.ndarray:
    """Sorted indices of ceil(fraction * n) samples drawn uniformly without replacement"""
    if not 0 <= fraction <= 1:
        raise ParameterError(f"Label fraction must lie in [0, 1], got {fraction}")
    count = int(math.ceil(fraction * n))
    if not count:
        return np.zeros(0, dtype=int)
    return np.sort(np.random.default_rng(seed).choice(n, size=count, replace=False))


def constraints_from_labels(labels: np.ndarray, fraction: float, seed: int) -> Tuple[Set[Pair], Set[Pair]]:
    """
    Must-link and cannot-link pairs from a random labelled subset

    The subset is ``labeled_subset(N, fraction, seed)``; every pair inside it
    becomes a must-link pair when the labels agree and a cannot-link pair
    otherwise.
    """
    labels = np.asarray(labels)
    known = labeled_subset(labels.size, fraction, seed)
    rows, cols = np.triu_indices(known.size, k=1)
    first, second = known[rows], known[cols]
    same = labels[first] == labels[second]
    must = set(zip(first[same].tolist(), second[same].tolist()))
    cannot = set(zip(first[~same].tolist(), second[~same].tolist()))
    logger.info(f"Drew {known.size} labelled samples: {len(must)} must-link, {len(cannot)} cannot-link pairs")
    return must, cannot


def graph_kernel(g: GraphSpec, spec: GraphKernelSpec) -> np.ndarray:
    """
    Graph kernel r^dagger(L) = U r^dagger(Lambda) U^T

    Every eigenvalue lambda of the Laplacian is mapped to 1 / r(lambda), with
    non-finite r mapped to 0. The ``identity`` kind returns L itself so that
    the raw Laplacian regularizer shares the same code path.

    Raises:
        SingularGraphKernel: r vanishes or turns negative on the spectrum
    """
    L = laplacian(g)
    if spec.kind == "identity":
        return L

    def reciprocal_r(eigenvalues: np.ndarray) -> np.ndarray:
        r_values = spec.r(eigenvalues)
        finite = np.isfinite(r_values)
        if np.any(r_values[finite] <= 0):
            worst = float(eigenvalues[finite][np.argmin(r_values[finite])])
            raise SingularGraphKernel(
                f"{spec.kind} kernel: r(lambda) <= 0 at lambda={worst:.4g}; "
                "adjust the kernel parameters to the Laplacian spectrum"
            )
        out = np.zeros_like(r_values)
        out[finite] = 1.0 / r_values[finite]
        return out

    return spectral_apply(L, reciprocal_r)


def load_edge_list(path: Union[str, Path], n_nodes: Optional[int] = None) -> GraphSpec:
    """
    Read an ``i j weight`` edge list (0-based, whitespace separated)

    Each edge is inserted in both directions; repeated listings of the same
    edge must agree within 1e-12.
    """
    path = Path(path)
    edges = {}
    for line_no, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{line_no}: expected 'i j weight', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"{path}: node index is not an integer", row=line_no, column=1)
        try:
            weight = float(parts[2])
        except ValueError:
            raise ParseError(f"{path}: weight is not a number", row=line_no, column=3)
        if i == j:
            raise FormatError(f"{path}:{line_no}: self loop on node {i}")
        if i < 0 or j < 0:
            raise FormatError(f"{path}:{line_no}: negative node index")
        if weight < 0 or not np.isfinite(weight):
            raise FormatError(f"{path}:{line_no}: weight must be finite and nonnegative")
        key = (min(i, j), max(i, j))
        if key in edges and abs(edges[key] - weight) > 1e-12:
            raise FormatError(f"{path}:{line_no}: edge {key} listed with conflicting weights")
        edges[key] = weight

    largest = max((j for _, j in edges), default=-1) + 1
    n = largest if n_nodes is None else int(n_nodes)
    if n < largest:
        raise DimensionError(f"Edge list references node {largest - 1} but the graph has {n} nodes")
    if n < 1:
        raise FormatError(f"{path}: edge list is empty and no node count was given")
    A = np.zeros((n, n))
    for (i, j), weight in edges.items():
        A[i, j] = A[j, i] = weight
    logger.info(f"Loaded graph with {n} nodes and {len(edges)} edges from {path}")
    return GraphSpec(A)


def save_edge_list(path: Union[str, Path], g: GraphSpec) -> None:
    """Write every nonzero upper-triangular edge as ``i j weight``"""
    rows, cols = np.nonzero(np.triu(g.adjacency, k=1))
    lines = [f"{i} {j} {g.adjacency[i, j]:.17g}" for i, j in zip(rows.tolist(), cols.tolist())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
