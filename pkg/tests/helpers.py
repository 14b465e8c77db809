"""Shared builders and assertions for the test suite"""

import numpy as np

from modules.graphs import GraphSpec
from modules.linalg_core import projector_distance


def random_psd(rng, n, rank=None):
    """Random symmetric positive semidefinite n x n matrix"""
    A = rng.standard_normal((n, rank or n))
    return A @ A.T


def random_graph(rng, n, density=0.3):
    upper = np.triu(rng.random((n, n)) < density, k=1) * rng.uniform(0.5, 2.0, (n, n))
    return GraphSpec(upper + upper.T)


def path_graph(n):
    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i, i + 1] = A[i + 1, i] = 1.0
    return GraphSpec(A)


def assert_same_subspace(psi_a, psi_b, tol=1e-8):
    distance = projector_distance(psi_a, psi_b)
    assert distance <= tol, f"row spaces differ by {distance:.3e}"


def random_orthonormal_rows(rng, count, d, n):
    """count random d x n matrices with orthonormal rows, shape (count, n, d)"""
    Q, _ = np.linalg.qr(rng.standard_normal((count, n, d)))
    return Q
