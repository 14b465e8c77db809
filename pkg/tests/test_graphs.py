"""Tests for graph construction, Laplacians and graph kernels"""

import numpy as np
import pytest

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
from modules.graphs import (
    GraphKernelSpec,
    GraphSpec,
    constraint_graphs,
    constraints_from_labels,
    correlation_knn_graph,
    graph_kernel,
    labeled_subset,
    laplacian,
    load_edge_list,
    save_edge_list,
)
from modules.kernels import validate_kernel_matrix
from modules.linalg_core import sym_eig
from tests.helpers import path_graph, random_graph

EDGE = GraphSpec(np.array([[0.0, 1.0], [1.0, 0.0]]))


class TestGraphSpec:
    def test_properties(self):
        g = path_graph(4)
        assert g.n_nodes == 4
        assert g.n_edges == 3
        np.testing.assert_array_equal(g.degrees, [1, 2, 2, 1])

    def test_empty(self):
        assert GraphSpec.empty(3).n_edges == 0

    @pytest.mark.parametrize("adjacency", [
        [[0.0, 1.0], [0.0, 0.0]],
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, -1.0], [-1.0, 0.0]],
        [[0.0, 1.0, 0.0]],
    ])
    def test_rejects_invalid_adjacency(self, adjacency):
        with pytest.raises(InvalidMatrix):
            GraphSpec(np.array(adjacency))


class TestLaplacian:
    def test_path(self):
        np.testing.assert_allclose(laplacian(path_graph(3)), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_edgeless(self):
        np.testing.assert_array_equal(laplacian(GraphSpec.empty(4)), np.zeros((4, 4)))

    def test_single_edge_spectrum(self):
        np.testing.assert_allclose(sym_eig(laplacian(EDGE)).eigenvalues, [2.0, 0.0], atol=1e-14)

    def test_rows_sum_to_zero_and_psd(self, rng):
        L = laplacian(random_graph(rng, 25))
        np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
        assert sym_eig(L).eigenvalues[-1] >= -1e-10


class TestCorrelationGraph:
    def test_identical_columns(self):
        g = correlation_knn_graph(np.array([[1.0, 1.0], [2.0, 2.0]]), k=1)
        assert g.n_edges == 1
        assert g.adjacency[0, 1] == pytest.approx(1.0)

    def test_orthogonal_columns(self):
        g = correlation_knn_graph(np.eye(2), k=1)
        assert g.n_edges == 0

    def test_collinear_columns_form_complete_graph(self):
        g = correlation_knn_graph(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]), k=2)
        assert g.n_edges == 3
        np.testing.assert_allclose(g.adjacency[np.triu_indices(3, k=1)], 1.0)

    def test_negative_correlation_is_clamped(self):
        g = correlation_knn_graph(np.array([[1.0, -1.0]]), k=1)
        assert g.n_edges == 0

    def test_knn_sparsity_and_symmetry(self, rng):
        Y = rng.standard_normal((6, 40)) + 2.0
        k = 4
        g = correlation_knn_graph(Y, k=k)
        assert np.array_equal(g.adjacency, g.adjacency.T)
        assert np.count_nonzero(g.adjacency) <= 2 * k * 40
        assert np.all(np.count_nonzero(g.adjacency, axis=1) >= k)

    def test_dense_graph(self, rng):
        Y = np.abs(rng.standard_normal((3, 10))) + 0.1
        g = correlation_knn_graph(Y)
        assert g.n_edges == 45

    def test_zero_column(self):
        with pytest.raises(DegenerateSample):
            correlation_knn_graph(np.array([[1.0, 0.0, 2.0]]), k=1)

    def test_k_out_of_range(self, rng):
        with pytest.raises(ParameterError):
            correlation_knn_graph(rng.standard_normal((2, 5)), k=5)


class TestConstraintGraphs:
    def test_single_must_link(self):
        must, cannot = constraint_graphs({(0, 1)}, set(), 3)
        np.testing.assert_array_equal(must.adjacency, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
        assert cannot.n_edges == 0

    def test_no_constraints(self):
        must, cannot = constraint_graphs([], [], 4)
        assert must.n_edges == cannot.n_edges == 0

    def test_pair_order_is_irrelevant(self):
        must, _ = constraint_graphs([(2, 0), (0, 2)], [], 3)
        assert must.n_edges == 1

    def test_overlap(self):
        with pytest.raises(InconsistentConstraints):
            constraint_graphs([(0, 1)], [(1, 0)], 3)

    @pytest.mark.parametrize("pair", [(0, 0), (0, 3), (-1, 1)])
    def test_invalid_pair(self, pair):
        with pytest.raises(ParameterError):
            constraint_graphs([pair], [], 3)

    def test_from_labels_full_fraction(self):
        must, cannot = constraints_from_labels(np.array([0, 0, 1, 1]), 1.0, seed=0)
        assert must == {(0, 1), (2, 3)}
        assert cannot == {(0, 2), (0, 3), (1, 2), (1, 3)}

    def test_from_labels_zero_fraction(self):
        assert constraints_from_labels(np.array([0, 1, 0]), 0.0, seed=3) == (set(), set())

    def test_from_labels_is_seeded(self):
        labels = np.arange(40) % 3
        assert constraints_from_labels(labels, 0.3, seed=5) == constraints_from_labels(labels, 0.3, seed=5)

    def test_from_labels_subset_size(self):
        must, cannot = constraints_from_labels(np.arange(10) % 2, 0.5, seed=1)
        assert len(must) + len(cannot) == 10

    def test_pairs_stay_inside_labeled_subset(self):
        labels = np.arange(30) % 2
        known = labeled_subset(30, 0.2, seed=4)
        assert known.size == 6
        assert np.all(np.diff(known) > 0)
        must, cannot = constraints_from_labels(labels, 0.2, seed=4)
        assert {i for pair in must | cannot for i in pair} == set(known.tolist())

    def test_labeled_subset_fraction_out_of_range(self):
        with pytest.raises(ParameterError):
            labeled_subset(10, 1.5, seed=0)


class TestGraphKernel:
    def test_identity_returns_laplacian(self):
        g = path_graph(4)
        np.testing.assert_array_equal(graph_kernel(g, GraphKernelSpec("identity")), laplacian(g))

    def test_regularized_laplacian(self):
        K = graph_kernel(EDGE, GraphKernelSpec("regularized_laplacian", sigma2=1.0))
        np.testing.assert_allclose(K, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)

    def test_diffusion_without_bandwidth(self, rng):
        K = graph_kernel(random_graph(rng, 6), GraphKernelSpec("diffusion", sigma2=0.0))
        np.testing.assert_allclose(K, np.eye(6), atol=1e-12)

    def test_bandlimited_unit_beta(self, rng):
        K = graph_kernel(random_graph(rng, 6), GraphKernelSpec("bandlimited", beta=1.0, B=2))
        np.testing.assert_allclose(K, np.eye(6), atol=1e-12)

    def test_random_walk_single_step(self):
        K = graph_kernel(EDGE, GraphKernelSpec("p_step_random_walk", a=3.0, p=1))
        np.testing.assert_allclose(K, [[2.0, 1.0], [1.0, 2.0]], atol=1e-12)

    def test_random_walk_is_matrix_power(self, rng):
        g = random_graph(rng, 8)
        a = 2.0 + 2.0 * g.degrees.max()
        K = graph_kernel(g, GraphKernelSpec("p_step_random_walk", a=a, p=2))
        shifted = a * np.eye(8) - laplacian(g)
        np.testing.assert_allclose(K, shifted @ shifted, atol=1e-9 * a * a)

    def test_regularized_laplacian_is_resolvent(self, rng):
        g = random_graph(rng, 7)
        K = graph_kernel(g, GraphKernelSpec("regularized_laplacian", sigma2=0.5))
        np.testing.assert_allclose(K, np.linalg.inv(np.eye(7) + 0.5 * laplacian(g)), atol=1e-10)

    def test_disconnected_graph_is_block_diagonal(self):
        A = np.zeros((4, 4))
        A[0, 1] = A[1, 0] = 1.0
        A[2, 3] = A[3, 2] = 2.0
        K = graph_kernel(GraphSpec(A), GraphKernelSpec("diffusion", sigma2=1.0))
        np.testing.assert_allclose(K[:2, 2:], 0.0, atol=1e-12)

    @pytest.mark.parametrize("spec", [
        GraphKernelSpec("diffusion", sigma2=0.7),
        GraphKernelSpec("regularized_laplacian", sigma2=2.0),
        GraphKernelSpec("bandlimited", beta=3.0, B=3),
    ])
    def test_kernels_are_psd(self, rng, spec):
        validate_kernel_matrix(graph_kernel(random_graph(rng, 12), spec))

    def test_random_walk_beyond_spectrum(self):
        complete = GraphSpec(np.ones((3, 3)) - np.eye(3))
        with pytest.raises(SingularGraphKernel):
            graph_kernel(complete, GraphKernelSpec("p_step_random_walk", a=2.0, p=1))

    @pytest.mark.parametrize("kwargs", [
        {"kind": "heat"},
        {"kind": "diffusion", "sigma2": -1.0},
        {"kind": "p_step_random_walk", "a": 1.0},
        {"kind": "bandlimited", "beta": 0.0},
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ParameterError):
            GraphKernelSpec(**kwargs)

    def test_describe(self):
        assert GraphKernelSpec("p_step_random_walk", a=3.0, p=2).describe() == {
            "kind": "p_step_random_walk", "a": 3.0, "p": 2}


class TestEdgeList:
    def test_round_trip(self, tmp_path, rng):
        g = random_graph(rng, 9)
        path = tmp_path / "graph.txt"
        save_edge_list(path, g)
        loaded = load_edge_list(path, n_nodes=9)
        np.testing.assert_array_equal(loaded.adjacency, g.adjacency)

    def test_comments_and_node_count(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("# path\n0 1 1.0\n\n1 2 0.5  # tail\n")
        g = load_edge_list(path)
        assert g.n_nodes == 3
        assert g.adjacency[2, 1] == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_edge_list(tmp_path / "absent.txt")

    def test_self_loop(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("1 1 1.0\n")
        with pytest.raises(FormatError):
            load_edge_list(path)

    def test_bad_weight(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("0 1 1.0\n1 2 heavy\n")
        with pytest.raises(ParseError) as info:
            load_edge_list(path)
        assert info.value.row == 2
        assert info.value.column == 3

    def test_node_beyond_count(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("0 4 1.0\n")
        with pytest.raises(DimensionError):
            load_edge_list(path, n_nodes=3)

    def test_conflicting_weights(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("0 1 1.0\n1 0 2.0\n")
        with pytest.raises(FormatError):
            load_edge_list(path)
