#!/usr/bin/env python3
"""
Example usage of grad-dr

Walks through the main embeddings on small synthetic datasets and prints
their scores.
"""

import logging

from modules.datasets import gen_gaussian_mixture, gen_swiss_roll, make_two_manifolds
from modules.evaluation import clustering_error, kmeans, knn_preservation, train_test_error
from modules.graphs import (
    GraphKernelSpec,
    constraint_graphs,
    constraints_from_labels,
    correlation_knn_graph,
    graph_kernel,
    laplacian,
)
from modules.kernels import KernelSpec, center_kernel, gram_matrix, kernel_dictionary, mix_kernels
from modules.lneg import lle_embed, lneg_embed
from modules.spectral_embeddings import gkpca, gmkpca, kernel_pca, pca, semisupervised_embed


def main():
    """Example usage of the embedding toolkit"""
    logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    print("🧭 grad-dr - Example Usage")
    print("=" * 60)

    # Example 1: Swiss roll neighbourhoods
    print("\n🌀 Swiss roll, 10-NN preservation:")
    print("-" * 30)
    Y = gen_swiss_roll(400, seed=0).points
    graph = correlation_knn_graph(Y, 15)
    pca_embedding, _ = pca(Y, 2)
    print(f"PCA:  {knn_preservation(Y, pca_embedding, 10):.3f}")
    print(f"LLE:  {knn_preservation(Y, lle_embed(Y, 15, 2), 10):.3f}")
    lneg_embedding = lneg_embed(Y, 15, P=2, d=2, gamma=0.1, g=graph)
    print(f"LNEG: {knn_preservation(Y, lneg_embedding, 10):.3f}")

    # Example 2: Graph-regularized kernel PCA
    print("\n🕸 Graph-regularized kernel PCA:")
    print("-" * 30)
    K = gram_matrix(KernelSpec("gaussian", sigma2=10.0), Y)
    for gamma in (0.0, 0.5, 2.0):
        embedding = gkpca(K, graph, GraphKernelSpec("diffusion"), gamma, 2)
        print(f"gamma={gamma:<4} objective {embedding.objective_trace:.3f}, "
              f"10-NN preservation {knn_preservation(Y, embedding, 10):.3f}")

    # Example 3: Learning the kernel mixture
    print("\n🧪 Multi-kernel learning:")
    print("-" * 30)
    kernels = kernel_dictionary(Y, [0.5, 2.0, 8.0, 32.0])
    result = gmkpca(kernels,
                    [graph_kernel(graph, GraphKernelSpec("regularized_laplacian"))], 0.5, 2)
    print(f"theta = {[round(t, 3) for t in result.theta.tolist()]}")
    print(f"converged={result.converged} after {result.n_iter} iterations")
    mixed = kernel_pca(mix_kernels(kernels, result.theta), 2)
    print(f"kernel PCA on the learned mixture: 10-NN preservation {knn_preservation(Y, mixed, 10):.3f}")

    # Example 4: Two manifolds
    print("\n🔗 Sphere + trefoil clustering error:")
    print("-" * 30)
    data = make_two_manifolds("sphere-trefoil", n1=100, n2=200, D=50, seed=1)
    dense = correlation_knn_graph(data.Y, None)
    for name, embedding in (("PCA", pca(data.Y, 2)[0]),
                            ("LLE", lle_embed(data.Y, 10, 2)),
                            ("LNEG", lneg_embed(data.Y, 10, P=2, d=2, gamma=0.1, g=dense))):
        clusters = kmeans(embedding, 2, restarts=10, seed=1)
        print(f"{name}: {clustering_error(clusters.assignments, data.labels):.3f}")

    # Example 5: Semi-supervised constraints
    print("\n🏷 Semi-supervised embedding:")
    print("-" * 30)
    X, labels = gen_gaussian_mixture(300, 30, separation=3.0, seed=2)
    K = center_kernel(gram_matrix(KernelSpec("linear"), X))
    for fraction in (0.05, 0.2, 0.5):
        must, cannot = constraints_from_labels(labels, fraction, seed=2)
        must_graph, cannot_graph = constraint_graphs(must, cannot, X.shape[1])
        embedding = semisupervised_embed(K, laplacian(must_graph), laplacian(cannot_graph), 0.5, 0.5, 2)
        print(f"{fraction:.0%} labelled: test error {train_test_error(embedding, labels, seed=2):.3f}")

    print("\n✅ Example usage completed!")


if __name__ == "__main__":
    main()
