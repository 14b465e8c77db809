"""
Experiment Orchestration Module

Turns a resolved ExperimentConfig into kernels, graphs and a solver call, and
runs the reproducible benchmark pipelines: two-manifold clustering, swiss
roll neighbourhood preservation, the semi-supervised label-fraction trend,
the primal versus dual PCA timing and the kernel-on-graph classification and
clustering sweeps over the embedding dimension.
"""

import logging
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.preprocessing import normalize

from modules.config_manager import ExperimentConfig
from modules.datasets import TWO_MANIFOLD_KINDS, gen_gaussian_mixture, gen_swiss_roll, make_two_manifolds
from modules.errors import ConfigError, DimensionError
from modules.evaluation import clustering_error, kmeans, knn_preservation, monte_carlo, train_test_error
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
)
from modules.kernels import KernelSpec, center_kernel, gaussian_bandwidths, gram_matrix, kernel_dictionary
from modules.lneg import lle_embed, lneg_embed
from modules.linalg_core import center_columns
from modules.spectral_embeddings import (
    Embedding,
    dual_pca,
    gkpca,
    gmkpca,
    gmkpca_multigraph,
    graph_pca,
    kernel_pca,
    multimodal_embed,
    pca,
    semisupervised_embed,
)

logger = logging.getLogger(__name__)

CLUSTERING_KS = (5, 10, 20, 30, 40)
CLUSTERING_METHODS = ("pca", "lle", "lne", "lneg")
CLASSIFICATION_METHODS = ("pca", "kpca", "gkpca")
KERNEL_CLUSTERING_METHODS = ("kpca", "gpca", "gkpca", "gmkpca")
SWEEP_DIMENSIONS = (2, 4, 6, 8, 10)


def build_kernels(config: ExperimentConfig, Y: np.ndarray) -> List[np.ndarray]:
    """Data kernel(s): a Gaussian dictionary when configured, else the single configured kernel"""
    if config.dictionary:
        kernels = kernel_dictionary(Y, config.dictionary)
    else:
        kernels = [gram_matrix(config.kernel, Y)]
    if config.center_kernel:
        kernels = [center_kernel(K) for K in kernels]
    return kernels


def build_graphs(config: ExperimentConfig, Y: np.ndarray, labels: Optional[np.ndarray] = None) -> List[GraphSpec]:
    """
    Graphs named by config.graph_source

    ``constraints`` returns the must-link and cannot-link graphs, in that
    order, drawn from ``labels``.
    """
    n = Y.shape[1]
    source = config.graph_source
    if source == "none":
        return []
    if source == "file":
        return [load_edge_list(path, n_nodes=n) for path in config.graph_files]
    if source == "knn":
        return [correlation_knn_graph(Y, config.graph_k)]
    if source == "dense":
        return [correlation_knn_graph(Y, None)]
    if labels is None:
        raise ConfigError("graph.source=constraints needs a labels file")
    if len(labels) != n:
        raise DimensionError(f"{len(labels)} labels for {n} samples")
    must, cannot = constraints_from_labels(labels, config.label_fraction, config.seed)
    return list(constraint_graphs(must, cannot, n))


def run_method(config: ExperimentConfig, Y: np.ndarray, labels: Optional[np.ndarray] = None,
               graphs: Optional[Sequence[GraphSpec]] = None) -> Tuple[Embedding, Dict[str, Any]]:
    """
    Compute the embedding selected by config.method

    Args:
        config: resolved experiment configuration
        Y: D x N data matrix
        labels: sample labels, needed by the constraint graph source
        graphs: prebuilt graphs overriding config.graph_source

    Returns:
        (embedding, metadata) where metadata holds the method, resolved
        parameters, objective, eigenvalues, mixture weights and wall time
    """
    started = time.perf_counter()
    method = config.method
    d = config.d
    workers = config.workers or None
    graphs = list(graphs) if graphs is not None else build_graphs(config, Y, labels)
    if method == "lneg" and not graphs and config.gamma > 0:
        logger.info("No graph configured for lneg, using the dense correlation graph")
        graphs = [correlation_knn_graph(Y, None)]
    logger.info(f"Running {method} with d={d} on {Y.shape[1]} samples of dimension {Y.shape[0]}")

    theta = beta = None
    if method == "pca":
        embedding, _ = pca(Y, d)
    elif method == "dual_pca":
        embedding = dual_pca(gram_matrix(KernelSpec("linear"), center_columns(Y)), d)
    elif method == "gpca":
        embedding = graph_pca(Y, graphs[0], config.gamma, d)
    elif method == "kpca":
        embedding = kernel_pca(build_kernels(config, Y)[0], d)
    elif method == "gkpca":
        embedding = gkpca(build_kernels(config, Y)[0], graphs[0], config.graph_kernels[0],
                          config.gamma, d, mode=config.mode)
    elif method in ("gmkpca", "multimodal"):
        layer_kernels = [graph_kernel(g, spec) for g in graphs for spec in config.graph_kernels]
        if method == "multimodal":
            embedding = multimodal_embed(layer_kernels, d)
        else:
            solver = gmkpca_multigraph if len(layer_kernels) > 1 else gmkpca
            result = solver(build_kernels(config, Y), layer_kernels, config.gamma, d,
                            max_iter=config.max_iter, tol=config.tol, learn_beta=config.learn_beta)
            embedding = result.embedding
            theta = result.theta.tolist()
            beta = result.beta.tolist() if result.beta is not None else None
    elif method == "semisup":
        must_graph, cannot_graph = graphs[0], graphs[1]
        embedding = semisupervised_embed(build_kernels(config, Y)[0], laplacian(must_graph),
                                         laplacian(cannot_graph), config.gamma1, config.gamma2, d)
    elif method == "lle":
        embedding = lle_embed(Y, config.k, d, workers=workers)
    else:
        embedding = lneg_embed(Y, config.k, P=config.P, l1_weight=config.l1_weight, d=d,
                               gamma=config.gamma if method == "lneg" else 0.0,
                               g=graphs[0] if method == "lneg" and graphs else None,
                               collapse=config.collapse, max_iter=config.ista_max_iter,
                               tol=config.ista_tol, workers=workers)

    metadata = {
        "method": method,
        "params": config.to_dict(),
        "objective_trace": float(embedding.objective_trace),
        "eigenvalues": np.asarray(embedding.eigenvalues).tolist(),
        "normalized": embedding.normalized,
        "theta": theta,
        "beta": beta,
        "info": embedding.info,
        "wall_time_ms": (time.perf_counter() - started) * 1000.0,
    }
    return embedding, metadata


def _manifold_config(method: str, k: int, d: int, P: int, l1_weight: float, gamma: float) -> ExperimentConfig:
    source = "dense" if method == "lneg" else "none"
    return ExperimentConfig(method=method, d=d, k=k, P=P, l1_weight=l1_weight, gamma=gamma,
                            graph_source=source, workers=1)


def manifold_clustering(seed: int = 1, trials: int = 10, ks: Sequence[int] = CLUSTERING_KS, restarts: int = 10,
                        datasets: Sequence[str] = TWO_MANIFOLD_KINDS, n1: int = 200, n2: int = 400,
                        D: int = 100, noise_sigma2: float = 0.01, d: int = 2, P: int = 2,
                        l1_weight: float = 0.01, gamma: float = 0.1,
                        workers: Optional[int] = None) -> Dict[str, Any]:
    """
    Two-manifold clustering error of PCA, LLE, LNE and LNEG per neighbourhood size

    Every trial draws a fresh dataset, embeds it with each method, clusters
    the embedding with K-means (K = 2) and scores the aligned error. Cells are
    then checked against the ordinal bands LNEG <= LNE <= LLE + 0.05 and
    LNEG <= PCA - 0.10 (sphere-trefoil, k >= 10) and LNEG <= PCA - 0.15
    (plane-hole-trefoil).
    """
    cells = []
    bands = []
    started = time.perf_counter()
    for kind in datasets:
        for k in ks:
            def trial(trial_seed: int, kind=kind, k=k) -> Dict[str, float]:
                data = make_two_manifolds(kind, n1=n1, n2=n2, D=D, noise_sigma2=noise_sigma2, seed=trial_seed)
                errors = {}
                for method in CLUSTERING_METHODS:
                    config = _manifold_config(method, k, d, P, l1_weight, gamma)
                    embedding, _ = run_method(config, data.Y)
                    clusters = kmeans(embedding, 2, restarts=restarts, seed=trial_seed)
                    errors[method] = clustering_error(clusters.assignments, data.labels)
                return errors

            report = monte_carlo(trial, trials, base_seed=seed, experiment=f"clustering/{kind}/k={k}",
                                 params={"dataset": kind, "k": k}, workers=workers)
            cells.append({"dataset": kind, "k": k, **report.to_dict()})
            if report.mean is not None:
                bands.extend(_clustering_bands(kind, k, report.mean))

    return {
        "experiment": "clustering",
        "params": {"seed": seed, "trials": trials, "ks": list(ks), "restarts": restarts, "n1": n1, "n2": n2,
                   "D": D, "noise_sigma2": noise_sigma2, "d": d, "P": P, "l1_weight": l1_weight, "gamma": gamma},
        "cells": cells,
        "bands": bands,
        "passed": all(b["passed"] for b in bands),
        "wall_time_ms": (time.perf_counter() - started) * 1000.0,
    }


def _clustering_bands(kind: str, k: int, mean: Dict[str, float]) -> List[Dict[str, Any]]:
    checks = []
    if kind == "sphere-trefoil" and k >= 10:
        checks.append(("lneg <= lne", mean["lneg"] <= mean["lne"]))
        checks.append(("lne <= lle + 0.05", mean["lne"] <= mean["lle"] + 0.05))
        checks.append(("lneg <= pca - 0.10", mean["lneg"] <= mean["pca"] - 0.10))
    elif kind == "plane-hole-trefoil":
        checks.append(("lneg <= pca - 0.15", mean["lneg"] <= mean["pca"] - 0.15))
    return [{"dataset": kind, "k": k, "check": name, "passed": bool(ok)} for name, ok in checks]


def swissroll_preservation(seed: int = 0, trials: int = 10, n: int = 600, k: int = 20, P: int = 2,
                           gamma: float = 0.1, knn: int = 10, d: int = 2, l1_weight: float = 0.01,
                           workers: Optional[int] = None) -> Dict[str, Any]:
    """k-NN preservation of PCA, LLE and LNEG embeddings of the swiss roll"""

    def trial(trial_seed: int) -> Dict[str, float]:
        Y = gen_swiss_roll(n, trial_seed).points
        graph = correlation_knn_graph(Y, k)
        scores = {}
        for method in ("pca", "lle", "lneg"):
            config = _manifold_config(method, k, d, P, l1_weight, gamma)
            embedding, _ = run_method(config, Y, graphs=[graph])
            scores[method] = knn_preservation(Y, embedding, knn)
        return scores

    report = monte_carlo(trial, trials, base_seed=seed, experiment="swissroll",
                         params={"n": n, "k": k, "P": P, "gamma": gamma, "knn": knn, "d": d},
                         workers=workers)
    result = report.to_dict()
    if report.mean is not None:
        result["bands"] = [
            {"check": "lneg > pca", "passed": bool(report.mean["lneg"] > report.mean["pca"])},
            {"check": "lle > pca", "passed": bool(report.mean["lle"] > report.mean["pca"])},
        ]
        result["passed"] = all(b["passed"] for b in result["bands"])
    return result


def semisupervised_trend(seed: int = 0, trials: int = 20, fractions: Sequence[float] = (0.05, 0.2, 0.5),
                         d: int = 2, n: int = 400, D: int = 50, gamma1: float = 0.5, gamma2: float = 0.5,
                         sigma2: float = 1.0, separation: float = 3.0,
                         workers: Optional[int] = None) -> Dict[str, Any]:
    """
    Classifier test error of the semi-supervised embedding per label fraction

    Samples are scaled to unit norm and embedded with a centered Gaussian
    kernel of bandwidth sigma2. The labelled subset that feeds the constraint
    graphs always trains the classifier and is never scored. The mean error
    should not increase with the fraction by more than one standard error.
    """
    fractions = [float(p) for p in fractions]

    def trial(trial_seed: int) -> Dict[str, float]:
        Y, labels = gen_gaussian_mixture(n, D, separation=separation, seed=trial_seed)
        K = center_kernel(gram_matrix(KernelSpec("gaussian", sigma2=sigma2), normalize(Y, axis=0)))
        errors = {}
        for p in fractions:
            must, cannot = constraints_from_labels(labels, p, trial_seed)
            must_graph, cannot_graph = constraint_graphs(must, cannot, n)
            embedding = semisupervised_embed(K, laplacian(must_graph), laplacian(cannot_graph), gamma1, gamma2, d)
            errors[f"p={p:g}"] = train_test_error(embedding, labels, seed=trial_seed,
                                                  train_only=labeled_subset(n, p, trial_seed))
        return errors

    report = monte_carlo(trial, trials, base_seed=seed, experiment="semisup",
                         params={"fractions": fractions, "d": d, "n": n, "D": D, "gamma1": gamma1,
                                 "gamma2": gamma2, "sigma2": sigma2, "separation": separation},
                         workers=workers)
    result = report.to_dict()
    if report.mean is not None:
        successes = max(trials - report.failures, 1)
        keys = [f"p={p:g}" for p in fractions]
        bands = []
        for lower, higher in zip(keys, keys[1:]):
            stderr = max(report.std[lower], report.std[higher]) / np.sqrt(successes)
            bands.append({"check": f"{higher} <= {lower} + stderr",
                          "passed": bool(report.mean[higher] <= report.mean[lower] + stderr)})
        result["bands"] = bands
        result["passed"] = all(b["passed"] for b in bands)
    return result


def dual_runtime(D: int = 2000, N: int = 100, d: int = 5, repeats: int = 5, seed: int = 0) -> Dict[str, Any]:
    """Median wall time of PCA through the D x D covariance versus the N x N Gram matrix"""
    Y = np.random.default_rng(seed).standard_normal(size=(D, N))
    primal_ms, dual_ms = [], []
    for _ in range(repeats):
        started = time.perf_counter()
        pca(Y, d)
        primal_ms.append((time.perf_counter() - started) * 1000.0)

        started = time.perf_counter()
        dual_pca(gram_matrix(KernelSpec("linear"), center_columns(Y)), d)
        dual_ms.append((time.perf_counter() - started) * 1000.0)

    primal, dual = float(np.median(primal_ms)), float(np.median(dual_ms))
    logger.info(f"Primal path {primal:.1f} ms, dual path {dual:.1f} ms (median of {repeats})")
    return {
        "experiment": "runtime",
        "params": {"D": D, "N": N, "d": d, "repeats": repeats, "seed": seed},
        "primal_wall_time_ms": primal,
        "dual_wall_time_ms": dual,
        "passed": dual < primal,
    }


def _side_features(Y: np.ndarray, count: int, noise: float, seed: int) -> np.ndarray:
    """Noisy copies of the first ``count`` coordinates, standing in for annotations shipped with the data"""
    rng = np.random.default_rng([seed, 1])
    return Y[:count] + noise * rng.standard_normal((count, Y.shape[1]))


def _sweep_config(method: str, d: int, sigma2: float, gamma: float,
                  dictionary: Sequence[float] = ()) -> ExperimentConfig:
    return ExperimentConfig(method=method, d=d, kernel=KernelSpec("gaussian", sigma2=sigma2), center_kernel=True,
                            dictionary=list(dictionary) if method == "gmkpca" else [],
                            graph_source="none", graph_kernels=[GraphKernelSpec("regularized_laplacian", sigma2=1.0)],
                            gamma=gamma, mode="reward", workers=1)


def _sweep_table(report, methods: Sequence[str], ds: Sequence[int], suffix: str = "") -> Dict[str, List[float]]:
    """{method: [mean metric at each d]} from a Monte Carlo report keyed 'method/d=..'"""
    if report.mean is None:
        return {}
    return {m: [float(report.mean[f"{m}/d={d}{suffix}"]) for d in ds] for m in methods}


def kernel_classification(seed: int = 0, trials: int = 10, ds: Sequence[int] = SWEEP_DIMENSIONS, n: int = 100,
                          D: int = 1000, separation: float = 3.0, feature_dims: int = 3,
                          feature_noise: float = 0.5, graph_k: int = 10, sigma2: float = 1.0, gamma: float = 1.0,
                          workers: Optional[int] = None) -> Dict[str, Any]:
    """
    Classification error and wall time of PCA, KPCA and GKPCA versus d

    The data are a two-class mixture with D >> N, scaled to unit norm. KPCA
    and GKPCA use a centered Gaussian kernel of bandwidth sigma2; GKPCA adds
    the regularized-Laplacian kernel of a correlation kNN graph built from a
    few noisy side features per sample. Each embedding is scored by the ridge
    classifier on an 80/20 split.
    """
    ds = [int(d) for d in ds]
    started = time.perf_counter()

    def trial(trial_seed: int) -> Dict[str, float]:
        Y, labels = gen_gaussian_mixture(n, D, separation=separation, seed=trial_seed)
        graph = correlation_knn_graph(_side_features(Y, feature_dims, feature_noise, trial_seed), graph_k)
        Y = normalize(Y, axis=0)
        metrics = {}
        for d in ds:
            for method in CLASSIFICATION_METHODS:
                embedding, metadata = run_method(_sweep_config(method, d, sigma2, gamma), Y, graphs=[graph])
                metrics[f"{method}/d={d}"] = train_test_error(embedding, labels, seed=trial_seed)
                metrics[f"{method}/d={d}/ms"] = metadata["wall_time_ms"]
        return metrics

    report = monte_carlo(trial, trials, base_seed=seed, experiment="classification",
                         params={"ds": ds, "n": n, "D": D}, workers=workers)
    errors = _sweep_table(report, CLASSIFICATION_METHODS, ds)
    runtimes = _sweep_table(report, CLASSIFICATION_METHODS, ds, suffix="/ms")
    bands = []
    if errors:
        bands = [
            {"check": "gkpca <= kpca", "passed": bool(np.mean(errors["gkpca"]) <= np.mean(errors["kpca"]))},
            {"check": "kpca faster than pca",
             "passed": bool(np.mean(runtimes["kpca"]) < np.mean(runtimes["pca"]))},
        ]
    return {
        "experiment": "classification",
        "params": {"seed": seed, "trials": trials, "ds": ds, "n": n, "D": D, "separation": separation,
                   "feature_dims": feature_dims, "feature_noise": feature_noise, "graph_k": graph_k,
                   "sigma2": sigma2, "gamma": gamma},
        "error": errors,
        "method_wall_time_ms": runtimes,
        "failures": report.failures,
        "bands": bands,
        "passed": bool(bands) and all(b["passed"] for b in bands),
        "wall_time_ms": (time.perf_counter() - started) * 1000.0,
    }


def kernel_clustering(seed: int = 0, trials: int = 10, ds: Sequence[int] = SWEEP_DIMENSIONS, n: int = 300,
                      D: int = 50, separation: float = 4.0, graph_k: int = 100, dictionary_size: int = 10,
                      restarts: int = 50, sigma2: float = 1.0, gamma: float = 0.1,
                      workers: Optional[int] = None) -> Dict[str, Any]:
    """
    K-means clustering error of KPCA, GPCA, GKPCA and GMKPCA versus d

    Samples of a two-class mixture are scaled to unit norm. The graph links
    every sample to its graph_k most correlated samples. GMKPCA learns the
    mixture of dictionary_size Gaussian kernels with bandwidths equispaced in
    [0.01, 1].
    """
    ds = [int(d) for d in ds]
    dictionary = gaussian_bandwidths(dictionary_size).tolist()
    started = time.perf_counter()

    def trial(trial_seed: int) -> Dict[str, float]:
        Y, labels = gen_gaussian_mixture(n, D, separation=separation, seed=trial_seed)
        Y = normalize(Y, axis=0)
        graph = correlation_knn_graph(Y, graph_k)
        metrics = {}
        for d in ds:
            for method in KERNEL_CLUSTERING_METHODS:
                embedding, _ = run_method(_sweep_config(method, d, sigma2, gamma, dictionary), Y, graphs=[graph])
                clusters = kmeans(embedding, 2, restarts=restarts, seed=trial_seed)
                metrics[f"{method}/d={d}"] = clustering_error(clusters.assignments, labels)
        return metrics

    report = monte_carlo(trial, trials, base_seed=seed, experiment="kernel-clustering",
                         params={"ds": ds, "n": n, "D": D}, workers=workers)
    errors = _sweep_table(report, KERNEL_CLUSTERING_METHODS, ds)
    bands = []
    if errors:
        baseline = float(np.mean(errors["kpca"]))
        bands = [{"check": f"{m} <= kpca + 0.05", "passed": bool(np.mean(errors[m]) <= baseline + 0.05)}
                 for m in ("gkpca", "gmkpca")]
    return {
        "experiment": "kernel-clustering",
        "params": {"seed": seed, "trials": trials, "ds": ds, "n": n, "D": D, "separation": separation,
                   "graph_k": graph_k, "dictionary": dictionary, "restarts": restarts, "sigma2": sigma2,
                   "gamma": gamma},
        "error": errors,
        "failures": report.failures,
        "bands": bands,
        "passed": bool(bands) and all(b["passed"] for b in bands),
        "wall_time_ms": (time.perf_counter() - started) * 1000.0,
    }
