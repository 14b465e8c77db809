"""
Evaluation Module

K-means clustering of embeddings, label-aligned error rates, a ridge
one-vs-rest classifier, neighbourhood preservation and the seeded Monte
Carlo runner that aggregates repeated experiments.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.linear_model import RidgeClassifier
from sklearn.metrics.cluster import contingency_matrix
from sklearn.model_selection import train_test_split
from sklearn.neighbors import NearestNeighbors

from modules.errors import DimensionError, ParameterError
from modules.parallel import ordered_map

logger = logging.getLogger(__name__)

Metric = Union[float, Mapping[str, float]]


def _as_psi(psi) -> np.ndarray:
    """Accept an Embedding or a raw d x N array"""
    return np.atleast_2d(np.asarray(getattr(psi, "psi", psi), dtype=float))


@dataclass
class ClusteringResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int = 0


def kmeans(psi, K: int, restarts: int = 10, seed: int = 0) -> ClusteringResult:
    """
    Best-of-restarts K-means on the columns of psi

    Each restart runs Lloyd iterations from k-means++ seeding; the restart
    with the smallest inertia is returned. Clusters that empty out during an
    iteration are reseeded at the points farthest from their centres.

    Args:
        psi: Embedding or d x N array
        K: number of clusters, 1 <= K <= N
        restarts: independent seedings, >= 1
        seed: random state of the seedings

    Returns:
        ClusteringResult with 0-based assignments and d x K centroids
    """
    X = _as_psi(psi).T
    n = X.shape[0]
    if not 1 <= int(K) <= n:
        raise ParameterError(f"Need 1 <= K <= N clusters, got K={K}, N={n}")
    if int(restarts) < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")
    model = KMeans(n_clusters=int(K), init="k-means++", n_init=int(restarts),
                   random_state=seed, algorithm="lloyd").fit(X)
    assignments = model.labels_.astype(int)
    centroids = model.cluster_centers_.T.copy()
    inertia = float(((X - model.cluster_centers_[assignments]) ** 2).sum())
    logger.debug(f"K-means with K={K}: inertia {inertia:.6g} after {model.n_iter_} iterations")
    return ClusteringResult(assignments=assignments, centroids=centroids,
                            inertia=inertia, n_iter=int(model.n_iter_))


def clustering_error(assignments, labels) -> float:
    """
    Fraction of samples misclustered under the best cluster-to-label matching

    The matching maximizes agreement over the contingency table with the
    Hungarian algorithm, so the error is invariant to cluster relabeling.
    """
    assignments = np.asarray(assignments).ravel()
    labels = np.asarray(labels).ravel()
    if assignments.size != labels.size:
        raise DimensionError(f"{assignments.size} assignments for {labels.size} labels")
    if labels.size == 0:
        raise ParameterError("Cannot score an empty assignment")
    table = contingency_matrix(labels, assignments)
    rows, cols = linear_sum_assignment(table, maximize=True)
    correct = int(table[rows, cols].sum())
    return 1.0 - correct / labels.size


@dataclass
class LinearClassifier:
    """Ridge one-vs-rest least-squares classifier on embedding columns"""
    classes: np.ndarray
    ridge: float
    model: Optional[RidgeClassifier] = None

    def predict(self, psi) -> np.ndarray:
        return linear_classifier_predict(self, psi)


def linear_classifier_fit(psi_train, labels_train, ridge: float = 1.0) -> LinearClassifier:
    """Fit on (+1, -1) one-vs-rest targets with an l2 penalty ``ridge``"""
    if not ridge > 0:
        raise ParameterError(f"ridge must be positive, got {ridge}")
    X = _as_psi(psi_train).T
    y = np.asarray(labels_train).ravel()
    if X.shape[0] != y.size:
        raise DimensionError(f"{X.shape[0]} training columns for {y.size} labels")
    classes = np.unique(y)
    if classes.size == 1:
        return LinearClassifier(classes=classes, ridge=float(ridge))
    model = RidgeClassifier(alpha=float(ridge), solver="cholesky").fit(X, y)
    return LinearClassifier(classes=classes, ridge=float(ridge), model=model)


def linear_classifier_predict(model: LinearClassifier, psi) -> np.ndarray:
    X = _as_psi(psi).T
    if model.model is None:
        return np.full(X.shape[0], model.classes[0])
    return model.model.predict(X)


def train_test_error(psi, labels, train_fraction: float = 0.8, ridge: float = 1.0, seed: int = 0,
                     train_only: Optional[Sequence[int]] = None) -> float:
    """
    Test error of the ridge classifier on a random train/test split

    The split is stratified by label whenever every class has at least two
    members. Samples listed in ``train_only`` (labels already used to build
    the embedding) are kept out of the split and always train.
    """
    if not 0 < train_fraction < 1:
        raise ParameterError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    X = _as_psi(psi)
    y = np.asarray(labels).ravel()
    if X.shape[1] != y.size:
        raise DimensionError(f"{X.shape[1]} embedding columns for {y.size} labels")
    fixed = np.unique(np.asarray(train_only if train_only is not None else [], dtype=int))
    if fixed.size and (fixed[0] < 0 or fixed[-1] >= y.size):
        raise ParameterError(f"train_only indices must lie in [0, {y.size})")
    pool = np.setdiff1d(np.arange(y.size), fixed)
    if pool.size < 2:
        raise DimensionError(f"Only {pool.size} samples left to split after excluding train_only")
    _, counts = np.unique(y[pool], return_counts=True)
    stratify = y[pool] if counts.min() >= 2 else None
    train_idx, test_idx = train_test_split(pool, train_size=train_fraction, random_state=seed, stratify=stratify)
    train_idx = np.concatenate([fixed, train_idx])
    model = linear_classifier_fit(X[:, train_idx], y[train_idx], ridge=ridge)
    predicted = linear_classifier_predict(model, X[:, test_idx])
    return float(np.mean(predicted != y[test_idx]))



def _neighbor_sets(X: np.ndarray, k: int) -> np.ndarray:
    return NearestNeighbors(n_neighbors=k).fit(X.T).kneighbors(return_distance=False)


def knn_preservation(Y_high, psi, k: int) -> float:
    """Mean fraction of each sample's k nearest neighbours kept by the embedding"""
    Y_high = np.atleast_2d(np.asarray(Y_high, dtype=float))
    low = _as_psi(psi)
    n = Y_high.shape[1]
    if low.shape[1] != n:
        raise DimensionError(f"Embedding has {low.shape[1]} samples, data has {n}")
    if not 1 <= int(k) < n:
        raise ParameterError(f"Need 1 <= k < N neighbours, got k={k}, N={n}")
    high_sets = _neighbor_sets(Y_high, int(k))
    low_sets = _neighbor_sets(low, int(k))
    overlaps = [np.intersect1d(a, b, assume_unique=True).size for a, b in zip(high_sets, low_sets)]
    return float(np.mean(overlaps) / k)


@dataclass
class MonteCarloReport:
    """Per-trial records and their aggregate"""
    experiment: str
    params: Dict[str, Any]
    per_trial: List[Dict[str, Any]]
    mean: Any
    std: Any
    failures: int
    wall_time_ms: float = 0.0
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        extra = data.pop("extra")
        data.update(extra)
        return data


def _mean_std(values: List[float]):
    if not values:
        return None, None
    if all(v == values[0] for v in values):
        return float(values[0]), 0.0
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1))


def _aggregate(metrics: List[Metric]):
    if not metrics:
        return None, None
    if isinstance(metrics[0], Mapping):
        means, stds = {}, {}
        for key in metrics[0]:
            means[key], stds[key] = _mean_std([float(m[key]) for m in metrics])
        return means, stds
    return _mean_std([float(m) for m in metrics])


def monte_carlo(run: Callable[[int], Metric], trials: int, base_seed: int = 0,
                experiment: str = "experiment", params: Optional[Dict[str, Any]] = None,
                workers: Optional[int] = None) -> MonteCarloReport:
    """
    Repeat a seeded experiment and aggregate its metric

    Trial t calls ``run(base_seed + t)``. Trials run on the worker pool but
    are recorded and aggregated in trial order. A trial that raises is kept
    in ``per_trial`` with its error and excluded from the mean and the
    sample standard deviation.

    Args:
        run: seed -> float metric, or a mapping of named float metrics
        trials: number of trials, >= 1
        base_seed: seed of trial 0
        experiment: name echoed in the report
        params: resolved parameters echoed in the report
        workers: thread budget (GRAD_DR_THREADS when None)
    """
    if int(trials) < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")

    def one_trial(t: int) -> Dict[str, Any]:
        seed = base_seed + t
        try:
            return {"trial": t, "seed": seed, "ok": True, "metric": run(seed)}
        except Exception as e:
            logger.warning(f"Trial {t} (seed {seed}) of {experiment} failed: {e}")
            return {"trial": t, "seed": seed, "ok": False, "error": f"{type(e).__name__}: {e}"}

    started = time.perf_counter()
    records = ordered_map(one_trial, range(int(trials)), workers)
    wall_time_ms = (time.perf_counter() - started) * 1000.0

    successes = [r["metric"] for r in records if r["ok"]]
    mean, std = _aggregate(successes)
    per_trial = []
    for record in records:
        entry = {"trial": record["trial"], "seed": record["seed"]}
        if record["ok"]:
            metric = record["metric"]
            entry["value"] = dict(metric) if isinstance(metric, Mapping) else float(metric)
        else:
            entry["error"] = record["error"]
        per_trial.append(entry)
    failures = len(records) - len(successes)
    logger.info(f"{experiment}: {len(successes)}/{len(records)} trials succeeded in {wall_time_ms:.0f} ms")
    return MonteCarloReport(experiment=experiment, params=dict(params or {}), per_trial=per_trial,
                            mean=mean, std=std, failures=failures, wall_time_ms=wall_time_ms)
