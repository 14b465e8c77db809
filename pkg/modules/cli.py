"""
Command Line Module

Entry point binding datasets, solvers and evaluation into reproducible
commands: generate | embed | eval | compare | repro. Results are printed to
stdout as JSON; logs go to stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from modules import __version__
from modules.config_manager import LOG_LEVELS, METHODS, ConfigManager
from modules.datasets import (
    embed_highdim,
    gen_gaussian_mixture,
    gen_plane,
    gen_plane_with_hole,
    gen_sphere,
    gen_swiss_roll,
    gen_trefoil,
    load_csv,
    load_labels,
    make_two_manifolds,
    save_csv,
    save_labels,
)
from modules.errors import DimensionError, GradDRError, UsageError
from modules.evaluation import clustering_error, kmeans, knn_preservation, monte_carlo, train_test_error
from modules.experiments import (
    SWEEP_DIMENSIONS,
    dual_runtime,
    kernel_classification,
    kernel_clustering,
    manifold_clustering,
    run_method,
    semisupervised_trend,
    swissroll_preservation,
)
from modules.kernels import gaussian_bandwidths
from modules.linalg_core import projector_distance
from modules.parallel import resolve_workers

SINGLE_DATASETS = ("swiss-roll", "trefoil", "plane", "plane-with-hole", "sphere")
DATASETS = SINGLE_DATASETS + ("gaussian-mixture", "plane-hole-trefoil", "sphere-trefoil")
REPRO_TARGETS = ("table3", "swissroll", "semisup", "runtime", "classification", "kernel-clustering")


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, tuple)):
        return sorted(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2, default=_json_default)


class GradDRToolkit:
    """Runs one parsed command line"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config_manager = (ConfigManager(args.config, create_missing=args.create_config)
                               if args.config else ConfigManager())
        self.setup_logging()
        validation = self.config_manager.validate_config()
        for warning in validation['warnings']:
            self.logger.warning(warning)

    def setup_logging(self):
        """Setup logging configuration; stdout stays reserved for JSON"""
        configured = str(self.config_manager.get("logging.level", "INFO")).upper()
        level = "DEBUG" if self.args.verbose else (self.args.log_level or configured)
        if level not in LOG_LEVELS:
            level = "INFO"
        log_file = self.args.log_file or self.config_manager.get("logging.file")
        handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
        if log_file:
            handlers.append(logging.FileHandler(log_file))
        logging.basicConfig(
            level=getattr(logging, level.upper()),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=handlers,
            force=True,
        )
        self.logger = logging.getLogger(__name__)

    def run(self) -> int:
        handler = getattr(self, f"cmd_{self.args.command.replace('-', '_')}")
        return handler()

    def emit(self, document: Dict[str, Any], path: Optional[str] = None) -> None:
        text = to_json(document)
        if path:
            Path(path).write_text(text + "\n")
            self.logger.info(f"Wrote {path}")
        print(text)

    # generate

    def cmd_generate(self) -> int:
        """Write CSV data (one sample per row) and a sidecar labels file"""
        args = self.args
        out = Path(args.out)
        labels_path = Path(args.labels) if args.labels else out.with_suffix(".labels")
        params: Dict[str, Any] = {"seed": args.seed}

        if args.dataset in ("plane-hole-trefoil", "sphere-trefoil"):
            D = args.D or 100
            noise = 0.01 if args.noise is None else args.noise
            data = make_two_manifolds(args.dataset, n1=args.n1, n2=args.n2, D=D, noise_sigma2=noise, seed=args.seed)
            Y, labels = data.Y, data.labels
            params.update({"n1": args.n1, "n2": args.n2, "D": D, "noise_sigma2": noise})
        elif args.dataset == "gaussian-mixture":
            D = args.D or 50
            Y, labels = gen_gaussian_mixture(args.n, D, separation=args.separation, seed=args.seed)
            params.update({"n": args.n, "D": D, "separation": args.separation})
        else:
            sample = self._single_manifold(args)
            params.update({"n": args.n})
            if args.D:
                noise = 0.0 if args.noise is None else args.noise
                data = embed_highdim([sample], D=args.D, noise_sigma2=noise, seed=args.seed)
                Y, labels = data.Y, data.labels
                params.update({"D": args.D, "noise_sigma2": noise})
            else:
                Y, labels = sample.points, sample.labels

        save_csv(out, Y)
        save_labels(labels_path, labels)
        self.logger.info(f"Generated {Y.shape[1]} samples of dimension {Y.shape[0]} ({args.dataset})")
        self.emit({"command": "generate", "dataset": args.dataset, "params": params,
                   "outputs": {"data": str(out), "labels": str(labels_path)},
                   "shape": {"samples": Y.shape[1], "features": Y.shape[0]}})
        return 0

    @staticmethod
    def _single_manifold(args):
        if args.dataset == "swiss-roll":
            return gen_swiss_roll(args.n, args.seed)
        if args.dataset == "trefoil":
            return gen_trefoil(args.n, radius_scale=args.radius_scale, seed=args.seed)
        if args.dataset == "plane":
            return gen_plane(args.n, extent=args.extent, seed=args.seed)
        if args.dataset == "plane-with-hole":
            return gen_plane_with_hole(args.n, hole_radius=args.hole_radius, extent=args.extent, seed=args.seed)
        return gen_sphere(args.n, radius=args.radius, seed=args.seed)

    # embed

    def _embed_overrides(self) -> Dict[str, Any]:
        args = self.args
        overrides = {
            "experiment.method": args.method,
            "experiment.d": args.d,
            "experiment.seed": args.seed,
            "experiment.workers": args.workers,
            "kernel.kind": args.kernel,
            "kernel.sigma2": args.sigma2,
            "kernel.degree": args.degree,
            "kernel.offset": args.offset,
            "graph.source": args.graph_source,
            "graph.k": args.graph_k,
            "graph.label_fraction": args.label_fraction,
            "graph_kernel.kind": args.graph_kernel,
            "graph_kernel.sigma2": args.gk_sigma2,
            "graph_kernel.a": args.gk_a,
            "graph_kernel.p": args.gk_p,
            "graph_kernel.beta": args.gk_beta,
            "graph_kernel.B": args.gk_B,
            "regularization.gamma": args.gamma,
            "regularization.gamma1": args.gamma1,
            "regularization.gamma2": args.gamma2,
            "regularization.mode": args.mode,
            "lneg.k": args.k,
            "lneg.P": args.P,
            "lneg.l1_weight": args.l1_weight,
            "lneg.collapse": args.collapse,
            "gmkpca.max_iter": args.max_iter,
            "gmkpca.tol": args.tol,
        }
        if args.center:
            overrides["kernel.center"] = True
        if args.fixed_beta:
            overrides["gmkpca.learn_beta"] = False
        if args.dictionary:
            overrides["kernel.dictionary"] = gaussian_bandwidths(args.dictionary).tolist()
        if args.graph:
            overrides["graph.file"] = list(args.graph)
            if args.graph_source is None:
                overrides["graph.source"] = "file"
        return overrides

    def cmd_embed(self) -> int:
        """Embed a CSV dataset and write the embedding plus metadata"""
        args = self.args
        Y = load_csv(args.input, header=args.header)
        self.config_manager.update(self._embed_overrides())
        config = self.config_manager.experiment()
        labels = load_labels(args.labels, n_samples=Y.shape[1]) if args.labels else None

        embedding, metadata = run_method(config, Y, labels)
        save_csv(args.out, embedding.psi)
        metadata.update({"command": "embed", "input": args.input, "output": args.out,
                         "workers": resolve_workers(config.workers or None)})
        if args.save_config and self.config_manager.save_config(path=args.save_config):
            metadata["config_file"] = args.save_config
        score_k = min(args.score_k, Y.shape[1] - 1)
        if score_k >= 1:
            metadata["knn_preservation"] = {"k": score_k, "score": knn_preservation(Y, embedding, score_k)}
        if args.dump_plot_data:
            self._dump_plot_data(args.dump_plot_data, embedding.psi, labels)
            metadata["plot_data"] = args.dump_plot_data
        self.emit(metadata, args.meta or f"{args.out}.json")
        return 0

    def _dump_plot_data(self, path: str, psi: np.ndarray, labels: Optional[np.ndarray]):
        x = psi[0]
        y = psi[1] if psi.shape[0] > 1 else np.zeros_like(x)
        columns = [x, y]
        header = "x,y"
        if labels is not None:
            columns.append(labels.astype(float))
            header += ",label"
        np.savetxt(path, np.column_stack(columns), delimiter=",", fmt="%.17g", header=header, comments="")
        self.logger.info(f"Plot data written to {path}")

    # eval

    def cmd_eval(self) -> int:
        """Score an embedding CSV against labels or the original data"""
        args = self.args
        psi = load_csv(args.embedding, header=args.header)
        n = psi.shape[1]
        labels = load_labels(args.labels) if args.labels else None
        if labels is not None and labels.size != n:
            raise DimensionError(f"Embedding has {n} samples but {labels.size} labels were given")

        if args.task in ("cluster", "classify") and labels is None:
            raise UsageError(f"--task {args.task} needs --labels")
        if args.task == "cluster":
            K = args.K or int(np.unique(labels).size)

            def trial(seed: int) -> float:
                return clustering_error(kmeans(psi, K, restarts=args.restarts, seed=seed).assignments, labels)
            params = {"K": K, "restarts": args.restarts}
        elif args.task == "classify":
            def trial(seed: int) -> float:
                return train_test_error(psi, labels, train_fraction=args.train_fraction, ridge=args.ridge, seed=seed)
            params = {"train_fraction": args.train_fraction, "ridge": args.ridge}
        else:
            if not args.data:
                raise UsageError("--task knn-preserve needs --data")
            Y = load_csv(args.data, header=args.header)
            if Y.shape[1] != n:
                raise DimensionError(f"Embedding has {n} samples but the data has {Y.shape[1]}")

            def trial(seed: int) -> float:
                return knn_preservation(Y, psi, args.k)
            params = {"k": args.k}

        trials = args.trials or int(self.config_manager.get("experiment.trials", 1))
        params.update({"task": args.task, "trials": trials, "seed": args.seed})
        report = monte_carlo(trial, trials, base_seed=args.seed, experiment=f"eval/{args.task}",
                             params=params, workers=args.workers)
        document = report.to_dict()
        document["command"] = "eval"
        self.emit(document, args.out)
        return 0

    # compare

    def cmd_compare(self) -> int:
        """Projector distance between the row spaces of two embeddings"""
        args = self.args
        a = load_csv(args.a, header=args.header)
        b = load_csv(args.b, header=args.header)
        if a.shape[1] != b.shape[1]:
            raise DimensionError(f"Embeddings have {a.shape[1]} and {b.shape[1]} samples")
        distance = projector_distance(a, b)
        self.emit({"command": "compare", "a": args.a, "b": args.b, "projector_distance": distance,
                   "tol": args.tol, "same_subspace": bool(distance <= args.tol)})
        return 0

    # repro

    def cmd_repro(self) -> int:
        """Run one of the benchmark pipelines and report its acceptance bands"""
        args = self.args
        workers = args.workers
        ds = args.ds or list(SWEEP_DIMENSIONS)
        if args.target == "table3":
            ks = args.ks or [5, 10, 20, 30, 40]
            result = manifold_clustering(seed=args.seed, trials=args.trials or 10, ks=ks,
                                         restarts=args.restarts or 10, workers=workers)
        elif args.target == "swissroll":
            result = swissroll_preservation(seed=args.seed, trials=args.trials or 10, workers=workers)
        elif args.target == "semisup":
            result = semisupervised_trend(seed=args.seed, trials=args.trials or 20, workers=workers)
        elif args.target == "classification":
            result = kernel_classification(seed=args.seed, trials=args.trials or 10, ds=ds, workers=workers)
        elif args.target == "kernel-clustering":
            result = kernel_clustering(seed=args.seed, trials=args.trials or 10, ds=ds,
                                       restarts=args.restarts or 50, workers=workers)
        else:
            result = dual_runtime(repeats=args.trials or 5, seed=args.seed)
        result["command"] = "repro"
        self.emit(result, args.out)
        if not result.get("passed", True):
            self.logger.warning(f"{args.target}: some acceptance bands were not met")
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grad-dr", description="Graph-adaptive dimensionality reduction toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key=value or JSON configuration file")
    parser.add_argument("--create-config", action="store_true",
                        help="write the default configuration to --config when the file does not exist")
    parser.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper)
    parser.add_argument("--log-file", help="also write logs to this file")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--workers", type=int, help="worker threads (default GRAD_DR_THREADS or auto)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset")
    gen.add_argument("dataset", choices=DATASETS)
    gen.add_argument("--out", required=True)
    gen.add_argument("--labels", help="labels file (default: OUT with .labels suffix)")
    gen.add_argument("--n", type=int, default=1000)
    gen.add_argument("--n1", type=int, default=200)
    gen.add_argument("--n2", type=int, default=400)
    gen.add_argument("--D", type=int)
    gen.add_argument("--noise", type=float, help="noise variance of the high-dimensional embedding")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--extent", type=float, default=6.0)
    gen.add_argument("--hole-radius", type=float, default=4.0)
    gen.add_argument("--radius", type=float, default=1.0)
    gen.add_argument("--radius-scale", type=float, default=1.0)
    gen.add_argument("--separation", type=float, default=3.0)

    emb = sub.add_parser("embed", help="compute a low-dimensional embedding")
    emb.add_argument("--input", required=True, help="CSV, one sample per row")
    emb.add_argument("--out", required=True, help="embedding CSV, one sample per row")
    emb.add_argument("--meta", help="metadata JSON (default: OUT.json)")
    emb.add_argument("--header", action="store_true", help="skip the first CSV line")
    emb.add_argument("--labels", help="labels file (constraint graphs, plot data)")
    emb.add_argument("--method", choices=METHODS)
    emb.add_argument("--d", type=int)
    emb.add_argument("--seed", type=int)
    emb.add_argument("--kernel", choices=("linear", "gaussian", "polynomial"))
    emb.add_argument("--sigma2", type=float)
    emb.add_argument("--degree", type=int)
    emb.add_argument("--offset", type=float)
    emb.add_argument("--center", action="store_true", help="double-center the data kernel")
    emb.add_argument("--dictionary", type=int, help="use N equispaced Gaussian bandwidths in [0.01, 1]")
    emb.add_argument("--graph", nargs="+", help="edge-list file(s)")
    emb.add_argument("--graph-source", choices=("none", "file", "knn", "dense", "constraints"))
    emb.add_argument("--graph-k", type=int)
    emb.add_argument("--label-fraction", type=float)
    emb.add_argument("--graph-kernel", nargs="+", choices=("identity", "diffusion", "p_step_random_walk",
                                                           "regularized_laplacian", "bandlimited"))
    emb.add_argument("--gk-sigma2", type=float)
    emb.add_argument("--gk-a", type=float)
    emb.add_argument("--gk-p", type=int)
    emb.add_argument("--gk-beta", type=float)
    emb.add_argument("--gk-B", type=int)
    emb.add_argument("--gamma", type=float)
    emb.add_argument("--gamma1", type=float)
    emb.add_argument("--gamma2", type=float)
    emb.add_argument("--mode", choices=("reward", "penalty"))
    emb.add_argument("--k", type=int, help="neighbours for lle / lne / lneg")
    emb.add_argument("--P", type=int, help="polynomial order for lne / lneg")
    emb.add_argument("--l1-weight", type=float)
    emb.add_argument("--collapse", choices=("sum", "l2"))
    emb.add_argument("--max-iter", type=int)
    emb.add_argument("--tol", type=float)
    emb.add_argument("--fixed-beta", action="store_true", help="keep graph weights equal in gmkpca")
    emb.add_argument("--score-k", type=int, default=10, help="k of the reported neighbourhood preservation")
    emb.add_argument("--dump-plot-data", metavar="PATH", help="write x,y[,label] CSV of the first two coordinates")
    emb.add_argument("--save-config", metavar="PATH", help="write the resolved configuration as a reusable file")

    ev = sub.add_parser("eval", help="score an embedding")
    ev.add_argument("--embedding", required=True)
    ev.add_argument("--labels")
    ev.add_argument("--data", help="original data CSV for knn-preserve")
    ev.add_argument("--header", action="store_true")
    ev.add_argument("--task", choices=("cluster", "classify", "knn-preserve"), default="cluster")
    ev.add_argument("--K", type=int, help="clusters (default: number of distinct labels)")
    ev.add_argument("--restarts", type=int, default=10)
    ev.add_argument("--trials", type=int, help="Monte Carlo trials (default experiment.trials)")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--k", type=int, default=10)
    ev.add_argument("--ridge", type=float, default=1.0)
    ev.add_argument("--train-fraction", type=float, default=0.8)
    ev.add_argument("--out", help="also write the JSON report here")

    cmp_ = sub.add_parser("compare", help="compare the row spaces of two embeddings")
    cmp_.add_argument("--a", required=True)
    cmp_.add_argument("--b", required=True)
    cmp_.add_argument("--tol", type=float, default=1e-8)
    cmp_.add_argument("--header", action="store_true")

    rep = sub.add_parser("repro", help="run a benchmark pipeline")
    rep.add_argument("target", choices=REPRO_TARGETS)
    rep.add_argument("--seed", type=int, default=1)
    rep.add_argument("--trials", type=int)
    rep.add_argument("--ks", type=int, nargs="+", help="neighbourhood sizes for table3")
    rep.add_argument("--ds", type=int, nargs="+", help="embedding dimensions for the kernel sweeps")
    rep.add_argument("--restarts", type=int, help="K-means restarts (default 10, 50 for kernel-clustering)")
    rep.add_argument("--out", help="also write the JSON report here")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logger = logging.getLogger(__name__)
    try:
        toolkit = GradDRToolkit(args)
        return toolkit.run()
    except GradDRError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
