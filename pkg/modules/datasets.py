"""
Dataset Module

Synthetic manifold generators (swiss roll, trefoil, plane, plane with a hole,
sphere, Gaussian mixture), the noisy high-dimensional linear embedding used
by the manifold experiments, and CSV / label file ingestion.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from sklearn.datasets import make_swiss_roll

from modules.errors import DimensionError, FormatError, GenerationError, ParameterError, ParseError

logger = logging.getLogger(__name__)

MANIFOLD_KINDS = ("swiss_roll", "trefoil", "sphere", "plane", "plane_with_hole")
TWO_MANIFOLD_KINDS = ("plane-hole-trefoil", "sphere-trefoil")

DEFAULT_EXTENT = 6.0
DEFAULT_HOLE_RADIUS = 4.0
MAX_REJECTION_FACTOR = 1000

PathLike = Union[str, Path]


def read_text(path: Path) -> str:
    """File contents, with unreadable or undecodable files reported as FormatError"""
    try:
        return path.read_text()
    except (OSError, UnicodeDecodeError) as e:
        raise FormatError(f"Cannot read {path}: {e}") from e


@dataclass
class ManifoldSample:
    """3 x n points drawn from one manifold"""
    points: np.ndarray
    labels: np.ndarray
    manifold_kind: str
    coordinates: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.manifold_kind not in MANIFOLD_KINDS:
            raise ParameterError(f"Unknown manifold kind '{self.manifold_kind}'")

    @property
    def n_samples(self) -> int:
        return self.points.shape[1]


@dataclass
class EmbeddedDataset:
    """Manifold samples mapped to R^D through Y = P Z + E"""
    Y: np.ndarray
    Z: np.ndarray
    labels: np.ndarray
    P_embed: np.ndarray
    noise_sigma2: float
    counts: List[int] = field(default_factory=list)


def _check_count(n: int):
    if int(n) < 1:
        raise ParameterError(f"Sample count must be >= 1, got {n}")


def _sample(points: np.ndarray, kind: str, label: int, coordinates: np.ndarray = None) -> ManifoldSample:
    n = points.shape[1]
    return ManifoldSample(points=points, labels=np.full(n, int(label), dtype=int),
                          manifold_kind=kind, coordinates=coordinates)


def gen_swiss_roll(n: int, seed: int, label: int = 0) -> ManifoldSample:
    """
    Swiss roll z = (t cos t, h, t sin t), t ~ U[1.5 pi, 4.5 pi], h ~ U[0, 21]

    The roll parameter t is kept in ``coordinates``.
    """
    _check_count(n)
    random_state = np.random.RandomState(np.random.PCG64(seed))
    X, t = make_swiss_roll(n_samples=int(n), noise=0.0, random_state=random_state)
    return _sample(X.T.copy(), "swiss_roll", label, coordinates=t)


def trefoil_curve(t) -> np.ndarray:
    """Trefoil knot (sin t + 2 sin 2t, cos t - 2 cos 2t, -sin 3t) as a 3 x n array"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.vstack([
        np.sin(t) + 2.0 * np.sin(2.0 * t),
        np.cos(t) - 2.0 * np.cos(2.0 * t),
        -np.sin(3.0 * t),
    ])


def gen_trefoil(n: int, radius_scale: float = 1.0, seed: int = 0, label: int = 0) -> ManifoldSample:
    """Points on the trefoil knot at uniform parameter t in [0, 2 pi), scaled by radius_scale"""
    _check_count(n)
    if not radius_scale > 0:
        raise ParameterError(f"radius_scale must be positive, got {radius_scale}")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 2.0 * math.pi, size=int(n))
    return _sample(radius_scale * trefoil_curve(t), "trefoil", label, coordinates=t)


def _plane_points(rng: np.random.Generator, count: int, extent: float) -> np.ndarray:
    xy = rng.uniform(-extent, extent, size=(2, count))
    return np.vstack([xy, np.zeros((1, count))])


def gen_plane(n: int, extent: float = DEFAULT_EXTENT, seed: int = 0, label: int = 0) -> ManifoldSample:
    """Uniform points on [-extent, extent]^2 x {0}"""
    _check_count(n)
    if not extent > 0:
        raise ParameterError(f"extent must be positive, got {extent}")
    rng = np.random.default_rng(seed)
    return _sample(_plane_points(rng, int(n), extent), "plane", label)


def gen_plane_with_hole(n: int, hole_radius: float = DEFAULT_HOLE_RADIUS, extent: float = DEFAULT_EXTENT,
                        seed: int = 0, label: int = 0) -> ManifoldSample:
    """
    Uniform points on [-extent, extent]^2 x {0} outside the disc of radius hole_radius

    Rejection sampling in batches of n; gives up after 1000 n draws.

    Raises:
        GenerationError: too few accepted points within the draw budget
    """
    _check_count(n)
    if not 0 <= hole_radius < extent:
        raise ParameterError(f"Need 0 <= hole_radius < extent, got {hole_radius} and {extent}")
    n = int(n)
    rng = np.random.default_rng(seed)
    accepted = []
    total, draws = 0, 0
    while total < n:
        if draws >= MAX_REJECTION_FACTOR * n:
            raise GenerationError(
                f"Rejection sampling accepted {total} of {n} points after {draws} draws"
            )
        batch = _plane_points(rng, n, extent)
        draws += n
        keep = batch[:, np.hypot(batch[0], batch[1]) > hole_radius]
        accepted.append(keep)
        total += keep.shape[1]
    points = np.hstack(accepted)[:, :n]
    logger.debug(f"Plane with hole: {n} points from {draws} draws")
    return _sample(points, "plane_with_hole", label)


def gen_sphere(n: int, radius: float = 1.0, seed: int = 0, label: int = 0) -> ManifoldSample:
    """Uniform points on the 2-sphere, normalized standard normal draws"""
    _check_count(n)
    if not radius > 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal(size=(3, int(n)))
    return _sample(radius * draws / np.linalg.norm(draws, axis=0), "sphere", label)


def gen_gaussian_mixture(n: int = 400, D: int = 50, separation: float = 3.0,
                         seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two-class isotropic Gaussian mixture

    Class means sit at -separation/2 and +separation/2 along the first axis
    with identity covariance; class 0 receives the extra sample when n is odd.

    Returns:
        (Y, labels) with Y of shape D x n and labels in {0, 1}
    """
    if int(n) < 2 or int(D) < 1:
        raise ParameterError(f"Gaussian mixture needs n >= 2 and D >= 1, got n={n}, D={D}")
    rng = np.random.default_rng(seed)
    n, D = int(n), int(D)
    labels = np.zeros(n, dtype=int)
    labels[(n + 1) // 2:] = 1
    Y = rng.standard_normal(size=(D, n))
    Y[0] += np.where(labels == 1, 0.5, -0.5) * separation
    return Y, labels


def embed_highdim(samples: Sequence[ManifoldSample], D: int = 100, noise_sigma2: float = 0.01,
                  seed: int = 0, identity: bool = False) -> EmbeddedDataset:
    """
    Map the concatenated samples into R^D as Y = P Z + E

    P is the orthonormal factor of the QR decomposition of a seeded Gaussian
    D x 3 matrix (or I_3 when ``identity`` is set and D = 3); E is entrywise
    Gaussian noise of variance noise_sigma2. Labels are the index of the
    sample each column came from.
    """
    if not samples:
        raise ParameterError("At least one manifold sample is required")
    if int(D) < 3:
        raise ParameterError(f"Ambient dimension must be >= 3, got {D}")
    if noise_sigma2 < 0:
        raise ParameterError(f"Noise variance must be nonnegative, got {noise_sigma2}")
    if identity and int(D) != 3:
        raise ParameterError("The identity embedding requires D = 3")
    D = int(D)
    rng = np.random.default_rng(seed)
    Z = np.hstack([s.points for s in samples])
    counts = [s.n_samples for s in samples]
    labels = np.concatenate([np.full(c, idx, dtype=int) for idx, c in enumerate(counts)])

    if identity:
        P = np.eye(3)
    else:
        P, _ = linalg.qr(rng.standard_normal(size=(D, 3)), mode="economic")
    Y = P @ Z
    if noise_sigma2 > 0:
        Y = Y + rng.normal(0.0, math.sqrt(noise_sigma2), size=Y.shape)
    logger.info(f"Embedded {Z.shape[1]} points from {len(samples)} manifolds into R^{D}")
    return EmbeddedDataset(Y=Y, Z=Z, labels=labels, P_embed=P,
                           noise_sigma2=float(noise_sigma2), counts=counts)


def make_two_manifolds(kind: str, n1: int = 200, n2: int = 400, D: int = 100,
                       noise_sigma2: float = 0.01, seed: int = 0) -> EmbeddedDataset:
    """
    Two intertwined manifolds embedded in R^D

    ``plane-hole-trefoil`` threads a unit trefoil (n2 points) through the hole
    of a plane (n1 points, extent 6, hole radius 4); ``sphere-trefoil`` winds
    a trefoil scaled by 1.5 (n2 points) around the unit sphere (n1 points).
    """
    if kind not in TWO_MANIFOLD_KINDS:
        raise ParameterError(f"Unknown dataset '{kind}', expected one of {TWO_MANIFOLD_KINDS}")
    first_seed, second_seed, embed_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(3))
    if kind == "plane-hole-trefoil":
        first = gen_plane_with_hole(n1, DEFAULT_HOLE_RADIUS, DEFAULT_EXTENT, seed=first_seed)
        second = gen_trefoil(n2, radius_scale=1.0, seed=second_seed)
    else:
        first = gen_sphere(n1, radius=1.0, seed=first_seed)
        second = gen_trefoil(n2, radius_scale=1.5, seed=second_seed)
    return embed_highdim([first, second], D=D, noise_sigma2=noise_sigma2, seed=embed_seed)


def load_csv(path: PathLike, header: bool = False) -> np.ndarray:
    """
    Read a numeric CSV with one sample per row and return it as D x N

    Args:
        path: CSV file
        header: skip the first non-empty line

    Raises:
        FormatError: missing, unreadable or empty file, or ragged rows
        ParseError: a non-numeric cell, located by 1-based row and column
    """
    path = Path(path)
    rows: List[List[float]] = []
    width = None
    skipped_header = not header
    for row_no, cells in enumerate(csv.reader(read_text(path).splitlines()), start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        if not skipped_header:
            skipped_header = True
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: row {row_no} has {len(cells)} fields, expected {width}")
        values = []
        for col_no, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell.strip()!r}", row=row_no, column=col_no)
        rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    matrix = np.array(rows, dtype=float).T
    logger.info(f"Loaded {matrix.shape[1]} samples with {matrix.shape[0]} features from {path}")
    return matrix


def save_csv(path: PathLike, matrix: np.ndarray) -> None:
    """Write a D x N matrix as N rows of D values with 17 significant digits"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    np.savetxt(path, matrix.T, delimiter=",", fmt="%.17g")


def load_labels(path: PathLike, n_samples: Optional[int] = None) -> np.ndarray:
    """One integer label per line; blank lines are ignored"""
    path = Path(path)
    labels = []
    for line_no, raw in enumerate(read_text(path).splitlines(), start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            labels.append(int(text))
        except ValueError:
            raise ParseError(f"{path}: label is not an integer", row=line_no, column=1)
    if not labels:
        raise FormatError(f"{path}: no labels")
    result = np.asarray(labels, dtype=int)
    if n_samples is not None and result.size != n_samples:
        raise DimensionError(f"{path}: {result.size} labels for {n_samples} samples")
    return result


def save_labels(path: PathLike, labels) -> None:
    values = np.asarray(labels, dtype=int).ravel()
    Path(path).write_text("".join(f"{v}\n" for v in values.tolist()))
