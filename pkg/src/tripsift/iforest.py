"""Isolation forest, built from first principles.

Each tree recursively partitions a subsample with uniformly random
axis-aligned splits; anomalous points need fewer splits to isolate, so
short expected path lengths mean high anomaly scores. The score of a
point x is

    s(x) = 2 ** (-E[h(x)] / c(psi))

where h(x) is the path depth plus c(size) at the external node reached,
psi is the subsample size, and c(n) = 2 H(n-1) - 2 (n-1)/n with
H(i) = ln(i) + Euler-Mascheroni is the average path length of an
unsuccessful binary search tree lookup, used to normalize.

Trees are arrays of nodes: internal nodes are [dim, split, left, right]
(indices into the array), external nodes are [-1, size, depth]. Tree i
draws from its own generator seeded with rng_seed XOR i, so results do
not depend on build order.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

EULER_GAMMA = 0.5772156649

MODEL_FORMAT_VERSION = 1


def average_path_length(n: float) -> float:
    """c(n): expected path length to isolate one of n points; 0 for n <= 1."""
    if n <= 1:
        return 0.0
    return 2.0 * (math.log(n - 1.0) + EULER_GAMMA) - 2.0 * (n - 1.0) / n


def score_from_mean_path(mean_path_length: float, c_psi: float) -> float:
    """Map an expected path length to an anomaly score in (0, 1)."""
    return 2.0 ** (-mean_path_length / c_psi)


@dataclass
class IForestModel:
    n_trees: int
    subsample_size: int      # requested; psi is the effective value
    rng_seed: int
    n_features: int
    psi: int
    max_depth: int
    c_psi: float
    trees: list[list[list[float]]]


def _build_tree(data: np.ndarray, rng: np.random.Generator, max_depth: int) -> list[list[float]]:
    nodes: list[list[float]] = []

    def grow(rows: np.ndarray, depth: int) -> int:
        idx = len(nodes)
        nodes.append([])
        size = rows.shape[0]
        if size <= 1 or depth >= max_depth:
            nodes[idx] = [-1, size, depth]
            return idx
        mins = rows.min(axis=0)
        maxs = rows.max(axis=0)
        # a dim is splittable only if some float lies strictly between min and max
        splittable = np.nonzero(np.nextafter(mins, maxs) < maxs)[0]
        if splittable.size == 0:
            nodes[idx] = [-1, size, depth]
            return idx
        dim = int(splittable[rng.integers(splittable.size)])
        lo = float(mins[dim])
        hi = float(maxs[dim])
        split = float(rng.uniform(lo, hi))
        # the split must fall strictly inside (lo, hi); uniform() can hit
        # either end through rounding when the range is very narrow
        if split <= lo:
            split = float(np.nextafter(lo, hi))
        elif split >= hi:
            split = float(np.nextafter(hi, lo))
        mask = rows[:, dim] < split
        left = grow(rows[mask], depth + 1)
        right = grow(rows[~mask], depth + 1)
        nodes[idx] = [dim, split, left, right]
        return idx

    grow(data, 0)
    return nodes


def fit(
    X: np.ndarray,
    n_trees: int = 100,
    subsample_size: int = 256,
    rng_seed: int = 0,
) -> IForestModel:
    """Fit a forest on an (N, d) matrix of feature vectors.

    The subsample size is clamped to N; each tree gets an independent
    uniform subsample without replacement and a depth cap of
    ceil(log2(psi)).

    Raises:
        ValueError: fewer than 2 vectors, non-finite values, bad params.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array of shape (N, d)")
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 vectors to fit")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if subsample_size < 2:
        raise ValueError("subsample_size must be >= 2")
    if rng_seed < 0:
        raise ValueError("rng_seed must be non-negative")

    if np.all(X.max(axis=0) == X.min(axis=0)):
        warnings.warn("no variance: all vectors identical, every score will be equal",
                      RuntimeWarning, stacklevel=2)

    psi = min(subsample_size, n)
    max_depth = math.ceil(math.log2(psi))
    trees = []
    for i in range(n_trees):
        rng = np.random.Generator(np.random.PCG64(rng_seed ^ i))
        sample = rng.choice(n, size=psi, replace=False)
        trees.append(_build_tree(X[sample], rng, max_depth))
    return IForestModel(
        n_trees=n_trees,
        subsample_size=subsample_size,
        rng_seed=rng_seed,
        n_features=d,
        psi=psi,
        max_depth=max_depth,
        c_psi=average_path_length(psi),
        trees=trees,
    )


def _path_length(nodes: list[list[float]], x: np.ndarray) -> float:
    idx = 0
    while True:
        node = nodes[idx]
        if node[0] < 0:
            return node[2] + average_path_length(node[1])
        idx = node[2] if x[int(node[0])] < node[1] else node[3]


def score_vectors(model: IForestModel, X: np.ndarray) -> np.ndarray:
    """Anomaly scores in (0, 1) for each row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    scores = np.empty(X.shape[0], dtype=float)
    for i, x in enumerate(X):
        total = 0.0
        for nodes in model.trees:
            total += _path_length(nodes, x)
        scores[i] = score_from_mean_path(total / model.n_trees, model.c_psi)
    return scores


def threshold_from_contamination(scores: Sequence[float], contamination: float) -> float:
    """Score threshold flagging the top contamination fraction.

    Returns the score at the ceil(contamination * N)-th position of
    the descending sort; points with score >= threshold are flagged.
    When all scores are equal, everything is flagged.
    """
    arr = np.asarray(scores, dtype=float)
    if arr.size == 0:
        raise ValueError("no scores given")
    if not 0.0 < contamination < 1.0:
        raise ValueError("contamination must lie in (0, 1)")
    k = math.ceil(contamination * arr.size)
    return float(np.sort(arr)[::-1][k - 1])


def save_model(model: IForestModel, path: str | Path) -> None:
    """Serialize a fitted model to versioned JSON."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "params": {
            "n_trees": model.n_trees,
            "subsample_size": model.subsample_size,
            "rng_seed": model.rng_seed,
        },
        "n_features": model.n_features,
        "psi": model.psi,
        "max_depth": model.max_depth,
        "c_psi": model.c_psi,
        "trees": model.trees,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))


def load_model(path: str | Path) -> IForestModel:
    """Load a model serialized by save_model.

    Raises:
        ValueError: unknown format version or malformed document.
    """
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version {version!r}, expected {MODEL_FORMAT_VERSION}")
    try:
        params = doc["params"]
        return IForestModel(
            n_trees=int(params["n_trees"]),
            subsample_size=int(params["subsample_size"]),
            rng_seed=int(params["rng_seed"]),
            n_features=int(doc["n_features"]),
            psi=int(doc["psi"]),
            max_depth=int(doc["max_depth"]),
            c_psi=float(doc["c_psi"]),
            trees=doc["trees"],
        )
    except KeyError as exc:
        raise ValueError(f"malformed model document: missing {exc}") from None
