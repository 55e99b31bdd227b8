"""Multi-view graph containers, propagation matrices, kNN graphs, synthetic
SBM datasets and stratified splits."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from mgal.errors import DimensionError, ValidationError
from mgal.ndcore import SparseMatrix, make_rng


@dataclass(frozen=True)
class MultiGraphDataset:
    """One node set with feature matrix ``X`` and ``m`` adjacency views."""

    X: np.ndarray
    views: tuple[SparseMatrix, ...]
    labels: np.ndarray
    n_classes: int
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=np.float64))
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        self.validate()

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return len(self.views)

    @property
    def c(self) -> int:
        return self.n_classes

    def validate(self):
        if self.X.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise ValidationError("features contain non-finite values")
        if self.m < 1:
            raise ValidationError("at least one view is required")
        if self.n_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.n_classes}")
        if self.labels.shape != (self.n,):
            raise ValidationError(f"expected {self.n} labels, got {self.labels.shape[0]}")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValidationError(f"labels must lie in 0..{self.n_classes - 1}")
        for v, a in enumerate(self.views):
            check_adjacency(a, self.n, what=f"view {v}")

    def subset_views(self, idx: Sequence[int]) -> "MultiGraphDataset":
        return replace(self, views=tuple(self.views[i] for i in idx))


def check_adjacency(a: SparseMatrix, n: int | None = None, what: str = "adjacency"):
    if a.rows != a.cols:
        raise ValidationError(f"{what} must be square, got {a.shape}")
    if n is not None and a.rows != n:
        raise DimensionError(f"{what} is {a.shape}, expected {n}x{n}")
    if np.any(a.data < 0):
        raise ValidationError(f"{what} has negative weights")
    if np.any(a.diagonal() != 0):
        raise ValidationError(f"{what} has self-loops (nonzero diagonal)")
    if not a.is_symmetric(1e-12):
        raise ValidationError(f"{what} is not symmetric")


@dataclass(frozen=True)
class NormalizedGraph:
    """Propagation matrix D^-1/2 (A + I) D^-1/2."""

    S: SparseMatrix

    @property
    def n(self) -> int:
        return self.S.rows


def renormalize(a: SparseMatrix) -> NormalizedGraph:
    check_adjacency(a)
    n = a.rows
    r, c, v = a.to_coo()
    idx = np.arange(n)
    r, c, v = np.r_[r, idx], np.r_[c, idx], np.r_[v, np.ones(n)]
    deg = np.bincount(r, weights=v, minlength=n)
    return NormalizedGraph(SparseMatrix.from_coo(n, n, r, c, v / np.sqrt(deg[r] * deg[c])))


def average_graphs(views: Sequence[SparseMatrix]) -> SparseMatrix:
    """Entrywise mean of the views; the pattern is the union of patterns."""
    if not views:
        raise ValidationError("no views to average")
    shape = views[0].shape
    for a in views:
        if a.shape != shape:
            raise DimensionError(f"cannot average views of shapes {shape} and {a.shape}")
    coo = [a.to_coo() for a in views]
    r = np.concatenate([x[0] for x in coo])
    c = np.concatenate([x[1] for x in coo])
    v = np.concatenate([x[2] for x in coo])
    # summing per coordinate first keeps the result independent of view order
    total = SparseMatrix.from_coo(shape[0], shape[1], r, c, v)
    return replace(total, data=total.data / len(views))


def knn_graph(X: np.ndarray, k: int = 10, metric: str = "cosine") -> SparseMatrix:
    """Binary symmetric kNN graph; ties resolved toward lower node index."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if metric == "cosine":
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        Xn = X / np.where(norms > 0, norms, 1.0)
        dist = 1.0 - Xn @ Xn.T
    elif metric == "euclidean":
        sq = (X * X).sum(axis=1)
        dist = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    else:
        raise ValidationError(f"unknown metric {metric!r}")
    np.fill_diagonal(dist, np.inf)
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :k]
    r = np.repeat(np.arange(n), k)
    c = nbrs.reshape(-1)
    a = SparseMatrix.from_coo(n, n, np.r_[r, c], np.r_[c, r], np.ones(2 * r.size))
    return replace(a, data=np.ones_like(a.data))


# --- synthetic multi-view SBM -------------------------------------------------

@dataclass
class SbmSpec:
    """Stochastic block model with per-view informative class pairs.

    In view ``v`` blocks ``a != b`` connect with ``p_inter[v]`` only when
    ``(a, b)`` is in ``informative[v]``; every other pair connects with
    ``p_intra[v]`` and is therefore invisible in that view.
    """

    block_sizes: list[int]
    p_intra: list[float]
    p_inter: list[float]
    informative: list[list[tuple[int, int]]]
    noise: float = 1.0
    seed: int = 0
    name: str = "sbm"

    def validate(self):
        c = len(self.block_sizes)
        if c < 2 or min(self.block_sizes) < 1:
            raise ValidationError("need at least two non-empty blocks")
        m = len(self.p_intra)
        if m < 1 or len(self.p_inter) != m or len(self.informative) != m:
            raise ValidationError("per-view lists must share one length >= 1")
        for p in [*self.p_intra, *self.p_inter]:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"probability {p} outside [0, 1]")
        for pairs in self.informative:
            for a, b in pairs:
                if a == b or not (0 <= a < c and 0 <= b < c):
                    raise ValidationError(f"bad class pair {(a, b)}")
        if self.noise < 0:
            raise ValidationError("noise scale must be >= 0")

    @property
    def n(self) -> int:
        return sum(self.block_sizes)


def block_probabilities(spec: SbmSpec, view: int) -> np.ndarray:
    c = len(spec.block_sizes)
    P = np.full((c, c), spec.p_intra[view])
    for a, b in spec.informative[view]:
        P[a, b] = P[b, a] = spec.p_inter[view]
    return P


def synth_multiview(spec: SbmSpec) -> MultiGraphDataset:
    spec.validate()
    c = len(spec.block_sizes)
    labels = np.repeat(np.arange(c), spec.block_sizes)
    n = labels.size
    iu, ju = np.triu_indices(n, k=1)
    views = []
    for v in range(len(spec.p_intra)):
        P = block_probabilities(spec, v)
        rng = make_rng(spec.seed, "sbm-view", str(v))
        keep = rng.random(iu.size) < P[labels[iu], labels[ju]]
        r, col = iu[keep], ju[keep]
        views.append(SparseMatrix.from_coo(n, n, np.r_[r, col], np.r_[col, r], np.ones(2 * r.size)))
    X = np.eye(c)[labels] + spec.noise * make_rng(spec.seed, "sbm-features").standard_normal((n, c))
    return MultiGraphDataset(X, tuple(views), labels, c, name=spec.name)


def grouping_pairs(groups: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    """Class pairs that straddle two different groups."""
    out = []
    for g1, g2 in combinations(groups, 2):
        out.extend((min(a, b), max(a, b)) for a in g1 for b in g2)
    return sorted(out)


def preset(name: str, seed: int = 0) -> SbmSpec:
    """Named synthetic datasets.

    ``default``: 4 classes x 100 nodes, 3 views. Each view only separates
    the classes into two coarse groups ({0,1}|{2,3}, {0,2}|{1,3},
    {0,3}|{1,2}), so any two views together pin down the class.
    ``tiny`` is the same design at 4 x 15 nodes for fast tests.
    """
    groupings = [[[0, 1], [2, 3]], [[0, 2], [1, 3]], [[0, 3], [1, 2]]]
    masks = [grouping_pairs(g) for g in groupings]
    if name == "default":
        return SbmSpec([100] * 4, [0.05] * 3, [0.005] * 3, masks, noise=1.0, seed=seed, name="default")
    if name == "tiny":
        return SbmSpec([15] * 4, [0.3] * 3, [0.02] * 3, masks, noise=1.0, seed=seed, name="tiny")
    if name == "two-view":
        return SbmSpec([100] * 4, [0.05] * 2, [0.005] * 2, masks[:2], noise=1.0, seed=seed, name="two-view")
    raise ValidationError(f"unknown synthetic preset {name!r}")


PRESETS = ("default", "tiny", "two-view")


# --- splits -------------------------------------------------------------------

@dataclass(frozen=True)
class DataSplit:
    labeled: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    ratio: float


def _ceil(x: float) -> int:
    # guards against 0.1 * 30 style representation error
    return math.ceil(round(x, 9))


def stratified_split(labels, ratio: float, validation_fraction: float,
                     rng: np.random.Generator) -> DataSplit:
    """Label ``ceil(ratio * |class|)`` nodes per class, then draw
    ``round(validation_fraction * n)`` validation nodes from the rest."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if not 0 < ratio < 1:
        raise ValidationError(f"label ratio must be in (0, 1), got {ratio}")
    if not 0 <= validation_fraction < 1 - ratio:
        raise ValidationError(f"validation fraction must be in [0, {1 - ratio}), got {validation_fraction}")
    labeled = []
    for cls in range(labels.max() + 1):
        members = np.flatnonzero(labels == cls)
        if members.size == 0:
            raise ValidationError(f"class {cls} has no nodes to label")
        take = _ceil(ratio * members.size)
        labeled.append(rng.permutation(members)[:take])
    labeled = np.sort(np.concatenate(labeled))
    rest = rng.permutation(np.setdiff1d(np.arange(n), labeled))
    n_val = int(round(validation_fraction * n))
    if n_val > rest.size:
        raise ValidationError(f"cannot draw {n_val} validation nodes from {rest.size} unlabeled")
    return DataSplit(labeled, np.sort(rest[:n_val]), np.sort(rest[n_val:]), ratio)
