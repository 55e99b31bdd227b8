"""On-disk dataset format.

A dataset directory holds a manifest of ``key = value`` lines::

    features = features.csv      # n rows x d columns, comma or whitespace delimited
    views = view0.edges, view1.edges
    labels = labels.txt          # one integer in 0..c-1 per line
    n = 400
    d = 4
    m = 2
    c = 4

Edge lists have one ``i j [w]`` entry per line with 0-based node ids.
Edges are undirected: ``0 1`` and ``1 0`` name the same edge. Blank lines
and ``#`` comments are ignored. Relative paths resolve against the
manifest's directory.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mgal.errors import ValidationError
from mgal.graphcore import MultiGraphDataset
from mgal.ndcore import SparseMatrix

MANIFEST_KEYS = ("features", "views", "labels", "n", "d", "m", "c")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_key_values(text: str, what: str = "file") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{what} line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise ValidationError(f"{what} line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass(frozen=True)
class DatasetManifest:
    features: Path
    views: tuple[Path, ...]
    labels: Path
    n: int
    d: int
    m: int
    c: int

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"manifest not found: {path}")
        kv = parse_key_values(path.read_text(), what=str(path))
        missing = [k for k in MANIFEST_KEYS if k not in kv]
        if missing:
            raise ValidationError(f"{path}: missing manifest keys {missing}")
        unknown = sorted(set(kv) - set(MANIFEST_KEYS))
        if unknown:
            raise ValidationError(f"{path}: unknown manifest keys {unknown}")
        base = path.parent
        views = tuple(base / v.strip() for v in kv["views"].split(",") if v.strip())
        try:
            dims = {k: int(kv[k]) for k in "ndmc"}
        except ValueError as exc:
            raise ValidationError(f"{path}: dimensions must be integers ({exc})") from None
        manifest = cls(base / kv["features"], views, base / kv["labels"], **dims)
        if manifest.m < 1 or len(views) != manifest.m:
            raise ValidationError(f"{path}: declared m={manifest.m} but {len(views)} view files listed")
        return manifest


def _require(path: Path):
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")


def read_features(path: Path) -> np.ndarray:
    _require(path)
    text = path.read_text()
    delim = "," if "," in text else None
    try:
        return np.loadtxt(path, delimiter=delim, ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def read_edges(path: Path, n: int) -> SparseMatrix:
    """Symmetric adjacency from an edge list; duplicates collapse to one edge."""
    _require(path)
    weights: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        where = f"{path} line {lineno}"
        if len(line) not in (2, 3):
            raise ValidationError(f"{where}: expected 'i j [w]', got {raw.strip()!r}")
        try:
            i, j = int(line[0]), int(line[1])
            w = float(line[2]) if len(line) == 3 else 1.0
        except ValueError:
            raise ValidationError(f"{where}: cannot parse {raw.strip()!r}") from None
        if i == j:
            raise ValidationError(f"{where}: self-loop on node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"{where}: node id out of range 0..{n - 1}")
        if not (np.isfinite(w) and w > 0):
            raise ValidationError(f"{where}: edge weight must be positive, got {w}")
        key = (min(i, j), max(i, j))
        if key in weights and weights[key] != w:
            raise ValidationError(f"{where}: edge {key} repeated with weight {w} != {weights[key]}")
        weights[key] = w
    rows = [i for i, j in weights] + [j for i, j in weights]
    cols = [j for i, j in weights] + [i for i, j in weights]
    return SparseMatrix.from_coo(n, n, rows, cols, list(weights.values()) * 2)


def read_labels(path: Path) -> np.ndarray:
    _require(path)
    out = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise ValidationError(f"{path} line {lineno}: label must be an integer, got {line!r}") from None
    return np.array(out, dtype=np.int64)


def load_dataset(manifest_path) -> MultiGraphDataset:
    man = DatasetManifest.read(manifest_path)
    X = read_features(man.features)
    if X.shape != (man.n, man.d):
        raise ValidationError(f"{man.features}: expected {man.n}x{man.d} features, got {X.shape[0]}x{X.shape[1]}")
    labels = read_labels(man.labels)
    if labels.size != man.n:
        raise ValidationError(f"{man.labels}: expected {man.n} labels, got {labels.size}")
    if labels.size and (labels.min() < 0 or labels.max() >= man.c):
        raise ValidationError(f"{man.labels}: labels must lie in 0..{man.c - 1}")
    views = tuple(read_edges(p, man.n) for p in man.views)
    return MultiGraphDataset(X, views, labels, man.c, name=Path(manifest_path).parent.name or "dataset")


def write_dataset(ds: MultiGraphDataset, directory) -> Path:
    """Write ``ds`` in the manifest format; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "features.csv", "w") as fh:
        for row in ds.X:
            fh.write(",".join(fmt(x) for x in row) + "\n")
    names = []
    for v, a in enumerate(ds.views):
        name = f"view{v}.edges"
        names.append(name)
        r, c, w = a.to_coo()
        with open(directory / name, "w") as fh:
            for i, j, x in zip(r, c, w):
                if i < j:
                    fh.write(f"{i} {j}\n" if x == 1.0 else f"{i} {j} {fmt(x)}\n")
    (directory / "labels.txt").write_text("".join(f"{int(y)}\n" for y in ds.labels))
    manifest = directory / "manifest.txt"
    manifest.write_text(
        "features = features.csv\n"
        f"views = {', '.join(names)}\n"
        "labels = labels.txt\n"
        f"n = {ds.n}\nd = {ds.d}\nm = {ds.m}\nc = {ds.c}\n"
    )
    return manifest
