"""Canonical on-disk dataset format.

A dataset directory holds::

    meta.json           {"name", "n", "d", "f", "node_types"?, "edge_types": [...]}
    edges.tsv           "src<TAB>dst" per line (homogeneous graphs)
    edges.<type>.tsv    one file per entry of edge_types (heterogeneous graphs)
    features.csr        binary CSR feature matrix, see read_features_csr
    labels.tsv          "node<TAB>class" per line; missing nodes are unlabeled
    splits.json         {"train": [...], "val": [...], "test": [...]}

Node ids are 0-based. Homogeneous edges are symmetrised on load, heterogeneous
edge types stay directed. Duplicate edge lines are merged.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataValidationError
from .sparse import SparseMatrix

FEATURE_MAGIC = b"FCSR"
_HEADER = struct.Struct("<4sQQQ")

# Published statistics enforced when meta.json names one of these datasets.
KNOWN_HOMO = {
    "cora": dict(n=2708, d=1433, f=7, train=140, val=500, test=1000),
    "citeseer": dict(n=3327, d=3703, f=6, train=120, val=500, test=1000),
    "pubmed": dict(n=19717, d=500, f=3, train=60, val=500, test=1000),
}
KNOWN_HETERO = {
    "acm": dict(n=8994, d=1902, k=4, train=600, val=300, test=2125),
    "imdb": dict(n=12772, d=1256, k=4, train=300, val=300, test=2339),
}


@dataclass(frozen=True)
class HomoGraph:
    name: str
    adjacency: SparseMatrix
    features: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    n_classes: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.adjacency.n_rows

    @property
    def d(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class HeteroGraph:
    name: str
    adjacencies: tuple
    edge_types: tuple
    features: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    n_classes: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def k(self):
        return len(self.adjacencies)


# -- readers ------------------------------------------------------------------


def _require(path):
    if not path.is_file():
        raise FileNotFoundError(f"missing dataset file: {path}")
    return path


def read_meta(directory):
    path = _require(Path(directory) / "meta.json")
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    for key in ("name", "n", "d", "f"):
        if key not in meta:
            raise DataValidationError(f"meta.json lacks '{key}'", path)
    for key in ("n", "d", "f"):
        if not isinstance(meta[key], int) or meta[key] < 1:
            raise DataValidationError(f"'{key}' must be a positive integer", path)
    meta.setdefault("edge_types", [])
    return meta


def _int_pairs(path, n_first, n_second, what):
    """Parse ``a<TAB>b`` integer lines; blank lines are ignored."""
    firsts, seconds, lines = [], [], []
    with open(_require(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.split("\t")
            if len(parts) != 2:
                raise DataValidationError(f"expected two tab-separated fields in {what}", path, lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataValidationError(f"non-integer field in {what}", path, lineno) from None
            if not 0 <= a < n_first:
                raise DataValidationError(f"id {a} out of range [0, {n_first})", path, lineno)
            if not 0 <= b < n_second:
                raise DataValidationError(f"id {b} out of range [0, {n_second})", path, lineno)
            firsts.append(a)
            seconds.append(b)
            lines.append(lineno)
    return np.array(firsts, dtype=np.int64), np.array(seconds, dtype=np.int64), lines


def read_edges(path, n, symmetric):
    src, dst, _ = _int_pairs(Path(path), n, n, "edge list")
    if symmetric:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        keep = src != dst
        src, dst = src[keep], dst[keep]
    adj = SparseMatrix.from_coo(n, n, src, dst)
    # duplicates were summed by from_coo; the adjacency is 0/1
    return adj.with_values(np.ones(adj.nnz))


def read_features_csr(path):
    path = _require(Path(path))
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataValidationError("truncated header", path)
    magic, n, d, nnz = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise DataValidationError(f"bad magic {magic!r}", path)
    expected = _HEADER.size + 8 * (n + 1) + 8 * nnz + 8 * nnz
    if len(raw) != expected:
        raise DataValidationError(f"expected {expected} bytes, found {len(raw)}", path)
    off = _HEADER.size
    row_ptr = np.frombuffer(raw, dtype="<u8", count=n + 1, offset=off).astype(np.int64)
    off += 8 * (n + 1)
    col_idx = np.frombuffer(raw, dtype="<u8", count=nnz, offset=off).astype(np.int64)
    off += 8 * nnz
    values = np.frombuffer(raw, dtype="<f8", count=nnz, offset=off).astype(np.float64)
    try:
        mat = SparseMatrix(n, d, row_ptr, col_idx, values)
    except ValueError as exc:
        raise DataValidationError(str(exc), path) from None
    if not np.all(np.isfinite(mat.values)):
        raise DataValidationError("non-finite feature value", path)
    return mat


def read_labels(path, n, f):
    nodes, classes, lines = _int_pairs(Path(path), n, f, "label list")
    labels = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for lineno, node, cls in zip(lines, nodes.tolist(), classes.tolist()):
        if seen[node] and labels[node] != cls:
            raise DataValidationError(f"conflicting labels for node {node}", path, lineno)
        seen[node] = True
        labels[node] = cls
    return labels


def read_splits(path, n, labels):
    path = _require(Path(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    out = {}
    for key in ("train", "val", "test"):
        if key not in raw:
            raise DataValidationError(f"splits.json lacks '{key}'", path)
        ids = np.asarray(raw[key], dtype=np.int64)
        if ids.ndim != 1:
            raise DataValidationError(f"'{key}' must be a flat list", path)
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise DataValidationError(f"'{key}' has a node id outside [0, {n})", path)
        if np.unique(ids).size != ids.size:
            raise DataValidationError(f"'{key}' lists a node twice", path)
        unlabeled = ids[labels[ids] < 0]
        if unlabeled.size:
            raise DataValidationError(f"'{key}' contains unlabeled node {unlabeled[0]}", path)
        out[key] = ids
    for a, b in (("train", "val"), ("train", "test"), ("val", "test")):
        common = np.intersect1d(out[a], out[b])
        if common.size:
            raise DataValidationError(f"'{a}' and '{b}' share node {common[0]}", path)
    return out


def _check_known(meta, stats, observed, directory):
    expected = stats.get(meta["name"].lower())
    if expected is None:
        return
    for key, want in expected.items():
        got = observed[key]
        if got != want:
            raise DataValidationError(
                f"dataset '{meta['name']}' should have {key} = {want}, found {got}", directory
            )


def load_homo(directory):
    directory = Path(directory)
    meta = read_meta(directory)
    n, d, f = meta["n"], meta["d"], meta["f"]
    adjacency = read_edges(directory / "edges.tsv", n, symmetric=True)
    features = read_features_csr(directory / "features.csr")
    if features.shape != (n, d):
        raise DataValidationError(f"features are {features.shape}, meta says {(n, d)}", directory / "features.csr")
    labels = read_labels(directory / "labels.tsv", n, f)
    splits = read_splits(directory / "splits.json", n, labels)
    _check_known(
        meta,
        KNOWN_HOMO,
        dict(n=n, d=d, f=f, **{k: v.size for k, v in splits.items()}),
        directory,
    )
    return HomoGraph(
        name=meta["name"],
        adjacency=adjacency,
        features=features.to_dense(),
        labels=labels,
        n_classes=f,
        meta=meta,
        **splits,
    )


def load_hetero(directory):
    directory = Path(directory)
    meta = read_meta(directory)
    n, d, f = meta["n"], meta["d"], meta["f"]
    edge_types = meta["edge_types"]
    if not edge_types:
        raise DataValidationError("heterogeneous dataset needs a non-empty 'edge_types'", directory / "meta.json")
    if len(set(edge_types)) != len(edge_types):
        raise DataValidationError("duplicate edge type name", directory / "meta.json")
    adjs = []
    for name in edge_types:
        path = directory / f"edges.{name}.tsv"
        if not path.is_file():
            raise DataValidationError(f"edge type '{name}' has no edge file", path)
        adjs.append(read_edges(path, n, symmetric=False))
    features = read_features_csr(directory / "features.csr")
    if features.shape != (n, d):
        raise DataValidationError(f"features are {features.shape}, meta says {(n, d)}", directory / "features.csr")
    labels = read_labels(directory / "labels.tsv", n, f)
    splits = read_splits(directory / "splits.json", n, labels)
    _check_known(
        meta,
        KNOWN_HETERO,
        dict(n=n, d=d, k=len(adjs), **{k: v.size for k, v in splits.items()}),
        directory,
    )
    return HeteroGraph(
        name=meta["name"],
        adjacencies=tuple(adjs),
        edge_types=tuple(edge_types),
        features=features.to_dense(),
        labels=labels,
        n_classes=f,
        meta=meta,
        **splits,
    )


def load_graph(directory):
    """Load either kind, dispatching on ``edge_types`` in meta.json."""
    meta = read_meta(directory)
    return load_hetero(directory) if meta["edge_types"] else load_homo(directory)


# -- writers ------------------------------------------------------------------


def write_features_csr(path, features):
    mat = features if isinstance(features, SparseMatrix) else SparseMatrix.from_dense(features)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, mat.n_rows, mat.n_cols, mat.nnz))
        fh.write(mat.row_ptr.astype("<u8").tobytes())
        fh.write(mat.col_idx.astype("<u8").tobytes())
        fh.write(mat.values.astype("<f8").tobytes())


def _write_pairs(path, a, b):
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(a.tolist(), b.tolist()):
            fh.write(f"{x}\t{y}\n")


def _write_common(directory, graph, meta):
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    write_features_csr(directory / "features.csr", graph.features)
    labeled = np.flatnonzero(graph.labels >= 0)
    _write_pairs(directory / "labels.tsv", labeled, graph.labels[labeled])
    splits = {k: getattr(graph, k).tolist() for k in ("train", "val", "test")}
    (directory / "splits.json").write_text(json.dumps(splits) + "\n", encoding="utf-8")


def save_homo(directory, graph):
    directory = Path(directory)
    meta = {"name": graph.name, "n": graph.n, "d": graph.d, "f": graph.n_classes, "edge_types": []}
    _write_common(directory, graph, meta)
    A = graph.adjacency
    upper = A.row_idx < A.col_idx
    _write_pairs(directory / "edges.tsv", A.row_idx[upper], A.col_idx[upper])


def save_hetero(directory, graph):
    directory = Path(directory)
    meta = {
        "name": graph.name,
        "n": graph.n,
        "d": graph.d,
        "f": graph.n_classes,
        "edge_types": list(graph.edge_types),
    }
    if "node_types" in graph.meta:
        meta["node_types"] = graph.meta["node_types"]
    _write_common(directory, graph, meta)
    for name, A in zip(graph.edge_types, graph.adjacencies):
        _write_pairs(directory / f"edges.{name}.tsv", A.row_idx, A.col_idx)
