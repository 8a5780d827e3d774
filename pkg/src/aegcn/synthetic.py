"""Synthetic graphs: tiny instances for gradient checks and tests, and
benchmark-sized stand-ins with planted class structure for demos and timing.
"""

import numpy as np

from .data import HeteroGraph, HomoGraph
from .sparse import SparseMatrix


def _split(labels, rng, train_per_class, n_val, n_test, candidates=None):
    nodes = np.flatnonzero(labels >= 0) if candidates is None else np.asarray(candidates)
    order = rng.permutation(nodes)
    train = []
    for cls in np.unique(labels[nodes]):
        train.extend(order[labels[order] == cls][:train_per_class].tolist())
    train = np.array(sorted(train), dtype=np.int64)
    rest = np.setdiff1d(order, train, assume_unique=False)
    rest = rest[rng.permutation(rest.size)]
    val = np.sort(rest[:n_val])
    test = np.sort(rest[n_val : n_val + n_test])
    return train, val, test


def _symmetric(n, src, dst):
    keep = src != dst
    src, dst = src[keep], dst[keep]
    A = SparseMatrix.from_coo(n, n, np.concatenate([src, dst]), np.concatenate([dst, src]))
    return A.with_values(np.ones(A.nnz))


def _bag_of_words(labels, n_classes, d, density, signal, rng):
    """Binary features where each class prefers its own block of words."""
    n = labels.shape[0]
    X = (rng.random((n, d)) < density).astype(np.float64)
    block = max(1, d // n_classes)
    for cls in range(n_classes):
        rows = np.flatnonzero(labels == cls)
        cols = np.arange(cls * block, min((cls + 1) * block, d))
        X[np.ix_(rows, cols)] = np.maximum(
            X[np.ix_(rows, cols)], rng.random((rows.size, cols.size)) < signal
        )
    return X


def citation_graph(
    n=2708,
    d=1433,
    n_classes=7,
    n_edges=5429,
    homophily=0.8,
    train_per_class=20,
    n_val=500,
    n_test=1000,
    density=0.01,
    signal=0.03,
    seed=0,
    name="synthetic-citation",
):
    """Planted-partition citation-like graph; defaults mirror Cora's sizes."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, size=n)
    members = [np.flatnonzero(labels == c) for c in range(n_classes)]
    src = rng.integers(0, n, size=n_edges)
    same = rng.random(n_edges) < homophily
    dst = rng.integers(0, n, size=n_edges)
    for c in range(n_classes):
        pick = same & (labels[src] == c)
        dst[pick] = rng.choice(members[c], size=int(pick.sum()))
    A = _symmetric(n, src, dst)
    X = _bag_of_words(labels, n_classes, d, density, signal, rng)
    train, val, test = _split(labels, rng, train_per_class, n_val, n_test)
    return HomoGraph(name, A, X, labels, train, val, test, n_classes, {"synthetic": True})


def bibliographic_graph(
    n_papers=3025,
    n_authors=5912,
    n_subjects=57,
    d=1902,
    n_classes=3,
    authors_per_paper=3,
    homophily=0.8,
    train_per_class=200,
    n_val=300,
    n_test=2125,
    density=0.01,
    signal=0.05,
    seed=0,
    name="synthetic-bibliographic",
):
    """Paper/author/subject graph with edge types PA, AP, PS, SP; defaults mirror ACM's sizes.

    Node ids: papers first, then authors, then subjects. Only papers are labeled.
    """
    rng = np.random.default_rng(seed)
    n = n_papers + n_authors + n_subjects
    paper_cls = rng.integers(0, n_classes, size=n_papers)
    # authors and subjects have a home class; papers mostly link within theirs
    author_cls = rng.integers(0, n_classes, size=n_authors)
    subject_cls = np.arange(n_subjects) % n_classes

    def pick(home, pool_cls, offset, count):
        out = np.empty(count, dtype=np.int64)
        pools = [np.flatnonzero(pool_cls == c) for c in range(n_classes)]
        same = rng.random(count) < homophily
        for i in range(count):
            pool = pools[home[i]] if same[i] else np.arange(pool_cls.size)
            out[i] = offset + pool[rng.integers(0, pool.size)]
        return out

    papers = np.repeat(np.arange(n_papers), authors_per_paper)
    authors = pick(paper_cls[papers], author_cls, n_papers, papers.size)
    subjects = pick(paper_cls, subject_cls, n_papers + n_authors, n_papers)
    pa = SparseMatrix.from_coo(n, n, papers, authors)
    pa = pa.with_values(np.ones(pa.nnz))
    ps = SparseMatrix.from_coo(n, n, np.arange(n_papers), subjects)
    adjs = (pa, pa.transpose(), ps, ps.transpose())

    labels = np.full(n, -1, dtype=np.int64)
    labels[:n_papers] = paper_cls
    node_cls = np.concatenate([paper_cls, author_cls, subject_cls])
    X = _bag_of_words(node_cls, n_classes, d, density, signal, rng)
    train, val, test = _split(labels, rng, train_per_class, n_val, n_test)
    meta = {
        "synthetic": True,
        "node_types": {"paper": n_papers, "author": n_authors, "subject": n_subjects},
    }
    return HeteroGraph(name, adjs, ("PA", "AP", "PS", "SP"), X, labels, train, val, test, n_classes, meta)


def toy_homo(n=6, d=5, n_classes=3, seed=0):
    """Small connected graph with real-valued features for gradient checks."""
    rng = np.random.default_rng(seed)
    src = np.arange(n)
    dst = (src + 1) % n
    extra = rng.integers(0, n, size=(2, n // 2))
    A = _symmetric(n, np.concatenate([src, extra[0]]), np.concatenate([dst, extra[1]]))
    X = rng.random((n, d))
    labels = np.arange(n) % n_classes
    train = np.arange(0, n, 2)
    val = np.arange(1, n, 4)
    test = np.setdiff1d(np.arange(n), np.concatenate([train, val]))
    return HomoGraph("toy-homo", A, X, labels, train, val, test, n_classes)


def toy_hetero(n=8, k=2, d=5, n_classes=3, density=0.3, seed=0):
    """Small directed multi-relational graph with 0/1 features."""
    rng = np.random.default_rng(seed)
    adjs = []
    for _ in range(k):
        dense = (rng.random((n, n)) < density).astype(np.float64)
        np.fill_diagonal(dense, 0.0)
        dense[np.arange(n), (np.arange(n) + 1) % n] = 1.0
        adjs.append(SparseMatrix.from_dense(dense))
    X = (rng.random((n, d)) < 0.5).astype(np.float64)
    labels = np.arange(n) % n_classes
    labels[-1] = -1
    train = np.arange(0, n - 1, 2)
    val = np.array([1], dtype=np.int64)
    test = np.setdiff1d(np.arange(n - 1), np.concatenate([train, val]))
    names = tuple(f"t{i}" for i in range(k))
    return HeteroGraph("toy-hetero", tuple(adjs), names, X, labels, train, val, test, n_classes)
