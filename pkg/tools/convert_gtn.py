"""Convert a Graph Transformer Network style dataset (node_features.pkl,
edges.pkl, labels.pkl) into the canonical heterogeneous directory.

    python3 tools/convert_gtn.py RAW_DIR acm data/acm

``edges.pkl`` holds K sparse n x n matrices, one per edge type, and
``labels.pkl`` holds three arrays of ``[node, class]`` rows (train, val, test).
Edge-type names default to PA, AP, PS, SP for ACM and MD, DM, MA, AM for IMDB.
"""

import argparse
import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from aegcn.data import HeteroGraph, save_hetero
from aegcn.sparse import SparseMatrix

EDGE_TYPES = {"acm": ("PA", "AP", "PS", "SP"), "imdb": ("MD", "DM", "MA", "AM"), "dblp": ("PA", "AP", "PC", "CP")}


def _load(path):
    with open(path, "rb") as fh:
        return pickle.load(fh)


def convert(raw, name, edge_types=None):
    raw = Path(raw)
    features = np.asarray(_load(raw / "node_features.pkl"), dtype=np.float64)
    n = features.shape[0]
    adjs = []
    for M in _load(raw / "edges.pkl"):
        coo = sp.coo_matrix(M)
        A = SparseMatrix.from_coo(n, n, coo.row, coo.col)
        adjs.append(A.with_values(np.ones(A.nnz)))
    edge_types = tuple(edge_types or EDGE_TYPES.get(name, [f"t{k}" for k in range(len(adjs))]))
    parts = [np.asarray(p, dtype=np.int64).reshape(-1, 2) for p in _load(raw / "labels.pkl")]
    labels = np.full(n, -1, dtype=np.int64)
    for part in parts:
        labels[part[:, 0]] = part[:, 1]
    train, val, test = (np.sort(p[:, 0]) for p in parts)
    return HeteroGraph(name, tuple(adjs), edge_types, features, labels, train, val, test, int(labels.max()) + 1)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("raw_dir")
    parser.add_argument("name")
    parser.add_argument("out_dir")
    parser.add_argument("--edge-types", help="comma-separated names, one per matrix in edges.pkl")
    args = parser.parse_args()
    names = args.edge_types.split(",") if args.edge_types else None
    graph = convert(args.raw_dir, args.name, names)
    save_hetero(args.out_dir, graph)
    print(f"{args.name}: n={graph.n} d={graph.d} K={graph.k} "
          f"train/val/test={graph.train.size}/{graph.val.size}/{graph.test.size}")


if __name__ == "__main__":
    main()
