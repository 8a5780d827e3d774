"""Convert the Planetoid citation files (ind.<name>.x, .y, .tx, .ty, .allx,
.ally, .graph, .test.index) into the canonical dataset directory.

    python3 tools/convert_planetoid.py RAW_DIR cora data/cora

Uses the standard split: the first 20 labeled nodes per class (the ``y`` rows)
for training, the next 500 nodes for validation and the ``test.index`` nodes
for testing. Citeseer's isolated test nodes are padded with empty feature rows
and left unlabeled, so n = 3327.
"""

import argparse
import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from aegcn.data import HomoGraph, save_homo
from aegcn.sparse import SparseMatrix


def _load(raw, name, part):
    with open(raw / f"ind.{name}.{part}", "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def convert(raw, name):
    raw = Path(raw)
    x, y, tx, ty, allx, ally, graph = (_load(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_idx = np.loadtxt(raw / f"ind.{name}.test.index", dtype=np.int64)
    test_sorted = np.sort(test_idx)
    if name == "citeseer":
        full = np.arange(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((full.size, tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        ty_ext = np.zeros((full.size, ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        tx, ty = tx_ext, ty_ext
    features = sp.vstack((allx, tx)).tolil()
    features[test_idx, :] = features[test_sorted, :]
    onehot = np.vstack((ally, ty))
    onehot[test_idx, :] = onehot[test_sorted, :]
    n = features.shape[0]
    labels = np.where(onehot.sum(axis=1) > 0, onehot.argmax(axis=1), -1).astype(np.int64)

    src, dst = [], []
    for node, nbrs in graph.items():
        for m in nbrs:
            if m < n and m != node:
                src.append(node)
                dst.append(m)
    A = SparseMatrix.from_coo(n, n, np.r_[src, dst], np.r_[dst, src])
    A = A.with_values(np.ones(A.nnz))

    train = np.arange(y.shape[0])
    val = np.arange(y.shape[0], min(y.shape[0] + 500, allx.shape[0]))
    return HomoGraph(
        name, A, np.asarray(features.todense()), labels, train, val, test_sorted, onehot.shape[1]
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("raw_dir")
    parser.add_argument("name", choices=["cora", "citeseer", "pubmed"])
    parser.add_argument("out_dir")
    args = parser.parse_args()
    graph = convert(args.raw_dir, args.name)
    save_homo(args.out_dir, graph)
    print(f"{args.name}: n={graph.n} d={graph.d} edges={graph.adjacency.nnz // 2} "
          f"train/val/test={graph.train.size}/{graph.val.size}/{graph.test.size}")


if __name__ == "__main__":
    main()
