"""Autoencoder-constrained graph convolutional networks on sparse graphs.

Submodules:

* :mod:`aegcn.sparse` - CSR matrices and graph operators
* :mod:`aegcn.nn` - layers and losses with hand-written gradients
* :mod:`aegcn.models` - homogeneous and heterogeneous models
* :mod:`aegcn.optim` - initialisation and Adam
* :mod:`aegcn.data` - dataset format and loaders
* :mod:`aegcn.harness` - training loop, metrics, aggregation, gradient checks
"""

from .data import HeteroGraph, HomoGraph, load_graph, load_hetero, load_homo
from .harness import RunLog, TrainConfig, aggregate, evaluate, gradcheck, run_seeds, run_train
from .models import Variant
from .sparse import SparseMatrix

__version__ = "0.1.0"

__all__ = [
    "HeteroGraph",
    "HomoGraph",
    "RunLog",
    "SparseMatrix",
    "TrainConfig",
    "Variant",
    "aggregate",
    "evaluate",
    "gradcheck",
    "load_graph",
    "load_hetero",
    "load_homo",
    "run_seeds",
    "run_train",
]
