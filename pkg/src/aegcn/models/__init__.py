from .common import ForwardResult, Variant, predictions
from .decoder import ReconResult, reconstruction
from .hetero import (
    HeteroProblem,
    TransformResult,
    hetero_aggregate,
    hetero_backward,
    hetero_forward,
    hetero_predict,
    hetero_transform,
    init_hetero_params,
    metapath_plan,
    prepare_hetero,
    recon_target,
)
from .homo import HomoProblem, homo_backward, homo_forward, homo_predict, init_homo_params, prepare_homo

__all__ = [
    "ForwardResult",
    "HeteroProblem",
    "HomoProblem",
    "ReconResult",
    "TransformResult",
    "Variant",
    "hetero_aggregate",
    "hetero_backward",
    "hetero_forward",
    "hetero_predict",
    "hetero_transform",
    "homo_backward",
    "homo_forward",
    "homo_predict",
    "init_hetero_params",
    "init_homo_params",
    "metapath_plan",
    "predictions",
    "prepare_hetero",
    "prepare_homo",
    "recon_target",
    "reconstruction",
]
