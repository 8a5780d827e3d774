from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Variant(str, Enum):
    """Reconstruction target of the heterogeneous model."""

    X = "x"  # feature matrix
    H = "h"  # learned single adjacency
    A = "a"  # sum of all edge-type adjacencies
    S = "s"  # every edge-type adjacency, side by side

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        if text.startswith("aeg_"):
            text = text[4:]
        return cls(text)


@dataclass
class ForwardResult:
    H1: np.ndarray
    H2: np.ndarray
    class_loss: float
    recon_loss: float
    total_loss: float
    gamma: float
    caches: dict = field(default_factory=dict)


def predictions(result):
    return np.argmax(result.H2, axis=1)
