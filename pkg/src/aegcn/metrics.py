import numpy as np

from .errors import ArgumentError


def confusion_matrix(y_true, y_pred, n_classes):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def accuracy(y_true, y_pred):
    y_true = np.asarray(y_true)
    if y_true.size == 0:
        raise ArgumentError("cannot score an empty set of nodes")
    return float(np.mean(y_true == np.asarray(y_pred)))


def macro_f1(y_true, y_pred, n_classes=None):
    """Unweighted mean of per-class F1.

    With ``n_classes`` the mean runs over every class ``0..n_classes-1``, and a
    class with no predictions and no true instances scores 0. Without it the
    mean runs over the classes present in either ``y_true`` or ``y_pred``.
    Per-class F1 is 0 whenever precision + recall = 0.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ArgumentError("cannot score an empty set of nodes")
    if n_classes is None:
        classes = np.union1d(y_true, y_pred)
        remap = np.searchsorted(classes, np.concatenate([y_true, y_pred]))
        y_true, y_pred = remap[: y_true.size], remap[y_true.size :]
        n_classes = classes.size
    cm = confusion_matrix(y_true, y_pred, n_classes)
    tp = np.diag(cm).astype(np.float64)
    denom = cm.sum(axis=0) + cm.sum(axis=1)
    # F1 = 2 tp / (predicted + actual), which is 0 when tp = 0
    f1 = np.divide(2.0 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean())
