"""Evaluation: pooled macro-F1 and the per-step (sequential) confusion matrix."""

from __future__ import annotations

import numpy as np


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    """Macro-averaged F1 over all edges pooled, on a 0-100 scale.

    Classes absent from both truth and prediction are excluded from the
    average (they carry no evidence either way).
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    f1s = []
    for c in range(n_classes):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        if tp + fp + fn == 0:
            continue
        f1s.append(2 * tp / (2 * tp + fp + fn))
    if not f1s:
        return 0.0
    return 100.0 * float(np.mean(f1s))


def sequential_confusion(step_true: list[np.ndarray], step_pred: list[np.ndarray],
                         n_classes: int) -> dict:
    """Per-step confusion counts and row-normalized matrices.

    step_true[t] / step_pred[t] hold the labels of every route that reaches
    step t. The step matrices, weighted by their counts, sum exactly to the
    global confusion matrix.
    """
    counts = []
    normalized = []
    for yt, yp in zip(step_true, step_pred):
        m = np.zeros((n_classes, n_classes), dtype=np.int64)
        for a, b in zip(yt, yp):
            m[a, b] += 1
        counts.append(m)
        rows = m.sum(axis=1, keepdims=True)
        normalized.append(np.divide(m, rows, out=np.zeros_like(m, dtype=float),
                                    where=rows > 0))
    total = np.sum(counts, axis=0) if counts else np.zeros((n_classes, n_classes), int)
    return {
        "per_step_counts": [m.tolist() for m in counts],
        "per_step_normalized": [m.tolist() for m in normalized],
        "global_counts": np.asarray(total).tolist(),
    }


def per_step_recall(step_true: list[np.ndarray], step_pred: list[np.ndarray],
                    cls: int) -> list[float | None]:
    """Recall of a class at each step; None where the class never occurs."""
    out = []
    for yt, yp in zip(step_true, step_pred):
        yt = np.asarray(yt)
        yp = np.asarray(yp)
        pos = yt == cls
        out.append(float(np.mean(yp[pos] == cls)) if pos.any() else None)
    return out
