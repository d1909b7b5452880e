"""Cross-entropy variants for step-wise imbalanced sequence labels.

ce     - plain cross-entropy.
cbce   - class-balanced CE: weights (1-beta)/(1-beta^n_c) from whole-batch
         class counts (effective number of samples).
scbce  - step-wise CBCE: the weight count n is taken independently per
         (sequence length, step, class) group, capturing class ratios that
         drift over the steps of a route.

A batch is a list of buckets, one per sequence length, each holding logits
(B, T-1, C) and labels (B, T-1). The loss is the weighted negative
log-likelihood summed over every edge, divided by the total edge count.
"""

from __future__ import annotations

import torch

LOSS_TYPES = ("ce", "cbce", "scbce")


def _cb_weight(count: torch.Tensor, beta: float) -> torch.Tensor:
    # (1 - beta) / (1 - beta^n); n >= 1 wherever this is applied
    if beta == 0.0:
        return torch.ones_like(count, dtype=torch.get_default_dtype())
    return (1.0 - beta) / (1.0 - torch.pow(torch.tensor(beta), count))


def sequence_loss(buckets: list[tuple[torch.Tensor, torch.Tensor]],
                  loss_type: str = "ce", beta: float = 0.99) -> torch.Tensor:
    """Mean-reduced loss over a batch of per-length buckets."""
    if loss_type not in LOSS_TYPES:
        raise ValueError(f"unknown loss {loss_type!r}; expected one of {LOSS_TYPES}")
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must be in [0, 1)")

    total_edges = sum(labels.numel() for _, labels in buckets)
    if total_edges == 0:
        raise ValueError("empty batch")

    if loss_type == "cbce":
        n_classes = buckets[0][0].shape[-1]
        counts = torch.zeros(n_classes)
        for _, labels in buckets:
            counts += torch.bincount(labels.reshape(-1), minlength=n_classes).to(counts)

    total = None
    for logits, labels in buckets:
        logp = torch.log_softmax(logits, dim=-1)
        nll = -logp.gather(-1, labels.unsqueeze(-1)).squeeze(-1)  # (B, T-1)
        if loss_type == "ce":
            w = torch.ones_like(nll)
        elif loss_type == "cbce":
            w = _cb_weight(counts, beta)[labels]
        else:  # scbce: counts per (step, class) inside this length bucket
            n_classes = logits.shape[-1]
            t_len = labels.shape[1]
            step_counts = torch.zeros(t_len, n_classes)
            for t in range(t_len):
                step_counts[t] = torch.bincount(labels[:, t], minlength=n_classes).to(
                    step_counts)
            w_table = torch.where(step_counts > 0,
                                  _cb_weight(step_counts, beta),
                                  torch.zeros_like(step_counts))
            w = w_table[torch.arange(t_len).unsqueeze(0), labels]
        contrib = (w.to(nll) * nll).sum()
        total = contrib if total is None else total + contrib
    return total / total_edges
