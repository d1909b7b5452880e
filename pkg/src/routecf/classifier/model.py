"""Many-to-many sequential edge-intention classifier.

Node encoder (permutation-invariant Transformer, separate depot projection),
edge encoder (endpoint embeddings concatenated with the per-step state), and
a causally masked Transformer decoder with a softmax head. No positional
encoding anywhere: node order carries no meaning and the step position is
already encoded in the state vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn

from ..core import ProblemKind
from .features import DEPOT_FEATURE_DIM, NODE_FEATURE_DIM, STATE_DIM


@dataclass(frozen=True)
class ModelConfig:
    n_classes: int
    node_feature_dim: int
    depot_feature_dim: int
    state_dim: int
    hidden_dim: int = 128
    n_heads: int = 8
    encoder_layers: int = 2
    decoder_layers: int = 2

    def __post_init__(self):
        if self.hidden_dim % self.n_heads:
            raise ValueError("hidden_dim must be divisible by n_heads")
        for name in ("n_classes", "node_feature_dim", "depot_feature_dim",
                     "state_dim", "hidden_dim", "n_heads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def for_kind(cls, kind: ProblemKind, n_classes: int, **kw) -> "ModelConfig":
        return cls(n_classes=n_classes,
                   node_feature_dim=NODE_FEATURE_DIM[kind],
                   depot_feature_dim=DEPOT_FEATURE_DIM[kind],
                   state_dim=STATE_DIM[kind], **kw)


def _uniform_init(module: nn.Module):
    """U(-1/sqrt(d), 1/sqrt(d)) with d = input dimension, for every linear map."""
    for m in module.modules():
        if isinstance(m, nn.Linear):
            bound = 1.0 / math.sqrt(m.in_features)
            nn.init.uniform_(m.weight, -bound, bound)
            if m.bias is not None:
                nn.init.uniform_(m.bias, -bound, bound)


class MultiHeadAttention(nn.Module):
    def __init__(self, hidden_dim: int, n_heads: int):
        super().__init__()
        self.h = hidden_dim
        self.m = n_heads
        self.dk = hidden_dim // n_heads
        self.q = nn.Linear(hidden_dim, hidden_dim, bias=False)
        self.k = nn.Linear(hidden_dim, hidden_dim, bias=False)
        self.v = nn.Linear(hidden_dim, hidden_dim, bias=False)
        self.out = nn.Linear(hidden_dim, hidden_dim, bias=False)

    def forward(self, x: torch.Tensor, mask: torch.Tensor | None = None):
        # x: (B, T, H); mask: (T, T) boolean, True = may attend
        b, t, _ = x.shape
        def split(z):
            return z.view(b, t, self.m, self.dk).transpose(1, 2)  # (B, M, T, dk)
        q, k, v = split(self.q(x)), split(self.k(x)), split(self.v(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.dk)  # (B, M, T, T)
        if mask is not None:
            scores = scores.masked_fill(~mask, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        ctx = attn @ v  # (B, M, T, dk)
        ctx = ctx.transpose(1, 2).reshape(b, t, self.h)
        return self.out(ctx)


class TransformerLayer(nn.Module):
    """Post-LN encoder layer: MHA + residual + LN, then FFN + residual + LN."""

    def __init__(self, hidden_dim: int, n_heads: int):
        super().__init__()
        self.mha = MultiHeadAttention(hidden_dim, n_heads)
        self.ln1 = nn.LayerNorm(hidden_dim)
        self.ffn = nn.Sequential(
            nn.Linear(hidden_dim, 4 * hidden_dim),
            nn.ReLU(),
            nn.Linear(4 * hidden_dim, hidden_dim),
        )
        self.ln2 = nn.LayerNorm(hidden_dim)

    def forward(self, x, mask=None):
        x = self.ln1(x + self.mha(x, mask))
        return self.ln2(x + self.ffn(x))


class EdgeClassifier(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        h = config.hidden_dim
        self.depot_proj = nn.Linear(config.depot_feature_dim, h)
        self.node_proj = nn.Linear(config.node_feature_dim, h)
        self.encoder = nn.ModuleList(
            TransformerLayer(h, config.n_heads) for _ in range(config.encoder_layers))
        self.edge_proj = nn.Linear(2 * h + config.state_dim, h, bias=False)
        self.decoder = nn.ModuleList(
            TransformerLayer(h, config.n_heads) for _ in range(config.decoder_layers))
        self.head = nn.Linear(h, config.n_classes)
        _uniform_init(self)

    def encode_nodes(self, depot_features: torch.Tensor,
                     node_features: torch.Tensor) -> torch.Tensor:
        """(B, D'), (B, N-1, D) -> node embeddings (B, N, H), depot first."""
        depot = self.depot_proj(depot_features).unsqueeze(1)
        others = self.node_proj(node_features)
        x = torch.cat([depot, others], dim=1)
        for layer in self.encoder:
            x = layer(x)
        if not torch.isfinite(x).all():
            raise FloatingPointError("non-finite activations in the node encoder")
        return x

    def encode_edges(self, node_emb: torch.Tensor, order: torch.Tensor,
                     states: torch.Tensor) -> torch.Tensor:
        """node_emb (B, N, H), order (B, T), states (B, T-1, D_st) -> (B, T-1, H)."""
        b = node_emb.shape[0]
        idx = torch.arange(b, device=node_emb.device).unsqueeze(1)
        tails = node_emb[idx, order[:, :-1]]
        heads = node_emb[idx, order[:, 1:]]
        return self.edge_proj(torch.cat([tails, heads, states], dim=-1))

    def decode(self, edge_emb: torch.Tensor) -> torch.Tensor:
        """Causally masked decoding: step t attends to steps <= t. (B,T-1,C)."""
        t = edge_emb.shape[1]
        mask = torch.tril(torch.ones(t, t, dtype=torch.bool, device=edge_emb.device))
        x = edge_emb
        for layer in self.decoder:
            x = layer(x, mask)
        return self.head(x)

    def forward(self, depot_features, node_features, order, states) -> torch.Tensor:
        node_emb = self.encode_nodes(depot_features, node_features)
        edge_emb = self.encode_edges(node_emb, order, states)
        return self.decode(edge_emb)

    def probabilities(self, *args, **kw) -> torch.Tensor:
        return torch.softmax(self.forward(*args, **kw), dim=-1)
