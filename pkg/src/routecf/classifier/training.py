"""Training loop, batching, checkpointing, prediction, and gradient checking.

Samples are bucketed by exact (node count, route length) so every tensor in a
bucket stacks without padding; the loss's per-(length, step, class) weight
groups then fall out naturally.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from ..annotator import plan_for
from ..core import EdgeIntention, Route, VrpError, VrpInstance
from .features import EncodedSample, featurize
from .losses import LOSS_TYPES, sequence_loss
from .metrics import macro_f1
from .model import EdgeClassifier, ModelConfig


@dataclass(frozen=True)
class TrainingConfig:
    loss: str = "scbce"
    beta: float = 0.99
    batch_size: int = 256
    learning_rate: float = 1e-3
    max_epochs: int = 100
    rng_seed: int = 1234

    def __post_init__(self):
        if self.loss not in LOSS_TYPES:
            raise ValueError(f"loss must be one of {LOSS_TYPES}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must be in [0, 1)")
        for name in ("batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def _group_key(s: EncodedSample) -> tuple[int, int]:
    return (s.node_features.shape[0] + 1, len(s.order))


def _stack_bucket(samples: list[EncodedSample], device=None, with_labels=True):
    """Stack same-shape samples into model-input tensors (+ labels)."""
    t = lambda arrs, dt: torch.as_tensor(np.stack(arrs), dtype=dt, device=device)
    depot = t([s.depot_features for s in samples], torch.get_default_dtype())
    nodes = t([s.node_features for s in samples], torch.get_default_dtype())
    order = t([s.order for s in samples], torch.long)
    states = t([s.states for s in samples], torch.get_default_dtype())
    if not with_labels:
        return depot, nodes, order, states
    labels = t([s.labels for s in samples], torch.long)
    return depot, nodes, order, states, labels


def make_batches(samples: list[EncodedSample], batch_size: int,
                 rng: np.random.Generator | None = None):
    """Yield batches: each is a list of per-(N, T) buckets of stacked tensors.

    A batch holds up to batch_size samples; buckets never mix shapes.
    """
    order = np.arange(len(samples))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(samples), batch_size):
        chunk = [samples[i] for i in order[start:start + batch_size]]
        groups: dict[tuple[int, int], list[EncodedSample]] = {}
        for s in chunk:
            groups.setdefault(_group_key(s), []).append(s)
        yield [_stack_bucket(g) for g in groups.values()]


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_macro_f1: list[float | None] = field(default_factory=list)
    best_epoch: int = -1
    best_val_macro_f1: float = float("-inf")
    aborted: str | None = None

    def as_dict(self) -> dict:
        out = asdict(self)
        if not np.isfinite(out["best_val_macro_f1"]):
            out["best_val_macro_f1"] = None
        return out


def _forward_buckets(model: EdgeClassifier, batch):
    out = []
    for depot, nodes, order, states, labels in batch:
        logits = model(depot, nodes, order, states)
        out.append((logits, labels))
    return out


def evaluate_model(model: EdgeClassifier, samples: list[EncodedSample],
                   batch_size: int = 512) -> float:
    """Pooled macro-F1 (0-100) of argmax predictions over labeled samples."""
    model.eval()
    y_true, y_pred = [], []
    with torch.no_grad():
        for batch in make_batches(samples, batch_size):
            for logits, labels in _forward_buckets(model, batch):
                y_true.append(labels.reshape(-1).numpy())
                y_pred.append(logits.argmax(-1).reshape(-1).numpy())
    model.train()
    return macro_f1(np.concatenate(y_true), np.concatenate(y_pred),
                    model.config.n_classes)


def train(model: EdgeClassifier, train_samples: list[EncodedSample],
          val_samples: list[EncodedSample] | None = None,
          config: TrainingConfig = TrainingConfig()) -> TrainingHistory:
    """Adam at a constant rate; keeps the epoch with the best validation
    macro-F1 (training loss when no validation split is given). The model is
    left holding the best parameters. NaN loss aborts, restoring the last
    finite parameters."""
    torch.manual_seed(config.rng_seed)
    rng = np.random.default_rng(config.rng_seed)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    history = TrainingHistory()
    best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    last_finite = {k: v.detach().clone() for k, v in model.state_dict().items()}

    for epoch in range(config.max_epochs):
        epoch_loss, n_batches = 0.0, 0
        for batch in make_batches(train_samples, config.batch_size, rng):
            opt.zero_grad()
            loss = sequence_loss(_forward_buckets(model, batch),
                                 config.loss, config.beta)
            if not torch.isfinite(loss):
                model.load_state_dict(last_finite)
                history.aborted = f"non-finite loss at epoch {epoch}"
                return history
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach())
            n_batches += 1
        last_finite = {k: v.detach().clone() for k, v in model.state_dict().items()}
        history.train_loss.append(epoch_loss / max(n_batches, 1))

        if val_samples:
            score = evaluate_model(model, val_samples)
        else:
            score = -history.train_loss[-1]
        history.val_macro_f1.append(score if val_samples else None)
        if score > history.best_val_macro_f1:
            history.best_val_macro_f1 = score
            history.best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    return history


def predict(model: EdgeClassifier, instance: VrpInstance,
            route: Route) -> list[EdgeIntention]:
    """Per-edge intention labels for one route (argmax of the class head)."""
    plan = plan_for(instance.kind)
    if plan.n_classes != model.config.n_classes:
        raise VrpError("model class count does not match the instance kind")
    enc = featurize(instance, route)
    depot, nodes, order, states = _stack_bucket([enc], with_labels=False)
    model.eval()
    with torch.no_grad():
        ids = model(depot, nodes, order, states).argmax(-1)[0].tolist()
    return [EdgeIntention(class_id=c, class_name=plan.class_names[c]) for c in ids]


def predict_batch(model: EdgeClassifier, pairs: list[tuple[VrpInstance, Route]],
                  batch_size: int = 512) -> list[list[int]]:
    """Class ids for many routes, bucketed for throughput; order preserved."""
    encoded = [featurize(inst, route) for inst, route in pairs]
    keyed: dict[tuple[int, int], list[int]] = {}
    for i, s in enumerate(encoded):
        keyed.setdefault(_group_key(s), []).append(i)
    out: list[list[int] | None] = [None] * len(pairs)
    model.eval()
    with torch.no_grad():
        for indices in keyed.values():
            for start in range(0, len(indices), batch_size):
                chunk = indices[start:start + batch_size]
                tensors = _stack_bucket([encoded[i] for i in chunk],
                                        with_labels=False)
                preds = model(*tensors).argmax(-1)
                for row, i in zip(preds, chunk):
                    out[i] = row.tolist()
    return out


def save_checkpoint(path, model: EdgeClassifier,
                    training: TrainingConfig | None = None,
                    history: TrainingHistory | None = None):
    """Self-describing container: config JSON + named parameter arrays."""
    meta = {
        "model_config": asdict(model.config),
        "training_config": asdict(training) if training else None,
        "history": history.as_dict() if history else None,
    }
    arrays = {f"param::{k}": v.detach().cpu().double().numpy()
              for k, v in model.state_dict().items()}
    np.savez(path, __meta__=np.frombuffer(
        json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> tuple[EdgeClassifier, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        model = EdgeClassifier(ModelConfig(**meta["model_config"]))
        state = {k[len("param::"):]: torch.as_tensor(
                     data[k], dtype=torch.get_default_dtype())
                 for k in data.files if k.startswith("param::")}
    model.load_state_dict(state)
    return model, meta


def finite_difference_check(model: EdgeClassifier, batch,
                            loss_type: str = "ce", beta: float = 0.99,
                            epsilon: float = 1e-5, n_params: int = 200,
                            rng_seed: int = 0) -> float:
    """Max relative error between analytic gradients and central differences
    over a random parameter subset. Run under double precision."""
    def loss_value() -> torch.Tensor:
        return sequence_loss(_forward_buckets(model, batch), loss_type, beta)

    model.zero_grad()
    loss_value().backward()
    params = [p for p in model.parameters() if p.grad is not None]
    flat_grad = torch.cat([p.grad.reshape(-1) for p in params])
    flats = [p.reshape(-1) for p in params]
    sizes = [f.numel() for f in flats]
    total = sum(sizes)

    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(total, size=min(n_params, total), replace=False)
    offsets = np.cumsum([0] + sizes)

    worst = 0.0
    with torch.no_grad():
        for flat_idx in picks:
            pi = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
            j = int(flat_idx - offsets[pi])
            orig = float(flats[pi][j])
            flats[pi][j] = orig + epsilon
            up = float(loss_value())
            flats[pi][j] = orig - epsilon
            down = float(loss_value())
            flats[pi][j] = orig
            fd = (up - down) / (2 * epsilon)
            an = float(flat_grad[flat_idx])
            denom = max(abs(fd), abs(an), 1e-8)
            worst = max(worst, abs(fd - an) / denom)
    return worst
