"""Command-line entry points for every pipeline stage.

Subcommands: solve, annotate, datagen, train, eval, predict, explain, serve.
All file I/O is JSON / JSON-lines using the library schemas.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .annotator import annotate_route, make_solver, plan_for
from .core import (
    ProblemKind,
    VrpError,
    instance_from_dict,
    route_from_dict,
)
from .datagen import GenConfig, gen_actual_route_dataset, gen_cf_route_dataset, \
    load_jsonl, save_jsonl
from .explainer import WhyNotQuestion, explain, rule_based_classifier
from .solver import FixedPrefix, SolverConfig, solve

log = logging.getLogger(__name__)


def _read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _write_json(path, data):
    if path == "-" or path is None:
        json.dump(data, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        Path(path).write_text(json.dumps(data, indent=2) + "\n")


def _parse_prefix(text: str) -> FixedPrefix:
    """Parse "0-3,3-7" into a fixed edge chain."""
    edges = []
    for part in text.split(","):
        a, b = part.strip().split("-")
        edges.append((int(a), int(b)))
    return FixedPrefix(tuple(edges))


def _solver_config(args) -> SolverConfig:
    return SolverConfig(engine=args.engine, rng_seed=args.seed)


def cmd_solve(args) -> int:
    instance = instance_from_dict(_read_json(args.instance))
    kind = ProblemKind(args.kind) if args.kind else None
    prefix = _parse_prefix(args.prefix) if args.prefix else None
    route = solve(instance, kind, prefix, _solver_config(args))
    _write_json(args.out, {"route": route.as_dict()})
    return 0


def cmd_annotate(args) -> int:
    instances = {row.get("sample_id", i): row
                 for i, row in enumerate(load_jsonl(args.instances))}
    routes = load_jsonl(args.routes)
    plan = plan_for(ProblemKind(args.plan)) if args.plan else None
    solver = make_solver(_solver_config(args))
    with open(args.out, "w") as fh:
        for i, row in enumerate(routes):
            sid = row.get("sample_id", i)
            inst_row = instances.get(sid)
            if inst_row is None:
                raise VrpError(f"no instance for sample {sid}")
            instance = instance_from_dict(inst_row.get("instance", inst_row))
            route = route_from_dict(instance, row.get("route", row))
            labels = annotate_route(route, instance, solver, plan)
            used = plan or plan_for(instance.kind)
            fh.write(json.dumps({
                "sample_id": sid,
                "labels": [l.class_id for l in labels],
                "class_names": list(used.class_names),
            }) + "\n")
    return 0


def cmd_datagen(args) -> int:
    split = tuple(float(x) for x in args.split.split(","))
    config = GenConfig(kind=ProblemKind(args.kind), n_nodes=args.n,
                       n_samples=args.samples, rng_seed=args.seed, split=split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = gen_actual_route_dataset(config)
    for name, chunk in zip(("train", "val", "test"), dataset.split(split)):
        save_jsonl(chunk, out / f"{name}.jsonl")
    if args.cf:
        cf = gen_cf_route_dataset(dataset, config)
        for name, chunk in zip(("train", "val", "test"), cf.split(split)):
            save_jsonl(chunk, out / f"cf_{name}.jsonl")
    print(f"wrote {len(dataset.samples)} samples to {out}")
    return 0


def _load_encoded(path):
    from .classifier import featurize
    rows = load_jsonl(path)
    samples, kind = [], None
    for row in rows:
        instance = instance_from_dict(row["instance"])
        kind = instance.kind
        route = route_from_dict(instance, row["route"])
        samples.append(featurize(instance, route, row["labels"]))
    return samples, kind


def cmd_train(args) -> int:
    import torch

    from .classifier import (
        EdgeClassifier,
        ModelConfig,
        TrainingConfig,
        save_checkpoint,
        train,
    )
    data = Path(args.data)
    train_samples, kind = _load_encoded(data / "train.jsonl")
    val_path = data / "val.jsonl"
    val_samples = _load_encoded(val_path)[0] if val_path.exists() else None
    torch.manual_seed(args.seed)
    model = EdgeClassifier(ModelConfig.for_kind(
        kind, n_classes=plan_for(kind).n_classes))
    cfg = TrainingConfig(loss=args.loss, beta=args.beta,
                         max_epochs=args.epochs, rng_seed=args.seed,
                         batch_size=args.batch_size,
                         learning_rate=args.learning_rate)
    history = train(model, train_samples, val_samples, cfg)
    save_checkpoint(args.out, model, cfg, history)
    print(f"best epoch {history.best_epoch}, "
          f"best val macro-F1 {history.best_val_macro_f1:.2f}" if val_samples
          else f"final loss {history.train_loss[-1]:.4f}")
    return 0


def cmd_eval(args) -> int:
    import torch

    from .classifier import (
        load_checkpoint,
        macro_f1,
        make_batches,
        sequential_confusion,
    )

    model, _ = load_checkpoint(args.model)
    samples, _ = _load_encoded(args.data)
    step_true: dict[int, list] = {}
    step_pred: dict[int, list] = {}
    y_true, y_pred = [], []
    model.eval()
    with torch.no_grad():
        for batch in make_batches(samples, 512):
            for depot, nodes, order, states, labels in batch:
                pred = model(depot, nodes, order, states).argmax(-1)
                for t in range(labels.shape[1]):
                    step_true.setdefault(t, []).extend(labels[:, t].tolist())
                    step_pred.setdefault(t, []).extend(pred[:, t].tolist())
                y_true.extend(labels.reshape(-1).tolist())
                y_pred.extend(pred.reshape(-1).tolist())
    c = model.config.n_classes
    mf1 = macro_f1(np.asarray(y_true), np.asarray(y_pred), c)
    print(f"macro-F1: {mf1:.2f}")
    if args.emit_seqconfmat:
        steps = sorted(step_true)
        conf = sequential_confusion(
            [np.asarray(step_true[t]) for t in steps],
            [np.asarray(step_pred[t]) for t in steps], c)
        conf["macro_f1"] = mf1
        _write_json(args.emit_seqconfmat, conf)
    return 0


def cmd_predict(args) -> int:
    from .classifier import load_checkpoint
    from .classifier import predict as model_predict
    instance = instance_from_dict(_read_json(args.instance))
    route = route_from_dict(instance, _read_json(args.route))
    if args.model:
        model, _ = load_checkpoint(args.model)
        intentions = model_predict(model, instance, route)
    else:
        intentions = rule_based_classifier()(instance, route)
    _write_json(args.out, {"intentions": [i.as_dict() for i in intentions]})
    return 0


def cmd_explain(args) -> int:
    instance = instance_from_dict(_read_json(args.instance))
    route = route_from_dict(instance, _read_json(args.route))
    tail = route.edges[args.t_ex - 1][0]
    question = WhyNotQuestion(actual_route=route, t_ex=args.t_ex,
                              cf_edge=(tail, args.cf_to))
    classifier = None
    if args.model:
        from .classifier import load_checkpoint
        from .classifier import predict as model_predict
        model, _ = load_checkpoint(args.model)
        classifier = lambda inst, r: model_predict(model, inst, r)
    bundle = explain(instance, question, classifier,
                     SolverConfig(engine=args.engine, rng_seed=args.seed),
                     text_backend=args.text)
    _write_json(args.out, bundle.as_dict())
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve
    config = ServiceConfig.from_file(args.config) if args.config \
        else ServiceConfig()
    if args.port:
        config.port = args.port
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="routecf",
        description="Routing, edge-intention labeling, and counterfactual "
                    "route explanation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_solver(p):
        p.add_argument("--engine", choices=("heuristic", "exact"),
                       default="heuristic")
        p.add_argument("--seed", type=int, default=1234)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--kind", default=None)
    p.add_argument("--prefix", default=None,
                   help='fixed edge chain, e.g. "0-3,3-7"')
    p.add_argument("--out", default=None)
    common_solver(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("annotate", help="label routes by re-solve comparison")
    p.add_argument("--routes", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--plan", default=None)
    p.add_argument("--out", required=True)
    common_solver(p)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("datagen", help="generate labeled datasets")
    p.add_argument("--kind", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--split", default="0.9,0.05,0.05")
    p.add_argument("--out", required=True)
    p.add_argument("--cf", action="store_true",
                   help="also emit counterfactual-route files")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="train the edge classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--loss", default="scbce", choices=("ce", "cbce", "scbce"))
    p.add_argument("--beta", type=float, default=0.99)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--out", default="model.ckpt.npz")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--emit-seqconfmat", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="label one route")
    p.add_argument("--model", default=None)
    p.add_argument("--instance", required=True)
    p.add_argument("--route", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="answer a why-not question")
    p.add_argument("--instance", required=True)
    p.add_argument("--route", required=True)
    p.add_argument("--t-ex", type=int, required=True, dest="t_ex")
    p.add_argument("--cf-to", type=int, required=True, dest="cf_to")
    p.add_argument("--model", default=None)
    p.add_argument("--text", choices=("template", "llm"), default="template")
    p.add_argument("--out", default=None)
    common_solver(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VrpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
