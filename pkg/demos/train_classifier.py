"""Train the edge-intention classifier on a small generated dataset and
compare the step-balanced loss against plain cross-entropy.

Run: python3 demos/train_classifier.py    (a few minutes on a laptop CPU)
"""

import numpy as np
import torch

from routecf import GenConfig, ProblemKind, SolverConfig, gen_actual_route_dataset
from routecf.classifier import (
    EdgeClassifier,
    ModelConfig,
    TrainingConfig,
    evaluate_model,
    featurize,
    predict,
    train,
)


def main():
    config = GenConfig(kind=ProblemKind.TSPTW, n_nodes=8, n_samples=300,
                       rng_seed=11,
                       solver=SolverConfig(restarts=1,
                                           local_search_iterations=300))
    dataset = gen_actual_route_dataset(config)
    encoded = [featurize(s.instance, s.route,
                         [l.class_id for l in s.labels])
               for s in dataset.samples]
    train_set, val_set, test_set = encoded[:240], encoded[240:270], encoded[270:]

    for loss in ("ce", "scbce"):
        torch.manual_seed(0)
        model = EdgeClassifier(ModelConfig.for_kind(
            ProblemKind.TSPTW, n_classes=dataset.plan.n_classes,
            hidden_dim=64, n_heads=4, encoder_layers=1, decoder_layers=1))
        history = train(model, train_set, val_set,
                        TrainingConfig(loss=loss, batch_size=64,
                                       learning_rate=3e-3, max_epochs=20,
                                       rng_seed=0))
        score = evaluate_model(model, test_set)
        print(f"{loss:6s}: best epoch {history.best_epoch:2d}  "
              f"val MF1 {history.best_val_macro_f1:5.1f}  "
              f"test MF1 {score:5.1f}")

    # label one unseen route with the last trained model
    sample = dataset.samples[-1]
    intentions = predict(model, sample.instance, sample.route)
    agree = np.mean([p.class_id == l.class_id
                     for p, l in zip(intentions, sample.labels)])
    print(f"\nper-edge agreement with the labeling rule on one route: "
          f"{agree:.2f}")
    for edge, p in zip(sample.route.edges, intentions):
        print(f"  {edge[0]} -> {edge[1]}  [{p.class_name}]")


if __name__ == "__main__":
    main()
