"""Training harness: applies a composite policy while training the desk
classifier, and reports per-class and overall test accuracy over seeds.

Augmentation is always applied online (fresh draws per sample per epoch);
the test set is never augmented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nnet
from .data import LabeledDataset
from .errors import ConfigError, InvalidInputError
from .evaluator import DeskClassifier
from .ops import NUM_TRIPLES, apply_triple, code_to_triple
from .policy import CompositePolicy
from .rng import SplitMix64, hash_seed

TAG_AUGMENT = 3

POLICY_MODE = "policy"
RANDOM_MODE = "random"
NONE_MODE = "none"


@dataclass
class TrainRunConfig:
    epochs: int = 30
    lr: float = 0.005
    batch_size: int = 32
    hidden: tuple[int, ...] = (64,)
    seeds: tuple[int, ...] = (0, 1, 2)
    mode: str = POLICY_MODE  # policy | random | none

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or not self.seeds:
            raise ConfigError("epochs, batch_size and seeds must be positive")
        if self.mode not in (POLICY_MODE, RANDOM_MODE, NONE_MODE):
            raise ConfigError(f"unknown policy mode {self.mode!r}")


def augment_sample(policy: CompositePolicy, image: np.ndarray, label: int,
                   rng: SplitMix64) -> np.ndarray:
    """Uniformly pick one of the label's triples, then apply it with fresh
    random magnitudes."""
    triples = policy.for_label(label).triples
    return apply_triple(image, triples[rng.randbelow(len(triples))], rng)


def _augment_for_mode(config: TrainRunConfig, policy, image, label, rng):
    if config.mode == NONE_MODE:
        return image
    if config.mode == RANDOM_MODE:
        return apply_triple(image, code_to_triple(rng.randbelow(NUM_TRIPLES)),
                            rng)
    return augment_sample(policy, image, label, rng)


def _train_one(train: LabeledDataset, config: TrainRunConfig,
               policy: CompositePolicy | None, seed: int) -> DeskClassifier:
    h, w, c = train.image_shape
    dims = [h * w * c, *config.hidden, train.num_classes]
    net = nnet.init_dense_net(dims, seed=hash_seed(seed, 0) % 2**32)
    params = net.parameters()
    state = nnet.AdamState.for_params(params, lr=config.lr)
    order_rng = np.random.default_rng(hash_seed(seed, 1) % 2**32)
    n = len(train)
    labels = train.labels
    for epoch in range(config.epochs):
        order = order_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = np.empty((len(idx), h, w, c), dtype=np.uint8)
            for k, i in enumerate(idx):
                # per-sample stream: schedule-independent augmentation draws
                rng = SplitMix64(hash_seed(seed, epoch, int(i), TAG_AUGMENT))
                batch[k] = _augment_for_mode(config, policy,
                                             train.images[i], int(labels[i]),
                                             rng)
            x = batch.reshape(len(idx), -1).astype(np.float64) / 255.0
            logits, cache = nnet.forward(net, x)
            _, dlogits = nnet.softmax_cross_entropy(logits, labels[idx])
            grads, _ = nnet.backward(net, cache, dlogits)
            nnet.adam_step(params, grads, state)
    return DeskClassifier(net, train.num_classes, (h, w, c))


def evaluate_classifier(clf: DeskClassifier, test: LabeledDataset
                        ) -> tuple[float, np.ndarray]:
    preds = clf.predict(test.images)
    overall = float(np.mean(preds == test.labels))
    per_class = np.array([
        float(np.mean(preds[test.labels == y] == y))
        for y in range(test.num_classes)
    ])
    return overall, per_class


def train_with_policy(train: LabeledDataset, test: LabeledDataset,
                      config: TrainRunConfig,
                      policy: CompositePolicy | None = None,
                      config_digest: str = "") -> dict:
    """Train once per seed with online augmentation; report accuracy
    mean/std overall and per class."""
    if config.mode == POLICY_MODE:
        if policy is None:
            raise InvalidInputError("policy mode requires a composite policy")
        covered = {p.label for p in policy.policies}
        needed = set(np.unique(train.labels).tolist())
        if not needed <= covered:
            raise InvalidInputError(
                f"policy covers labels {sorted(covered)} but dataset has "
                f"{sorted(needed)}")
    overall_runs = []
    per_class_runs = []
    for seed in config.seeds:
        clf = _train_one(train, config, policy, seed)
        overall, per_class = evaluate_classifier(clf, test)
        overall_runs.append(overall)
        per_class_runs.append(per_class)
    per_class_arr = np.stack(per_class_runs)
    return {
        "mode": config.mode,
        "seeds": list(config.seeds),
        "overall": {
            "mean": float(np.mean(overall_runs)),
            "std": float(np.std(overall_runs)),
            "runs": [float(v) for v in overall_runs],
        },
        "per_class": [
            {"label": y,
             "mean": float(per_class_arr[:, y].mean()),
             "std": float(per_class_arr[:, y].std())}
            for y in range(test.num_classes)
        ],
        "config": {
            "epochs": config.epochs,
            "lr": config.lr,
            "batch_size": config.batch_size,
            "hidden": list(config.hidden),
        },
        "config_digest": config_digest,
    }
