"""Label-aware reward surrogate.

Maps (augmentation triple, label) to a predicted reward through two
embedding tables (ops and labels, width 100) and a relu MLP trunk
[200, 100, 100, 100, 1]. The triple is mean-pooled over its three op
embeddings, so predictions are invariant to op order within the triple;
pooling sums in sorted-code order to make that invariance bit-exact.

Retrained from scratch on the full history each search iteration: 100
epochs of Adam at lr 0.01 on squared error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import nnet
from .errors import InvalidInputError
from .ops import NUM_TRIPLES, OP_NAMES
from .rng import hash_seed

EMBED_DIM = 100
TRUNK_DIMS = [2 * EMBED_DIM, 100, 100, 100, 1]
TRAIN_EPOCHS = 100
TRAIN_LR = 0.01
TRAIN_BATCH = 64


@dataclass
class PredictorNet:
    op_embeddings: np.ndarray  # (16, EMBED_DIM)
    label_embeddings: np.ndarray  # (num_labels, EMBED_DIM)
    trunk: nnet.DenseNet

    @property
    def num_labels(self) -> int:
        return self.label_embeddings.shape[0]


@dataclass
class PredictorMetrics:
    spearman: float
    mae: float
    train_size: int
    test_size: int
    degenerate: bool = False  # constant targets or predictions: spearman forced to 0


def init_predictor(num_labels: int, seed: int) -> PredictorNet:
    if num_labels < 1:
        raise InvalidInputError("num_labels must be >= 1")
    rng = np.random.default_rng(seed)
    op_emb = rng.uniform(-0.1, 0.1, size=(len(OP_NAMES), EMBED_DIM))
    label_emb = rng.uniform(-0.1, 0.1, size=(num_labels, EMBED_DIM))
    trunk = nnet.init_dense_net(TRUNK_DIMS, seed=hash_seed(seed, 1) % 2**32)
    return PredictorNet(op_emb, label_emb, trunk)


def _check_labels(net: PredictorNet, labels: np.ndarray) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= net.num_labels):
        raise InvalidInputError(
            f"label out of range [0, {net.num_labels}): {labels!r}")


def _pool_ops(op_embeddings: np.ndarray, sorted_triples: np.ndarray
              ) -> np.ndarray:
    """Mean of the three op rows, summed in sorted-code order so the result
    is bit-identical under op permutation; all-equal triples short-circuit
    to the row itself (the exact mathematical mean)."""
    s = sorted_triples
    pooled = (op_embeddings[s[:, 0]] + op_embeddings[s[:, 1]]
              + op_embeddings[s[:, 2]]) / 3.0
    same = (s[:, 0] == s[:, 1]) & (s[:, 1] == s[:, 2])
    if np.any(same):
        pooled[same] = op_embeddings[s[same, 0]]
    return pooled


def encode_batch(net: PredictorNet, triples: np.ndarray, labels: np.ndarray
                 ) -> np.ndarray:
    """(n, 3) op codes + (n,) labels -> (n, 2*EMBED_DIM) trunk inputs."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if triples.min(initial=0) < 0 or triples.max(initial=0) >= len(OP_NAMES):
        raise InvalidInputError("op code out of range")
    _check_labels(net, labels)
    s = np.sort(triples, axis=1)
    return np.concatenate([_pool_ops(net.op_embeddings, s),
                           net.label_embeddings[labels]], axis=1)


def encode(net: PredictorNet, triple, label: int) -> np.ndarray:
    """Single (triple, label) -> 200-dim trunk input vector."""
    return encode_batch(net, np.array([triple]), np.array([label]))[0]


def predict_batch(net: PredictorNet, triples: np.ndarray, labels: np.ndarray
                  ) -> np.ndarray:
    x = encode_batch(net, triples, labels)
    out, _ = nnet.forward(net.trunk, x)
    return out[:, 0]


def predict(net: PredictorNet, triple, label: int) -> float:
    return float(predict_batch(net, np.array([triple]), np.array([label]))[0])


def _history_arrays(history) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    triples = np.array([tuple(rec.triple) for rec in history], dtype=np.int64)
    labels = np.array([rec.label for rec in history], dtype=np.int64)
    rewards = np.array([rec.reward for rec in history], dtype=np.float64)
    return triples, labels, rewards


def train_predictor(history, num_labels: int, seed: int,
                    epochs: int = TRAIN_EPOCHS, lr: float = TRAIN_LR,
                    batch_size: int = TRAIN_BATCH) -> PredictorNet:
    """Fresh predictor fit to the whole history (all labels jointly)."""
    history = list(history)
    if not history:
        raise InvalidInputError("history is empty")
    triples, labels, rewards = _history_arrays(history)
    return fit_predictor(triples, labels, rewards, num_labels, seed,
                         epochs=epochs, lr=lr, batch_size=batch_size)


def fit_predictor(triples: np.ndarray, labels: np.ndarray,
                  rewards: np.ndarray, num_labels: int, seed: int,
                  epochs: int = TRAIN_EPOCHS, lr: float = TRAIN_LR,
                  batch_size: int = TRAIN_BATCH) -> PredictorNet:
    net = init_predictor(num_labels, seed)
    _check_labels(net, np.asarray(labels))
    n = len(rewards)
    sorted_triples = np.sort(np.asarray(triples, dtype=np.int64), axis=1)
    labels = np.asarray(labels, dtype=np.int64)
    rewards = np.asarray(rewards, dtype=np.float64)

    params = net.trunk.parameters() + [net.op_embeddings, net.label_embeddings]
    state = nnet.AdamState.for_params(params, lr=lr)
    rng = np.random.default_rng(hash_seed(seed, 2) % 2**32)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            st = sorted_triples[idx]
            lb = labels[idx]
            pooled = _pool_ops(net.op_embeddings, st)
            x = np.concatenate([pooled, net.label_embeddings[lb]], axis=1)
            pred, cache = nnet.forward(net.trunk, x)
            grad = 2.0 * (pred[:, 0] - rewards[idx])[:, None] / idx.size
            trunk_grads, dx = nnet.backward(net.trunk, cache, grad)
            d_op = np.zeros_like(net.op_embeddings)
            d_label = np.zeros_like(net.label_embeddings)
            d_pooled = dx[:, :EMBED_DIM] / 3.0
            for col in range(3):
                np.add.at(d_op, st[:, col], d_pooled)
            np.add.at(d_label, lb, dx[:, EMBED_DIM:])
            nnet.adam_step(params, trunk_grads + [d_op, d_label], state)
    return net


def holdout_metrics(history, num_labels: int, split_seed: int,
                    epochs: int = TRAIN_EPOCHS, lr: float = TRAIN_LR,
                    batch_size: int = TRAIN_BATCH) -> PredictorMetrics:
    """Seeded 80/20 shuffle split; Spearman and MAE on the held-out 20%."""
    history = list(history)
    if len(history) < 5:
        raise InvalidInputError("need at least 5 history records for a holdout")
    triples, labels, rewards = _history_arrays(history)
    n = len(history)
    rng = np.random.default_rng(split_seed)
    order = rng.permutation(n)
    n_train = max(1, min(n - 1, int(round(0.8 * n))))
    tr, te = order[:n_train], order[n_train:]
    net = fit_predictor(triples[tr], labels[tr], rewards[tr], num_labels,
                        seed=split_seed, epochs=epochs, lr=lr,
                        batch_size=batch_size)
    preds = predict_batch(net, triples[te], labels[te])
    actual = rewards[te]
    mae = float(np.mean(np.abs(preds - actual)))
    if np.all(actual == actual[0]) or np.all(preds == preds[0]):
        return PredictorMetrics(0.0, mae, len(tr), len(te), degenerate=True)
    rho = stats.spearmanr(preds, actual).statistic
    if np.isnan(rho):
        return PredictorMetrics(0.0, mae, len(tr), len(te), degenerate=True)
    return PredictorMetrics(float(rho), mae, len(tr), len(te))


def save_predictor(net: PredictorNet, path: str) -> None:
    """Versioned JSON checkpoint (embedding tables + trunk weights)."""
    doc = {
        "version": 1,
        "kind": "reward_predictor",
        "embed_dim": EMBED_DIM,
        "num_labels": net.num_labels,
        "op_names": OP_NAMES,
        "op_embeddings": net.op_embeddings.tolist(),
        "label_embeddings": net.label_embeddings.tolist(),
        "trunk": [
            {"activation": l.activation, "weights": l.weights.tolist(),
             "bias": l.bias.tolist()}
            for l in net.trunk.layers
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_predictor(path: str) -> PredictorNet:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("kind") != "reward_predictor" or doc.get("version") != 1:
        raise InvalidInputError(f"{path}: not a version-1 predictor checkpoint")
    if doc.get("op_names") != OP_NAMES:
        raise InvalidInputError(f"{path}: op table does not match this build")
    trunk = nnet.DenseNet([
        nnet.DenseLayer(np.array(l["weights"], dtype=np.float64),
                        np.array(l["bias"], dtype=np.float64),
                        l["activation"])
        for l in doc["trunk"]
    ])
    return PredictorNet(np.array(doc["op_embeddings"], dtype=np.float64),
                        np.array(doc["label_embeddings"], dtype=np.float64),
                        trunk)


def full_space_size() -> int:
    return NUM_TRIPLES
