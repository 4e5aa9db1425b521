"""Density-matching reward evaluation.

A reward for an augmentation triple is the change in a frozen classifier's
validation accuracy when the triple is applied to the validation samples:
per label (the core path) or over the whole validation set (the
label-invariant ablation path). Evaluation never retrains the classifier.

Evaluators expose: num_labels, label_reward(triple, label, seed) and
dataset_reward(triple, seed). The built-in one wraps the desk classifier;
ExternalEvaluator speaks the line-delimited JSON wire protocol to a child
process (see docs/protocol.md).
"""

from __future__ import annotations

import json
import select
import subprocess
from dataclasses import dataclass

import numpy as np

from . import nnet
from .data import LabeledDataset
from .errors import ConfigError, EvaluatorError, InvalidInputError
from .ops import OP_NAMES, AugTriple, apply_triple
from .rng import SplitMix64, hash_seed

PROTOCOL_VERSION = 1


@dataclass
class ClassifierConfig:
    hidden: tuple[int, ...] = (64,)
    epochs: int = 30
    lr: float = 0.005
    batch_size: int = 32


@dataclass
class DeskClassifier:
    net: nnet.DenseNet
    num_classes: int
    input_shape: tuple[int, int, int]
    train_accuracy: float = float("nan")

    def logits(self, images: np.ndarray) -> np.ndarray:
        x = np.asarray(images, dtype=np.float64).reshape(len(images), -1) / 255.0
        out, _ = nnet.forward(self.net, x)
        return out

    def predict(self, images: np.ndarray) -> np.ndarray:
        """Argmax class per image; ties resolved to the lowest class index."""
        return np.argmax(self.logits(images), axis=1)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "kind": "dense_classifier",
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "layers": [
                {
                    "activation": layer.activation,
                    "weights": layer.weights.tolist(),
                    "bias": layer.bias.tolist(),
                }
                for layer in self.net.layers
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeskClassifier":
        layers = [
            nnet.DenseLayer(np.array(l["weights"], dtype=np.float64),
                            np.array(l["bias"], dtype=np.float64),
                            l["activation"])
            for l in d["layers"]
        ]
        return cls(nnet.DenseNet(layers), int(d["num_classes"]),
                   tuple(d["input_shape"]))


def save_classifier(clf: DeskClassifier, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(clf.to_dict(), fh)


def load_classifier(path: str) -> DeskClassifier:
    with open(path) as fh:
        return DeskClassifier.from_dict(json.load(fh))


def pretrain_classifier(train: LabeledDataset, config: ClassifierConfig,
                        seed: int) -> DeskClassifier:
    """Cross-entropy pre-training of the frozen reward model."""
    if len(train) == 0:
        raise ConfigError("training set is empty")
    counts = train.class_counts()
    if np.count_nonzero(counts) < 2:
        raise ConfigError("need at least two non-empty classes to pre-train")
    if config.epochs <= 0 or config.batch_size <= 0:
        raise ConfigError("epochs and batch_size must be positive")

    h, w, c = train.image_shape
    dims = [h * w * c, *config.hidden, train.num_classes]
    net = nnet.init_dense_net(dims, seed=seed)
    x = train.images.reshape(len(train), -1).astype(np.float64) / 255.0
    y = train.labels
    params = net.parameters()
    state = nnet.AdamState.for_params(params, lr=config.lr)
    rng = np.random.default_rng(seed)
    for _ in range(config.epochs):
        order = rng.permutation(len(train))
        for start in range(0, len(train), config.batch_size):
            idx = order[start:start + config.batch_size]
            logits, cache = nnet.forward(net, x[idx])
            _, dlogits = nnet.softmax_cross_entropy(logits, y[idx])
            grads, _ = nnet.backward(net, cache, dlogits)
            nnet.adam_step(params, grads, state)

    clf = DeskClassifier(net, train.num_classes, (h, w, c))
    clf.train_accuracy = float(np.mean(clf.predict(train.images) == y))
    return clf


class BuiltinEvaluator:
    """In-process density-matching evaluator over a frozen desk classifier."""

    def __init__(self, classifier: DeskClassifier, val: LabeledDataset):
        if val.num_classes != classifier.num_classes:
            raise ConfigError("classifier and validation set disagree on classes")
        if val.class_counts().min() == 0:
            raise ConfigError("every label needs at least one validation sample")
        self.classifier = classifier
        self.val = val
        self.num_labels = val.num_classes
        self._by_label = val.indices_by_label()
        preds = classifier.predict(val.images)
        self.baseline_overall = float(np.mean(preds == val.labels))
        self.baseline_per_label = {
            y: float(np.mean(preds[idx] == y))
            for y, idx in self._by_label.items()
        }

    def per_label_accuracy(self, label: int, images: np.ndarray) -> float:
        """Fraction of images classified as `label`."""
        if len(images) == 0:
            raise InvalidInputError("no images to evaluate")
        preds = self.classifier.predict(np.asarray(images))
        return float(np.mean(preds == label))

    def _augment(self, indices: np.ndarray, triple: AugTriple, seed: int
                 ) -> np.ndarray:
        # Per-sample stream keyed by (eval seed, global validation index) so
        # label- and dataset-scope evaluations share identical draws.
        out = np.empty((len(indices), *self.val.image_shape), dtype=np.uint8)
        for k, i in enumerate(indices):
            stream = SplitMix64(hash_seed(seed, int(i)))
            out[k] = apply_triple(self.val.images[i], triple, stream)
        return out

    def label_reward(self, triple: AugTriple, label: int, seed: int) -> float:
        if label not in self._by_label:
            raise InvalidInputError(f"unknown label {label}")
        idx = self._by_label[label]
        acc = self.per_label_accuracy(label, self._augment(idx, triple, seed))
        return acc - self.baseline_per_label[label]

    def dataset_reward(self, triple: AugTriple, seed: int) -> float:
        idx = np.arange(len(self.val))
        preds = self.classifier.predict(self._augment(idx, triple, seed))
        return float(np.mean(preds == self.val.labels)) - self.baseline_overall


class DatasetLevelEvaluator:
    """Label-invariant ablation: a single pseudo-label whose reward is
    whole-set density matching."""

    def __init__(self, inner: BuiltinEvaluator):
        self.inner = inner
        self.num_labels = 1

    def label_reward(self, triple: AugTriple, label: int, seed: int) -> float:
        if label != 0:
            raise InvalidInputError("dataset-level evaluator has a single label 0")
        return self.inner.dataset_reward(triple, seed)

    def dataset_reward(self, triple: AugTriple, seed: int) -> float:
        return self.inner.dataset_reward(triple, seed)


class ExternalEvaluator:
    """Client for an external reward process speaking the wire protocol."""

    def __init__(self, command: list[str], num_labels: int, val_spec: dict,
                 timeout: float = 60.0):
        self.num_labels = num_labels
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise EvaluatorError(f"cannot spawn evaluator {command!r}: {exc}")
        self._buf = b""
        reply = self._request({
            "cmd": "init",
            "num_labels": num_labels,
            "ops": OP_NAMES,
            "val_spec": val_spec,
        })
        if reply.get("ok") is not True:
            raise EvaluatorError(f"evaluator rejected init: {reply!r}")

    def _read_line(self) -> bytes:
        stdout = self._proc.stdout
        assert stdout is not None
        while b"\n" not in self._buf:
            ready, _, _ = select.select([stdout], [], [], self.timeout)
            if not ready:
                raise EvaluatorError("evaluator timed out")
            chunk = stdout.raw.read(65536)  # type: ignore[attr-defined]
            if not chunk:
                raise EvaluatorError("evaluator closed its output")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def _request(self, msg: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise EvaluatorError("evaluator process has exited")
        try:
            assert proc.stdin is not None
            proc.stdin.write((json.dumps(msg) + "\n").encode())
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EvaluatorError(f"evaluator pipe broken: {exc}")
        line = self._read_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise EvaluatorError(f"malformed evaluator reply: {line!r}")
        if "error" in reply:
            raise EvaluatorError(f"evaluator error: {reply['error']}")
        return reply

    def _eval(self, triple: AugTriple, label: int, scope: str, seed: int) -> float:
        reply = self._request({
            "cmd": "eval",
            "label": int(label),
            "triple": [int(t) for t in triple],
            "scope": scope,
            "seed": int(seed),
        })
        if "reward" not in reply:
            raise EvaluatorError(f"reply missing reward: {reply!r}")
        return float(reply["reward"])

    def label_reward(self, triple: AugTriple, label: int, seed: int) -> float:
        return self._eval(triple, label, "label", seed)

    def dataset_reward(self, triple: AugTriple, seed: int) -> float:
        return self._eval(triple, 0, "dataset", seed)

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            try:
                assert proc.stdin is not None
                proc.stdin.write(b'{"cmd":"shutdown"}\n')
                proc.stdin.flush()
                proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
