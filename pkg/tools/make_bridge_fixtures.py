"""Generate the bridge test fixtures from the primary implementation.

Writes frontend/test/fixtures/: per-op augmented-output vectors, a linear
classifier checkpoint, a validation record file, and expected rewards. The
bridge's vitest suite replays these for bit-parity. Rerun after any change
to op semantics or RNG derivation, then rebuild the bridge.
"""

import base64
import json
import os

import numpy as np

from labelaug import data, nnet
from labelaug.evaluator import BuiltinEvaluator, DeskClassifier, save_classifier
from labelaug.ops import OpKind, apply_op, sample_magnitude
from labelaug.rng import SplitMix64, eval_seed, hash_seed

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "frontend", "test",
                        "fixtures")


def b64(arr: np.ndarray) -> str:
    return base64.b64encode(arr.tobytes()).decode()


def make_op_vectors():
    rng = np.random.default_rng(20240501)
    cases = []
    for channels in (1, 3):
        img = rng.integers(0, 256, size=(10, 12, channels), dtype=np.uint8)
        for kind in OpKind:
            for trial in range(3):
                seed = hash_seed(777, int(kind), channels, trial)
                stream = SplitMix64(seed)
                m, resolved = sample_magnitude(kind, stream)
                out = apply_op(img, kind, resolved)
                resolved_json = list(resolved) if isinstance(resolved, tuple) \
                    else resolved
                cases.append({
                    "op": int(kind),
                    "name": kind.name,
                    "channels": channels,
                    "height": 10,
                    "width": 12,
                    "stream_seed": str(seed),
                    "m": m,
                    "resolved": resolved_json,
                    "input_b64": b64(img),
                    "output_b64": b64(out),
                    # rotation uses trig: cross-runtime parity is not bitwise
                    "exact": kind != OpKind.Rotate,
                })
    return cases


def make_linear_model_and_val():
    rng = np.random.default_rng(424242)
    h, w, c, classes = 8, 8, 1, 3
    weights = rng.normal(0, 0.4, size=(h * w * c, classes))
    bias = rng.normal(0, 0.1, size=classes)
    clf = DeskClassifier(
        nnet.DenseNet([nnet.DenseLayer(weights, bias, "identity")]),
        classes, (h, w, c))

    images = rng.integers(0, 256, size=(30, h, w, c), dtype=np.uint8)
    labels = np.repeat(np.arange(classes), 10)
    val = data.LabeledDataset(images, labels, classes)
    return clf, val


def make_rewards(clf, val):
    ctx = BuiltinEvaluator(clf, val)
    rng = np.random.default_rng(7)
    non_rotate = [k for k in range(16) if k != int(OpKind.Rotate)]
    cases = []
    for i in range(24):
        triple = [int(rng.choice(non_rotate)) for _ in range(3)]
        label = int(rng.integers(0, val.num_classes))
        seed = eval_seed(5150, i)
        cases.append({"triple": triple, "label": label, "scope": "label",
                      "seed": seed,
                      "reward": ctx.label_reward(tuple(triple), label, seed),
                      "exact": True})
    for i in range(6):
        triple = [int(rng.choice(non_rotate)) for _ in range(3)]
        seed = eval_seed(6160, i)
        cases.append({"triple": triple, "label": 0, "scope": "dataset",
                      "seed": seed,
                      "reward": ctx.dataset_reward(tuple(triple), seed),
                      "exact": True})
    for i in range(4):
        triple = [int(OpKind.Rotate), int(rng.choice(non_rotate)),
                  int(rng.choice(non_rotate))]
        label = int(rng.integers(0, val.num_classes))
        seed = eval_seed(7170, i)
        cases.append({"triple": triple, "label": label, "scope": "label",
                      "seed": seed,
                      "reward": ctx.label_reward(tuple(triple), label, seed),
                      "exact": False})
    cases.append({"triple": [0, 0, 0], "label": 1, "scope": "label",
                  "seed": eval_seed(1), "reward": 0.0, "exact": True})
    return cases


def main():
    os.makedirs(FIXTURES, exist_ok=True)
    with open(os.path.join(FIXTURES, "ops_vectors.json"), "w") as fh:
        json.dump(make_op_vectors(), fh)
    clf, val = make_linear_model_and_val()
    save_classifier(clf, os.path.join(FIXTURES, "model.json"))
    data.save_records(val, os.path.join(FIXTURES, "val.bin"))
    with open(os.path.join(FIXTURES, "rewards.json"), "w") as fh:
        json.dump({
            "val_shape": {"height": 8, "width": 8, "channels": 1, "classes": 3},
            "cases": make_rewards(clf, val),
        }, fh)
    print(f"fixtures written to {os.path.normpath(FIXTURES)}")


if __name__ == "__main__":
    main()
