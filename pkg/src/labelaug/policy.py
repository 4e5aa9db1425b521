"""Stage 2: composite policy construction.

Scores the full 4096-triple space per label with the final predictor, then
greedily selects N_cand triples by the minimum-redundancy maximum-reward
score v = r_pred - alpha * r_mean * (mean multiset op overlap with the
already-selected triples). The top-k constructor is the ablation baseline
without redundancy control.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import predictor as predictor_mod
from .errors import ConfigError, InvalidInputError
from .ops import NUM_TRIPLES, OP_NAMES, AugTriple, code_to_triple, triple_code

ALL_TRIPLES: np.ndarray = np.array(
    [code_to_triple(c) for c in range(NUM_TRIPLES)], dtype=np.int64)

# Indicator matrices over op multiplicities: _GE[k][t, o] == 1 iff triple t
# contains op o at least k+1 times. They turn "sum of multiset intersections
# with the selected set" into three matvecs.
def _multiplicity_indicators(triples: np.ndarray) -> list[np.ndarray]:
    n = len(triples)
    counts = np.zeros((n, len(OP_NAMES)), dtype=np.int64)
    for col in range(triples.shape[1]):
        np.add.at(counts, (np.arange(n), triples[:, col]), 1)
    return [(counts >= k).astype(np.float64) for k in (1, 2, 3)]


_GE = _multiplicity_indicators(ALL_TRIPLES)


@dataclass
class ScoreParams:
    alpha: float = 2.5
    n_cand: int = 100

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if not 1 <= self.n_cand <= NUM_TRIPLES:
            raise ConfigError(f"n_cand must be in [1, {NUM_TRIPLES}]")


@dataclass
class LabelPolicy:
    label: int
    triples: list[AugTriple]

    def __post_init__(self):
        if len(set(self.triples)) != len(self.triples):
            raise InvalidInputError(f"duplicate triples in policy for label "
                                    f"{self.label}")


@dataclass
class CompositePolicy:
    policies: list[LabelPolicy]
    alpha: float
    n_cand: int
    method: str = "mrmr"  # "mrmr" | "topk"
    ops: list[str] = field(default_factory=lambda: list(OP_NAMES))
    config_digest: str = ""

    @property
    def num_labels(self) -> int:
        return len(self.policies)

    def for_label(self, label: int) -> LabelPolicy:
        for p in self.policies:
            if p.label == label:
                return p
        raise InvalidInputError(f"no policy for label {label}")


def predict_full_space(net: predictor_mod.PredictorNet, label: int
                       ) -> tuple[np.ndarray, float]:
    """Predicted reward for all 4096 ordered triples and their mean."""
    scores = predictor_mod.predict_batch(
        net, ALL_TRIPLES, np.full(NUM_TRIPLES, label))
    return scores, float(scores.mean())


def redundancy(triple: AugTriple, selected) -> float:
    """Mean multiset-intersection cardinality with the selected triples."""
    selected = list(selected)
    if not selected:
        return 0.0
    c = Counter(triple)
    total = sum(sum((c & Counter(s)).values()) for s in selected)
    return total / len(selected)


def mrmr_score(r_pred: float, r_mean: float, redundancy_value: float,
               params: ScoreParams) -> float:
    """Reward minus the overlap penalty.

    The mean predicted reward sets the penalty's scale; its magnitude is
    used so the term stays a penalty when the mean is negative (otherwise
    greedy construction would actively seek redundancy).
    """
    return r_pred - params.alpha * abs(r_mean) * redundancy_value


def redundancy_scale(scores: np.ndarray) -> float:
    """Penalty scale used by greedy construction: the positive-part mean of
    the predicted rewards.

    When most predictions are positive this approximates their plain mean;
    when the space is dominated by strongly negative rewards it keeps the
    penalty proportional to the reward mass actually worth trading away, so
    redundancy control diversifies near-ties instead of overriding large
    reward differences.
    """
    return float(np.maximum(scores, 0.0).mean())


def _greedy_select(scores: np.ndarray, alpha: float, n_cand: int,
                   triples: np.ndarray | None = None,
                   indicators: list[np.ndarray] | None = None
                   ) -> list[int]:
    """Greedy mRMR over a triple space; returns selected row indices in order.

    Row order must be lexicographic in op codes so that first-argmax
    implements the lowest-code tie-break.
    """
    if triples is None:
        triples = ALL_TRIPLES
        indicators = _GE
    assert indicators is not None
    r_mean = redundancy_scale(scores)
    n_ops = indicators[0].shape[1]
    n1 = np.zeros(n_ops)
    n2 = np.zeros(n_ops)
    n3 = np.zeros(n_ops)
    taken = np.zeros(len(triples), dtype=bool)
    picked: list[int] = []
    for _ in range(n_cand):
        if picked:
            overlap = (indicators[0] @ n1 + indicators[1] @ n2
                       + indicators[2] @ n3)
            v = scores - (alpha * r_mean) * (overlap / len(picked))
        else:
            v = scores.copy()
        v[taken] = -np.inf
        idx = int(np.argmax(v))  # first max = lowest lexicographic code
        picked.append(idx)
        taken[idx] = True
        cnt = Counter(triples[idx].tolist())
        for op, k in cnt.items():
            n1[op] += 1.0
            if k >= 2:
                n2[op] += 1.0
            if k >= 3:
                n3[op] += 1.0
    return picked


def construct_label_policy(scores: np.ndarray, label: int, params: ScoreParams
                           ) -> LabelPolicy:
    picked = _greedy_select(scores, params.alpha, params.n_cand)
    return LabelPolicy(label, [code_to_triple(i) for i in picked])


def construct_policy(net: predictor_mod.PredictorNet, params: ScoreParams,
                     labels=None, config_digest: str = "") -> CompositePolicy:
    """Greedy mRMR policy per label from full-space predictions."""
    labels = list(range(net.num_labels)) if labels is None else list(labels)
    policies = []
    for label in labels:
        scores, _ = predict_full_space(net, label)
        policies.append(construct_label_policy(scores, label, params))
    return CompositePolicy(policies, alpha=params.alpha, n_cand=params.n_cand,
                           method="mrmr", config_digest=config_digest)


def topk_policy(net: predictor_mod.PredictorNet, k: int, labels=None,
                config_digest: str = "") -> CompositePolicy:
    """Ablation baseline: the k highest-predicted triples, no redundancy term."""
    if not 1 <= k <= NUM_TRIPLES:
        raise ConfigError(f"k must be in [1, {NUM_TRIPLES}]")
    labels = list(range(net.num_labels)) if labels is None else list(labels)
    policies = []
    for label in labels:
        scores, _ = predict_full_space(net, label)
        order = np.argsort(-scores, kind="stable")[:k]  # stable: code tie-break
        policies.append(LabelPolicy(label, [code_to_triple(int(i))
                                            for i in order]))
    return CompositePolicy(policies, alpha=0.0, n_cand=k, method="topk",
                           config_digest=config_digest)


def broadcast_policy(policy: CompositePolicy, num_labels: int
                     ) -> CompositePolicy:
    """Replicate a single-label policy to every label (the label-invariant
    ablation trains one pseudo-label policy and applies it everywhere)."""
    if policy.num_labels != 1:
        raise InvalidInputError(
            f"can only broadcast a 1-label policy, got {policy.num_labels}")
    triples = policy.policies[0].triples
    return CompositePolicy(
        [LabelPolicy(y, list(triples)) for y in range(num_labels)],
        alpha=policy.alpha, n_cand=policy.n_cand, method=policy.method,
        ops=list(policy.ops), config_digest=policy.config_digest)


def policy_op_histogram(policy: CompositePolicy) -> np.ndarray:
    """(num_labels, 16) proportion of each op across a label's triple slots."""
    hist = np.zeros((policy.num_labels, len(OP_NAMES)))
    for row, lp in enumerate(policy.policies):
        for t in lp.triples:
            for op in t:
                hist[row, op] += 1.0
        hist[row] /= 3.0 * len(lp.triples)
    return hist


def save_policy(policy: CompositePolicy, path: str) -> None:
    """Byte-stable JSON with fixed field order."""
    doc = {
        "version": 1,
        "ops": policy.ops,
        "num_labels": policy.num_labels,
        "alpha": policy.alpha,
        "n_cand": policy.n_cand,
        "method": policy.method,
        "config_digest": policy.config_digest,
        "policies": [
            {"label": p.label, "triples": [list(t) for t in p.triples]}
            for p in policy.policies
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))


def load_policy(path: str) -> CompositePolicy:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != 1:
        raise InvalidInputError(f"{path}: unsupported policy version")
    if doc.get("ops") != OP_NAMES:
        raise InvalidInputError(f"{path}: op table does not match this build")
    policies = [
        LabelPolicy(int(p["label"]),
                    [tuple(int(x) for x in t) for t in p["triples"]])
        for p in doc["policies"]
    ]
    return CompositePolicy(policies, alpha=float(doc["alpha"]),
                           n_cand=int(doc["n_cand"]),
                           method=str(doc.get("method", "mrmr")),
                           ops=list(doc["ops"]),
                           config_digest=str(doc.get("config_digest", "")))
