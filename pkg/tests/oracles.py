"""Shared test oracles: independent reference implementations and synthetic
reward models used across the suite."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from labelaug.ops import OP_NAMES


@dataclass
class Rec:
    """Minimal stand-in for a history record."""
    triple: tuple
    label: int
    reward: float
    iteration: int = 0
    phase: str = "warmup"
    seed: int = 0


class AdditiveOracleEvaluator:
    """Synthetic reward model: r(triple, label) = sum of per-(op, label)
    effects plus seeded gaussian noise. Implements the evaluator interface."""

    def __init__(self, num_labels: int, noise_sigma: float = 0.005,
                 effect_range: float = 0.05, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.effects = rng.uniform(-effect_range, effect_range,
                                   size=(len(OP_NAMES), num_labels))
        self.noise_sigma = noise_sigma
        self.num_labels = num_labels

    def true_reward(self, triple, label: int) -> float:
        return float(sum(self.effects[int(t), label] for t in triple))

    def label_reward(self, triple, label: int, seed: int) -> float:
        value = self.true_reward(triple, label)
        if self.noise_sigma > 0:
            value += float(np.random.default_rng(seed).normal(0, self.noise_sigma))
        return value

    def dataset_reward(self, triple, seed: int) -> float:
        return float(np.mean([self.label_reward(triple, y, seed)
                              for y in range(self.num_labels)]))


def multiset_overlap(a, b) -> int:
    """|a ∩ b| as multisets, by explicit counting."""
    return sum((Counter(a) & Counter(b)).values())


def greedy_mrmr_oracle(triples, scores, alpha, n_cand, scale):
    """Exhaustive per-step greedy argmax over the triple list.

    Ties broken toward the lexicographically lowest triple. Returns the
    selected triples in pick order. Written independently of the production
    incremental implementation (recomputes every overlap from scratch).
    """
    remaining = list(range(len(triples)))
    selected = []
    picked_triples = []
    for _ in range(n_cand):
        best_idx = None
        best_key = None
        for i in remaining:
            if selected:
                red = sum(multiset_overlap(triples[i], s)
                          for s in picked_triples) / len(picked_triples)
            else:
                red = 0.0
            v = scores[i] - (alpha * scale) * red
            key = (-v, tuple(triples[i]))
            if best_key is None or key < best_key:
                best_key = key
                best_idx = i
        remaining.remove(best_idx)
        selected.append(best_idx)
        picked_triples.append(tuple(triples[best_idx]))
    return picked_triples
