"""Stage 1: reward exploration.

Warm-up iterations evaluate one uniformly random triple per label; search
iterations retrain the predictor from scratch on the full history, build a
100-candidate pool per label (10 mutants of the label's previous pick, 50
unexplored, 40 explored sampled by reward), and evaluate the argmax-predicted
candidate.

All randomness derives from (master_seed, iteration, label) sub-streams, so
trajectories are independent of evaluation order and runs resume exactly
from a history-file prefix.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import predictor as predictor_mod
from .errors import ConfigError, DataFormatError, InvalidInputError
from .ops import NUM_TRIPLES, AugTriple, code_to_triple, triple_code
from .rng import SplitMix64, eval_seed, hash_seed

# Domain-separation tags for sub-stream derivation (shared with external
# evaluators via docs/protocol.md).
TAG_CANDIDATES = 1
TAG_EVAL = 2

PHASE_WARMUP = "warmup"
PHASE_SEARCH = "search"


@dataclass
class EvalRecord:
    iteration: int
    label: int
    triple: AugTriple
    reward: float
    phase: str
    seed: int

    def to_json_line(self) -> str:
        return json.dumps({
            "iter": self.iteration,
            "label": self.label,
            "triple": list(self.triple),
            "reward": self.reward,
            "phase": self.phase,
            "seed": self.seed,
        }, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "EvalRecord":
        try:
            d = json.loads(line)
            return cls(int(d["iter"]), int(d["label"]),
                       tuple(int(t) for t in d["triple"]),  # type: ignore[arg-type]
                       float(d["reward"]), str(d["phase"]), int(d["seed"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad history line {line!r}: {exc}") from None


@dataclass
class SearchConfig:
    total_iterations: int = 500
    warmup_iterations: int = 100
    n_mutate: int = 10
    n_unexplored: int = 50
    n_explored: int = 40
    master_seed: int = 0
    predictor_epochs: int = predictor_mod.TRAIN_EPOCHS
    predictor_lr: float = predictor_mod.TRAIN_LR
    predictor_batch: int = predictor_mod.TRAIN_BATCH

    def __post_init__(self):
        if self.total_iterations < 1:
            raise ConfigError("total_iterations must be >= 1")
        if self.warmup_iterations < 1:
            raise ConfigError("warmup_iterations must be >= 1")
        # T0 == T is the pure-random-search boundary case.
        if self.warmup_iterations > self.total_iterations:
            raise ConfigError("warmup_iterations must not exceed total_iterations")
        if min(self.n_mutate, self.n_unexplored, self.n_explored) < 0:
            raise ConfigError("candidate counts must be non-negative")
        if self.n_mutate + self.n_unexplored + self.n_explored <= 0:
            raise ConfigError("candidate pool would be empty")


class SearchHistory:
    """Append-only record list plus per-label exploration indexes."""

    def __init__(self, records=None):
        self.records: list[EvalRecord] = []
        # per label: triple -> list of observed rewards
        self.explored: dict[int, dict[AugTriple, list[float]]] = {}
        self.last_chosen: dict[int, AugTriple] = {}
        for rec in records or []:
            self.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, rec: EvalRecord) -> None:
        self.records.append(rec)
        self.explored.setdefault(rec.label, {}) \
            .setdefault(rec.triple, []).append(rec.reward)
        self.last_chosen[rec.label] = rec.triple

    def explored_triples(self, label: int) -> dict[AugTriple, list[float]]:
        return self.explored.get(label, {})

    def last_iteration(self) -> int:
        return max((r.iteration for r in self.records), default=-1)

    def complete_iterations(self, num_labels: int) -> int:
        """Number of leading iterations with a record for every label."""
        seen: dict[int, set[int]] = {}
        for rec in self.records:
            seen.setdefault(rec.iteration, set()).add(rec.label)
        t = 0
        while t in seen and len(seen[t]) == num_labels:
            t += 1
        return t


def save_history(history: SearchHistory, path: str) -> None:
    with open(path, "w") as fh:
        for rec in history.records:
            fh.write(rec.to_json_line() + "\n")


def load_history(path: str) -> SearchHistory:
    history = SearchHistory()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                history.append(EvalRecord.from_json_line(line))
    return history


def _random_triple(rng: SplitMix64) -> AugTriple:
    return code_to_triple(rng.randbelow(NUM_TRIPLES))


def _mutate(triple: AugTriple, rng: SplitMix64) -> AugTriple:
    """Replace 1 or 2 positions (choice uniform) with a different random op."""
    n_pos = 1 if rng.random() < 0.5 else 2
    if n_pos == 1:
        positions = [rng.randbelow(3)]
    else:
        first = rng.randbelow(3)
        second = (first + 1 + rng.randbelow(2)) % 3
        positions = [first, second]
    out = list(triple)
    for pos in positions:
        out[pos] = (out[pos] + 1 + rng.randbelow(15)) % 16
    return tuple(out)  # type: ignore[return-value]


def _sample_unexplored(explored: set[AugTriple], count: int,
                       rng: SplitMix64) -> list[AugTriple]:
    available = NUM_TRIPLES - len(explored)
    target = min(count, available)
    picks: list[AugTriple] = []
    seen: set[AugTriple] = set()
    attempts = 0
    # rejection sampling is cheap while the explored set is small
    while len(picks) < target and attempts < 20 * NUM_TRIPLES:
        attempts += 1
        t = _random_triple(rng)
        if t in explored or t in seen:
            continue
        picks.append(t)
        seen.add(t)
    if len(picks) < target:
        rest = sorted(set(map(code_to_triple, range(NUM_TRIPLES)))
                      - explored - seen, key=triple_code)
        while len(picks) < target and rest:
            picks.append(rest.pop(rng.randbelow(len(rest))))
    return picks


def _sample_explored(explored: dict[AugTriple, list[float]], count: int,
                     rng: SplitMix64) -> list[AugTriple]:
    """Without replacement, probability proportional to the softmax of the
    standardized mean reward per explored triple."""
    items = sorted(explored.items(), key=lambda kv: triple_code(kv[0]))
    if len(items) <= count:
        return [t for t, _ in items]
    rewards = np.array([float(np.mean(rs)) for _, rs in items])
    std = rewards.std()
    z = (rewards - rewards.mean()) / std if std > 0 else np.zeros_like(rewards)
    weights = np.exp(z - z.max())
    triples = [t for t, _ in items]
    picks = []
    w = weights.copy()
    for _ in range(count):
        total = w.sum()
        u = rng.random() * total
        acc = 0.0
        chosen = len(w) - 1
        for i, wi in enumerate(w):
            acc += wi
            if u < acc:
                chosen = i
                break
        picks.append(triples.pop(chosen))
        w = np.delete(w, chosen)
    return picks


def candidate_pool(label: int, history: SearchHistory, rng: SplitMix64,
                   config: SearchConfig) -> list[AugTriple]:
    """10/50/40 mutation/unexplored/explored pool, deduplicated in order."""
    if label not in history.last_chosen:
        raise InvalidInputError(
            f"label {label} has no evaluated triple yet (run warm-up first)")
    base = history.last_chosen[label]
    explored = history.explored_triples(label)
    pool: list[AugTriple] = []
    for _ in range(config.n_mutate):
        pool.append(_mutate(base, rng))
    pool.extend(_sample_unexplored(set(explored), config.n_unexplored, rng))
    pool.extend(_sample_explored(explored, config.n_explored, rng))
    seen: set[AugTriple] = set()
    out = []
    for t in pool:
        if t not in seen:
            seen.add(t)
            out.append(t)
    if not out:
        raise ConfigError("candidate pool is empty")
    return out


def warmup_iteration(evaluator, history: SearchHistory, iteration: int,
                     config: SearchConfig) -> list[EvalRecord]:
    """One uniformly random triple per label, evaluated and appended."""
    new = []
    for label in range(evaluator.num_labels):
        rng = SplitMix64(hash_seed(config.master_seed, iteration, label,
                                   TAG_CANDIDATES))
        triple = _random_triple(rng)
        seed = eval_seed(config.master_seed, iteration, label, TAG_EVAL)
        reward = evaluator.label_reward(triple, label, seed)
        rec = EvalRecord(iteration, label, triple, reward, PHASE_WARMUP, seed)
        history.append(rec)
        new.append(rec)
    return new


def _argmax_candidate(pool: list[AugTriple], scores: np.ndarray) -> AugTriple:
    best = None
    best_key = None
    for t, s in zip(pool, scores):
        key = (-s, triple_code(t))
        if best_key is None or key < best_key:
            best_key = key
            best = t
    assert best is not None
    return best


def search_iteration(evaluator, history: SearchHistory, iteration: int,
                     config: SearchConfig) -> predictor_mod.PredictorNet:
    """Train a fresh predictor on all history, then evaluate the
    argmax-predicted candidate for every label."""
    if not history.records:
        raise InvalidInputError("search iteration requires warm-up history")
    net = predictor_mod.train_predictor(
        history.records, evaluator.num_labels,
        seed=hash_seed(config.master_seed, iteration),
        epochs=config.predictor_epochs, lr=config.predictor_lr,
        batch_size=config.predictor_batch)
    for label in range(evaluator.num_labels):
        rng = SplitMix64(hash_seed(config.master_seed, iteration, label,
                                   TAG_CANDIDATES))
        pool = candidate_pool(label, history, rng, config)
        scores = predictor_mod.predict_batch(
            net, np.array(pool), np.full(len(pool), label))
        chosen = _argmax_candidate(pool, scores)
        seed = eval_seed(config.master_seed, iteration, label, TAG_EVAL)
        reward = evaluator.label_reward(chosen, label, seed)
        history.append(EvalRecord(iteration, label, chosen, reward,
                                  PHASE_SEARCH, seed))
    return net


def run_search(config: SearchConfig, evaluator, history_path: str | None = None,
               resume: bool = False, progress=None
               ) -> tuple[SearchHistory, predictor_mod.PredictorNet]:
    """T0 warm-up + (T - T0) search iterations; returns the history and the
    final predictor trained on everything.

    With history_path set, records stream to disk as JSONL per iteration; a
    failed run leaves a resumable prefix. resume=True continues from the
    complete-iteration prefix of an existing file.
    """
    history = SearchHistory()
    start = 0
    if resume:
        if not history_path or not os.path.exists(history_path):
            raise ConfigError("resume requested but history file is missing")
        prior = load_history(history_path)
        keep = prior.complete_iterations(evaluator.num_labels)
        history = SearchHistory(
            [r for r in prior.records if r.iteration < keep])
        start = keep

    writer = None
    if history_path:
        writer = open(history_path, "w")
        for rec in history.records:
            writer.write(rec.to_json_line() + "\n")
        writer.flush()

    def emit(records):
        if writer:
            for rec in records:
                writer.write(rec.to_json_line() + "\n")
            writer.flush()

    try:
        t0 = config.warmup_iterations
        total = config.total_iterations
        for t in range(start, min(t0, total)):
            emit(warmup_iteration(evaluator, history, t, config))
            if progress:
                progress(t, history)
        for t in range(max(start, t0), total):
            search_iteration(evaluator, history, t, config)
            emit(history.records[-evaluator.num_labels:])
            if progress:
                progress(t, history)
    finally:
        if writer:
            writer.close()

    final = predictor_mod.train_predictor(
        history.records, evaluator.num_labels,
        seed=hash_seed(config.master_seed, config.total_iterations),
        epochs=config.predictor_epochs, lr=config.predictor_lr,
        batch_size=config.predictor_batch)
    return history, final


def phase_mean_rewards(history: SearchHistory) -> dict[str, float]:
    """Mean observed reward per phase; the search phase should dominate."""
    sums: dict[str, list[float]] = {}
    for rec in history.records:
        sums.setdefault(rec.phase, []).append(rec.reward)
    return {phase: float(np.mean(vals)) for phase, vals in sums.items()}


def metrics_over_iterations(history: SearchHistory, num_labels: int,
                            iterations: list[int], split_seed: int = 0,
                            epochs: int | None = None
                            ) -> list[tuple[int, predictor_mod.PredictorMetrics]]:
    """Holdout metrics on history prefixes, for quality-over-time reporting."""
    out = []
    kwargs = {} if epochs is None else {"epochs": epochs}
    for t in iterations:
        prefix = [r for r in history.records if r.iteration < t]
        if len(prefix) < 5:
            raise InvalidInputError(f"prefix at iteration {t} is too small")
        out.append((t, predictor_mod.holdout_metrics(
            prefix, num_labels, split_seed, **kwargs)))
    return out
