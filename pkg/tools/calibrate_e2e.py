"""Calibration driver for the end-to-end label-awareness experiment.

Runs the real pipeline (pretrain, label-aware + dataset-level searches,
mRMR construction, training arms) on the synthetic dataset and prints the
accuracy per arm, so thresholds can be frozen into the acceptance suite.
Not part of the shipped package.
"""

import argparse
import time

import numpy as np

from labelaug import data, evaluator as E, policy as pol, search as S, train as T
from labelaug.ops import OP_NAMES


def replicate_policy(single: pol.CompositePolicy, num_labels: int
                     ) -> pol.CompositePolicy:
    triples = single.policies[0].triples
    return pol.CompositePolicy(
        [pol.LabelPolicy(y, list(triples)) for y in range(num_labels)],
        alpha=single.alpha, n_cand=single.n_cand, method=single.method)


def subset_per_class(ds, k, seed):
    rng = np.random.default_rng(seed)
    picks = []
    for y in range(ds.num_classes):
        members = np.nonzero(ds.labels == y)[0]
        picks.append(rng.permutation(members)[:k])
    return ds.subset(np.sort(np.concatenate(picks)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--noise", type=float, default=35.0)
    ap.add_argument("--per-class", type=int, default=130)
    ap.add_argument("--val-per-class", type=int, default=40)
    ap.add_argument("--harness-per-class", type=int, default=16)
    ap.add_argument("--test-per-class", type=int, default=150)
    ap.add_argument("--t", type=int, default=60)
    ap.add_argument("--t0", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--hidden", type=int, default=64)
    ap.add_argument("--pre-epochs", type=int, default=40)
    ap.add_argument("--alpha", type=float, default=2.5)
    ap.add_argument("--n-cand", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t_start = time.time()
    ds = data.make_synthetic(4, args.per_class, noise=args.noise,
                             seed=args.seed + 100)
    train_ds, val_ds = data.split_train_val(
        ds, data.SplitSpec("per-class", args.val_per_class, seed=args.seed + 7))
    harness_train = subset_per_class(train_ds, args.harness_per_class,
                                     args.seed + 13)
    test_ds = data.make_synthetic(4, args.test_per_class, noise=args.noise,
                                  seed=args.seed + 200)
    clf = E.pretrain_classifier(
        train_ds, E.ClassifierConfig(hidden=(args.hidden,),
                                     epochs=args.pre_epochs), seed=args.seed + 3)
    ctx = E.BuiltinEvaluator(clf, val_ds)
    print(f"pretrain acc={clf.train_accuracy:.3f} "
          f"baselines={ {y: round(v, 3) for y, v in ctx.baseline_per_label.items()} } "
          f"[{time.time()-t_start:.1f}s]")

    cfg = S.SearchConfig(total_iterations=args.t, warmup_iterations=args.t0,
                         master_seed=args.seed + 11)
    t0 = time.time()
    hist_aware, pred_aware = S.run_search(cfg, ctx)
    print(f"label-aware search: {len(hist_aware)} records "
          f"phase means={S.phase_mean_rewards(hist_aware)} [{time.time()-t0:.1f}s]")

    t0 = time.time()
    hist_flat, pred_flat = S.run_search(cfg, E.DatasetLevelEvaluator(ctx))
    print(f"dataset-level search: {len(hist_flat)} records [{time.time()-t0:.1f}s]")

    params = pol.ScoreParams(alpha=args.alpha, n_cand=args.n_cand)
    aware = pol.construct_policy(pred_aware, params)
    flat = replicate_policy(pol.construct_policy(pred_flat, params), 4)

    hist = pol.policy_op_histogram(aware)
    for y in range(4):
        top = np.argsort(-hist[y])[:6]
        print(f"label {y} top ops:",
              ", ".join(f"{OP_NAMES[i]}={hist[y][i]:.2f}" for i in top))
    hflat = pol.policy_op_histogram(flat)
    top = np.argsort(-hflat[0])[:6]
    print("flat top ops:", ", ".join(f"{OP_NAMES[i]}={hflat[0][i]:.2f}" for i in top))

    tcfg = dict(epochs=args.epochs, lr=0.005, batch_size=32,
                hidden=(args.hidden,), seeds=(0, 1, 2))
    arms = {}
    for name, mode, p in [("label-aware", "policy", aware), ("invariant", "policy", flat),
                          ("random", "random", None), ("none", "none", None)]:
        t0 = time.time()
        rep = T.train_with_policy(harness_train, test_ds,
                                  T.TrainRunConfig(mode=mode, **tcfg), p)
        arms[name] = rep
        print(f"{name:10s} mean={rep['overall']['mean']:.4f} "
              f"std={rep['overall']['std']:.4f} runs={[round(r,4) for r in rep['overall']['runs']]} "
              f"per-class={[round(c['mean'], 3) for c in rep['per_class']]} "
              f"[{time.time()-t0:.1f}s]")
    print(f"MARGINS seed={args.seed}: "
          f"aware-random={arms['label-aware']['overall']['mean']-arms['random']['overall']['mean']:+.4f} "
          f"aware-invariant={arms['label-aware']['overall']['mean']-arms['invariant']['overall']['mean']:+.4f} "
          f"aware-none={arms['label-aware']['overall']['mean']-arms['none']['overall']['mean']:+.4f}")
    print(f"total {time.time()-t_start:.1f}s")


if __name__ == "__main__":
    main()
