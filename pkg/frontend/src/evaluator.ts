/**
 * Density-matching reward evaluation over a frozen classifier, mirroring
 * the parent's definition: reward = accuracy on the augmented validation
 * samples minus the cached unaugmented baseline. Per-sample draw streams
 * are seeded hashSeed(evalSeed, validationIndex), identical to the parent.
 */

import { Dataset } from "./records";
import { DenseClassifier } from "./model";
import { applyTriple } from "./ops";
import { SplitMix64, hashSeed } from "./rng";

export class Evaluator {
  private byLabel: Map<number, number[]> = new Map();
  private baselinePerLabel: Map<number, number> = new Map();
  private baselineOverall: number;

  constructor(private model: DenseClassifier, private val: Dataset) {
    if (model.numClasses !== val.numClasses) {
      throw new Error("classifier and validation set disagree on classes");
    }
    for (let y = 0; y < val.numClasses; y++) this.byLabel.set(y, []);
    val.labels.forEach((label, i) => this.byLabel.get(label)!.push(i));
    for (const [y, idx] of this.byLabel) {
      if (idx.length === 0) {
        throw new Error(`label ${y} has no validation samples`);
      }
    }
    const preds = val.images.map((img) => model.predict(img));
    let correct = 0;
    preds.forEach((p, i) => { if (p === val.labels[i]) correct++; });
    this.baselineOverall = correct / preds.length;
    for (const [y, idx] of this.byLabel) {
      const hit = idx.filter((i) => preds[i] === y).length;
      this.baselinePerLabel.set(y, hit / idx.length);
    }
  }

  get numLabels(): number {
    return this.val.numClasses;
  }

  private accuracyOn(indices: number[], triple: number[], seed: number,
                     matchLabel: number | null): number {
    let correct = 0;
    for (const i of indices) {
      const stream = new SplitMix64(hashSeed(seed, i));
      const augmented = applyTriple(this.val.images[i], triple, stream);
      const pred = this.model.predict(augmented);
      const want = matchLabel === null ? this.val.labels[i] : matchLabel;
      if (pred === want) correct++;
    }
    return correct / indices.length;
  }

  labelReward(triple: number[], label: number, seed: number): number {
    const idx = this.byLabel.get(label);
    if (!idx) throw new Error(`unknown label ${label}`);
    return this.accuracyOn(idx, triple, seed, label)
      - this.baselinePerLabel.get(label)!;
  }

  datasetReward(triple: number[], seed: number): number {
    const all = this.val.images.map((_, i) => i);
    return this.accuracyOn(all, triple, seed, null) - this.baselineOverall;
  }
}
