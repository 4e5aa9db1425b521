/**
 * Dense classifier checkpoints exported by the parent engine:
 * affine layers with relu/identity/softmax activations, float64 weights.
 * Inference here uses plain double loops; no float32 tensor stack, so a
 * linear model reproduces the parent's logits to the last bit and argmax
 * decisions match exactly.
 */

import * as fs from "fs";

import { Raster } from "./ops";

interface LayerDoc {
  activation: "relu" | "identity" | "softmax";
  weights: number[][]; // [fanIn][fanOut]
  bias: number[];
}

export interface ClassifierDoc {
  version: number;
  kind: string;
  input_shape: [number, number, number];
  num_classes: number;
  layers: LayerDoc[];
}

export class DenseClassifier {
  readonly numClasses: number;
  readonly inputShape: [number, number, number];
  private layers: LayerDoc[];

  constructor(doc: ClassifierDoc) {
    if (doc.kind !== "dense_classifier" || doc.version !== 1) {
      throw new Error("not a version-1 dense_classifier checkpoint");
    }
    this.numClasses = doc.num_classes;
    this.inputShape = doc.input_shape;
    this.layers = doc.layers;
  }

  static load(path: string): DenseClassifier {
    return new DenseClassifier(JSON.parse(fs.readFileSync(path, "utf-8")));
  }

  logits(image: Raster): Float64Array {
    let act = new Float64Array(image.data.length);
    for (let i = 0; i < act.length; i++) act[i] = image.data[i] / 255.0;
    for (const layer of this.layers) {
      const fanIn = layer.weights.length;
      const fanOut = layer.bias.length;
      if (act.length !== fanIn) {
        throw new Error(`input dim ${act.length} != layer fan-in ${fanIn}`);
      }
      const next = new Float64Array(fanOut);
      for (let j = 0; j < fanOut; j++) {
        let s = layer.bias[j];
        for (let i = 0; i < fanIn; i++) {
          s += act[i] * layer.weights[i][j];
        }
        next[j] = s;
      }
      if (layer.activation === "relu") {
        for (let j = 0; j < fanOut; j++) next[j] = Math.max(next[j], 0.0);
      } else if (layer.activation === "softmax") {
        let max = -Infinity;
        for (let j = 0; j < fanOut; j++) max = Math.max(max, next[j]);
        let sum = 0;
        for (let j = 0; j < fanOut; j++) {
          next[j] = Math.exp(next[j] - max);
          sum += next[j];
        }
        for (let j = 0; j < fanOut; j++) next[j] /= sum;
      }
      act = next;
    }
    return act;
  }

  /** Argmax class; ties resolve to the lowest class index. */
  predict(image: Raster): number {
    const out = this.logits(image);
    let best = 0;
    for (let j = 1; j < out.length; j++) {
      if (out[j] > out[best]) best = j;
    }
    return best;
  }
}
