/**
 * Binary record datasets: each record is 1 label byte + H*W*C pixel bytes
 * in planar channel order (the CIFAR-10 layout generalized). Pixels are
 * re-interleaved to (H, W, C) rasters on load.
 */

import * as fs from "fs";

import { Raster } from "./ops";

export interface Dataset {
  images: Raster[];
  labels: number[];
  numClasses: number;
}

export function loadRecords(path: string, height: number, width: number,
                            channels: number, numClasses: number): Dataset {
  const raw = fs.readFileSync(path);
  const recordSize = 1 + height * width * channels;
  if (raw.length === 0 || raw.length % recordSize !== 0) {
    throw new Error(
      `${path}: size ${raw.length} is not a positive multiple of ${recordSize}`);
  }
  const n = raw.length / recordSize;
  const images: Raster[] = [];
  const labels: number[] = [];
  for (let r = 0; r < n; r++) {
    const base = r * recordSize;
    const label = raw[base];
    if (label >= numClasses) {
      throw new Error(`${path}: label byte ${label} >= ${numClasses}`);
    }
    const data = new Uint8Array(height * width * channels);
    const plane = height * width;
    for (let c = 0; c < channels; c++) {
      for (let p = 0; p < plane; p++) {
        data[p * channels + c] = raw[base + 1 + c * plane + p];
      }
    }
    images.push({ height, width, channels, data });
    labels.push(label);
  }
  return { images, labels, numClasses };
}
