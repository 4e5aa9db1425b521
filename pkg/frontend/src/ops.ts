/**
 * The 16-operation augmentation kernel, ported op-for-op from the parent
 * engine. Pointwise and displacement ops reproduce the parent bit-exactly
 * (pure integer / IEEE-754 double arithmetic); rotation uses trig, so its
 * parity is tolerance-based only.
 */

import { SplitMix64 } from "./rng";

export interface Raster {
  height: number;
  width: number;
  channels: number; // 1 | 3
  data: Uint8Array; // row-major, channel-interleaved
}

export enum OpKind {
  Identity = 0,
  ShearX = 1,
  ShearY = 2,
  TranslateX = 3,
  TranslateY = 4,
  Rotate = 5,
  AutoContrast = 6,
  Invert = 7,
  Equalize = 8,
  Solarize = 9,
  Posterize = 10,
  Contrast = 11,
  Color = 12,
  Brightness = 13,
  Sharpness = 14,
  Cutout = 15,
}

export const OP_NAMES = [
  "Identity", "ShearX", "ShearY", "TranslateX", "TranslateY", "Rotate",
  "AutoContrast", "Invert", "Equalize", "Solarize", "Posterize", "Contrast",
  "Color", "Brightness", "Sharpness", "Cutout",
];

export const FILL_GRAY = 128;

const SIGNED_OPS = new Set([
  OpKind.ShearX, OpKind.ShearY, OpKind.TranslateX, OpKind.TranslateY,
  OpKind.Rotate, OpKind.Contrast, OpKind.Color, OpKind.Brightness,
  OpKind.Sharpness,
]);

const ENHANCE_OPS = new Set([
  OpKind.Contrast, OpKind.Color, OpKind.Brightness, OpKind.Sharpness,
]);

const MAGNITUDE_FREE = new Set([
  OpKind.Identity, OpKind.AutoContrast, OpKind.Invert, OpKind.Equalize,
]);

// [lo, hi] in op units; the resolve logic mirrors the parent exactly
const RANGES: Record<number, [number, number]> = {
  [OpKind.ShearX]: [0.0, 0.3],
  [OpKind.ShearY]: [0.0, 0.3],
  [OpKind.TranslateX]: [0.0, 0.45],
  [OpKind.TranslateY]: [0.0, 0.45],
  [OpKind.Rotate]: [0.0, 30.0],
  [OpKind.Solarize]: [256.0, 0.0],
  [OpKind.Posterize]: [8.0, 4.0],
  [OpKind.Cutout]: [0.0, 0.2],
};

export type Resolved = number | [number, number, number];

export function sampleMagnitude(kind: OpKind, rng: SplitMix64
                                ): { m: number; resolved: Resolved } {
  const m = rng.random();
  let sign = 1.0;
  if (SIGNED_OPS.has(kind)) {
    sign = rng.random() < 0.5 ? 1.0 : -1.0;
  }
  if (kind === OpKind.Cutout) {
    const ux = rng.random();
    const uy = rng.random();
    return { m, resolved: [m * RANGES[kind][1], ux, uy] };
  }
  if (MAGNITUDE_FREE.has(kind)) {
    return { m, resolved: 0.0 };
  }
  if (ENHANCE_OPS.has(kind)) {
    return { m, resolved: 1.0 + sign * 0.9 * m };
  }
  const [lo, hi] = RANGES[kind];
  return { m, resolved: sign * (lo + m * (hi - lo)) };
}

function blank(img: Raster, fill: number): Raster {
  const data = new Uint8Array(img.data.length);
  data.fill(fill);
  return { ...img, data };
}

function copyOf(img: Raster): Raster {
  return { ...img, data: new Uint8Array(img.data) };
}

function at(img: Raster, y: number, x: number, c: number): number {
  return img.data[(y * img.width + x) * img.channels + c];
}

function luminance(img: Raster): Int32Array {
  const { height, width, channels, data } = img;
  const out = new Int32Array(height * width);
  if (channels === 1) {
    for (let i = 0; i < out.length; i++) out[i] = data[i];
    return out;
  }
  for (let i = 0; i < out.length; i++) {
    const r = data[i * 3];
    const g = data[i * 3 + 1];
    const b = data[i * 3 + 2];
    out[i] = Math.floor((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

function blend(degenerate: Uint8Array | Int32Array, img: Raster,
               factor: number): Raster {
  const out = new Uint8Array(img.data.length);
  for (let i = 0; i < out.length; i++) {
    const deg = degenerate[i];
    const v = Math.floor(deg + factor * (img.data[i] - deg) + 0.5);
    out[i] = v < 0 ? 0 : v > 255 ? 255 : v;
  }
  return { ...img, data: out };
}

function histogram(img: Raster, channel: number): Int32Array {
  const hist = new Int32Array(256);
  const { data, channels } = img;
  for (let i = channel; i < data.length; i += channels) {
    hist[data[i]]++;
  }
  return hist;
}

function applyLut(img: Raster, channel: number, lut: Uint8Array,
                  out: Uint8Array): void {
  const { data, channels } = img;
  for (let i = channel; i < data.length; i += channels) {
    out[i] = lut[data[i]];
  }
}

function equalizeChannel(img: Raster, channel: number, out: Uint8Array): void {
  const hist = histogram(img, channel);
  let total = 0;
  let last = 0;
  let distinct = 0;
  for (let i = 0; i < 256; i++) {
    if (hist[i] > 0) {
      distinct++;
      last = hist[i];
      total += hist[i];
    }
  }
  const identity = new Uint8Array(256);
  for (let i = 0; i < 256; i++) identity[i] = i;
  if (distinct <= 1) {
    applyLut(img, channel, identity, out);
    return;
  }
  const step = Math.floor((total - last) / 255);
  if (step === 0) {
    applyLut(img, channel, identity, out);
    return;
  }
  const lut = new Uint8Array(256);
  let n = Math.floor(step / 2);
  for (let i = 0; i < 256; i++) {
    const v = Math.floor(n / step);
    lut[i] = v < 0 ? 0 : v > 255 ? 255 : v;
    n += hist[i];
  }
  applyLut(img, channel, lut, out);
}

function autocontrastChannel(img: Raster, channel: number,
                             out: Uint8Array): void {
  const hist = histogram(img, channel);
  let lo = 0;
  while (lo < 256 && hist[lo] === 0) lo++;
  let hi = 255;
  while (hi >= 0 && hist[hi] === 0) hi--;
  const lut = new Uint8Array(256);
  if (hi <= lo) {
    for (let i = 0; i < 256; i++) lut[i] = i;
  } else {
    const scale = 255.0 / (hi - lo);
    const offset = -lo * scale;
    for (let i = 0; i < 256; i++) {
      const v = Math.floor(i * scale + offset);
      lut[i] = v < 0 ? 0 : v > 255 ? 255 : v;
    }
  }
  applyLut(img, channel, lut, out);
}

function smooth(img: Raster): Uint8Array {
  const { height, width, channels, data } = img;
  const out = new Uint8Array(data);
  if (height < 3 || width < 3) return out;
  for (let y = 1; y < height - 1; y++) {
    for (let x = 1; x < width - 1; x++) {
      for (let c = 0; c < channels; c++) {
        // same left-associated order as the parent; exact integer partials
        const acc = at(img, y - 1, x - 1, c) + at(img, y - 1, x, c)
          + at(img, y - 1, x + 1, c) + at(img, y, x - 1, c)
          + 5.0 * at(img, y, x, c) + at(img, y, x + 1, c)
          + at(img, y + 1, x - 1, c) + at(img, y + 1, x, c)
          + at(img, y + 1, x + 1, c);
        const v = Math.floor(acc / 13.0 + 0.5);
        out[(y * width + x) * channels + c] = v < 0 ? 0 : v > 255 ? 255 : v;
      }
    }
  }
  return out;
}

/** Nearest-neighbor gather: out(y, x) = in(srcY(y,x), srcX(y,x)) or gray. */
function gather(img: Raster,
                src: (y: number, x: number) => [number, number]): Raster {
  const { height, width, channels } = img;
  const out = blank(img, FILL_GRAY);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [sy, sx] = src(y, x);
      const yi = Math.floor(sy + 0.5);
      const xi = Math.floor(sx + 0.5);
      if (yi >= 0 && yi < height && xi >= 0 && xi < width) {
        for (let c = 0; c < channels; c++) {
          out.data[(y * width + x) * channels + c] =
            img.data[(yi * width + xi) * channels + c];
        }
      }
    }
  }
  return out;
}

export function applyOp(img: Raster, kind: OpKind, magnitude: Resolved): Raster {
  const { height: h, width: w, channels: c } = img;

  switch (kind) {
    case OpKind.Identity:
      return copyOf(img);
    case OpKind.Invert: {
      const out = new Uint8Array(img.data.length);
      for (let i = 0; i < out.length; i++) out[i] = 255 - img.data[i];
      return { ...img, data: out };
    }
    case OpKind.Solarize: {
      const t = magnitude as number;
      const out = new Uint8Array(img.data.length);
      for (let i = 0; i < out.length; i++) {
        const p = img.data[i];
        out[i] = p >= t ? 255 - p : p;
      }
      return { ...img, data: out };
    }
    case OpKind.Posterize: {
      let bits = Math.floor((magnitude as number) + 0.5);
      bits = Math.min(8, Math.max(1, bits));
      const mask = (0xff << (8 - bits)) & 0xff;
      const out = new Uint8Array(img.data.length);
      for (let i = 0; i < out.length; i++) out[i] = img.data[i] & mask;
      return { ...img, data: out };
    }
    case OpKind.AutoContrast: {
      const out = new Uint8Array(img.data.length);
      for (let ch = 0; ch < c; ch++) autocontrastChannel(img, ch, out);
      return { ...img, data: out };
    }
    case OpKind.Equalize: {
      const out = new Uint8Array(img.data.length);
      for (let ch = 0; ch < c; ch++) equalizeChannel(img, ch, out);
      return { ...img, data: out };
    }
    case OpKind.Brightness:
      return blend(new Uint8Array(img.data.length), img, magnitude as number);
    case OpKind.Contrast: {
      const lum = luminance(img);
      let sum = 0;
      for (let i = 0; i < lum.length; i++) sum += lum[i];
      const mean = Math.floor(sum / lum.length + 0.5);
      const deg = new Uint8Array(img.data.length);
      deg.fill(mean);
      return blend(deg, img, magnitude as number);
    }
    case OpKind.Color: {
      if (c === 1) return copyOf(img);
      const lum = luminance(img);
      const deg = new Uint8Array(img.data.length);
      for (let i = 0; i < lum.length; i++) {
        deg[i * 3] = lum[i];
        deg[i * 3 + 1] = lum[i];
        deg[i * 3 + 2] = lum[i];
      }
      return blend(deg, img, magnitude as number);
    }
    case OpKind.Sharpness:
      return blend(smooth(img), img, magnitude as number);
    case OpKind.Cutout: {
      const [sideFrac, ux, uy] = magnitude as [number, number, number];
      const side = Math.floor(sideFrac * Math.min(h, w) + 0.5);
      const out = copyOf(img);
      if (side <= 0) return out;
      const cx = Math.floor(ux * w);
      const cy = Math.floor(uy * h);
      const half = Math.floor(side / 2);
      const y0 = Math.max(0, cy - half);
      const x0 = Math.max(0, cx - half);
      const y1 = Math.min(h, cy - half + side);
      const x1 = Math.min(w, cx - half + side);
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) {
          for (let ch = 0; ch < c; ch++) {
            out.data[(y * w + x) * c + ch] = FILL_GRAY;
          }
        }
      }
      return out;
    }
    case OpKind.ShearX: {
      const s = magnitude as number;
      return gather(img, (y, x) => [y, x + s * y]);
    }
    case OpKind.ShearY: {
      const s = magnitude as number;
      return gather(img, (y, x) => [y + s * x, x]);
    }
    case OpKind.TranslateX: {
      const dx = Math.floor((magnitude as number) * w + 0.5);
      return gather(img, (y, x) => [y, x + dx]);
    }
    case OpKind.TranslateY: {
      const dy = Math.floor((magnitude as number) * h + 0.5);
      return gather(img, (y, x) => [y + dy, x]);
    }
    case OpKind.Rotate: {
      const theta = (magnitude as number) * Math.PI / 180.0;
      const cosT = Math.cos(theta);
      const sinT = Math.sin(theta);
      const cyC = (h - 1) / 2.0;
      const cxC = (w - 1) / 2.0;
      return gather(img, (y, x) => {
        const dx = x - cxC;
        const dy = y - cyC;
        return [cyC - sinT * dx + cosT * dy, cxC + cosT * dx + sinT * dy];
      });
    }
    default:
      throw new Error(`unknown op kind ${kind}`);
  }
}

export function applyTriple(img: Raster, triple: number[],
                            rng: SplitMix64): Raster {
  if (triple.length !== 3) {
    throw new Error(`triple must have exactly 3 ops, got ${triple}`);
  }
  let out = img;
  for (const kind of triple) {
    const { resolved } = sampleMagnitude(kind as OpKind, rng);
    out = applyOp(out, kind as OpKind, resolved);
  }
  return out;
}
