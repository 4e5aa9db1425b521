/**
 * Deterministic splitmix64 RNG, bit-compatible with the parent engine's
 * implementation (see docs/protocol.md in the repository root). All 64-bit
 * arithmetic uses BigInt; uniform floats carry 53 bits of precision.
 */

const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export const SEED53_MASK = (1n << 53n) - 1n;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
  return z ^ (z >> 31n);
}

export function hashSeed(...parts: Array<bigint | number>): bigint {
  let h = GOLDEN;
  for (const p of parts) {
    const v = typeof p === "bigint" ? p : BigInt(p);
    h = mix64((h + (v & MASK64)) & MASK64);
  }
  return h;
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    const v = typeof seed === "bigint" ? seed : BigInt(seed);
    this.state = v & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GOLDEN) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
    return z ^ (z >> 31n);
  }

  /** Uniform float in [0, 1). */
  random(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  randbelow(n: number): number {
    if (n <= 0) throw new RangeError("randbelow requires n > 0");
    return Number(this.nextU64() % BigInt(n));
  }
}
