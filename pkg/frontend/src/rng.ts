/*
 Portable seeded randomness: SplitMix64 with the standard constants.

 The recurrence and every derived draw match the Python side bit for bit,
 so a seed means the same thing in both halves of the toolchain:

   state  <- (state + 0x9E3779B97F4A7C15) mod 2^64
   z      <- state
   z      <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
   z      <- (z xor (z >> 27)) * 0x94D049BB133111EB   mod 2^64
   output <- z xor (z >> 31)

 float64 in [0,1): (u64 >> 11) * 2^-53.
 standard normals: Box-Muller on consecutive uniform pairs (u1, u2) with
 r = sqrt(-2 ln(1 - u1)); for an odd request the final sine is discarded.
 bounded integers: u64 % n, accepted only when u64 < (2^64 / n) * n.
*/

const MASK64 = (1n << 64n) - 1n;
const GOLDEN_GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;
const U64_TO_UNIT = 2 ** -53;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
  return z ^ (z >> 31n);
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GOLDEN_GAMMA) & MASK64;
    return mix64(this.state);
  }

  nextF64(): number {
    return Number(this.nextU64() >> 11n) * U64_TO_UNIT;
  }

  /** Unbiased integer in [0, n). */
  bounded(n: number): number {
    if (n <= 0) throw new RangeError("n must be positive");
    const bn = BigInt(n);
    const threshold = ((1n << 64n) / bn) * bn;
    for (;;) {
      const u = this.nextU64();
      if (u < threshold) return Number(u % bn);
    }
  }

  /** n standard-normal draws (Box-Muller, pair-aligned). */
  normals(n: number): Float64Array {
    const out = new Float64Array(n);
    const pairs = Math.ceil(n / 2);
    for (let p = 0; p < pairs; p++) {
      const u1 = this.nextF64();
      const u2 = this.nextF64();
      const r = Math.sqrt(-2.0 * Math.log(1.0 - u1));
      const theta = 2.0 * Math.PI * u2;
      out[2 * p] = r * Math.cos(theta);
      if (2 * p + 1 < n) out[2 * p + 1] = r * Math.sin(theta);
    }
    return out;
  }
}
