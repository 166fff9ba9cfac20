/*
 Feature backbones: 224x224 RGB in, pooled feature vector out.

 The reference deployment runs a CNN pretrained at scale and takes its
 penultimate globally-pooled output (2048 dimensions). This environment
 has no pretrained weights to load, so the default backbone is a small
 seeded convolutional stack with the same interface, the same input
 pipeline and the same 2048-dim pooled output: weights are drawn
 deterministically from a fixed SplitMix64 stream, making exports
 byte-reproducible. Swap in a real model by implementing Backbone.
*/

import { SplitMix64 } from "./rng.js";
import type { RgbImage } from "./image.js";

/** Standard per-channel normalization of pretrained image backbones. */
export const CHANNEL_MEAN = [0.485, 0.456, 0.406];
export const CHANNEL_STD = [0.229, 0.224, 0.225];

export interface Backbone {
  readonly name: string;
  readonly dim: number;
  /** img must be 224x224 RGB with values 0..255. */
  features(img: RgbImage): Float64Array;
}

/** Scale to [0,1] and normalize per channel, channel-interleaved in place. */
export function normalize(img: RgbImage): Float64Array {
  const out = new Float64Array(img.data.length);
  for (let p = 0; p < img.width * img.height; p++) {
    for (let c = 0; c < 3; c++) {
      out[3 * p + c] = (img.data[3 * p + c] / 255.0 - CHANNEL_MEAN[c]) / CHANNEL_STD[c];
    }
  }
  return out;
}

const WEIGHT_SEED = 0x20480001n;

export class SeededConvBackbone implements Backbone {
  readonly name = "seeded-conv-2048";
  readonly dim = 2048;

  // 16x avgpool -> 1x1 conv 3->32 -> 3x3/2 conv 32->64 -> 1x1 conv 64->2048 -> global avgpool
  private w1: Float64Array; // (32, 3)
  private b1: Float64Array;
  private w2: Float64Array; // (64, 32, 3, 3)
  private b2: Float64Array;
  private w3: Float64Array; // (2048, 64)
  private b3: Float64Array;

  constructor() {
    const rng = new SplitMix64(WEIGHT_SEED);
    const he = (fanIn: number, n: number) => {
      const w = rng.normals(n);
      const scale = Math.sqrt(2.0 / fanIn);
      for (let i = 0; i < n; i++) w[i] *= scale;
      return w;
    };
    this.w1 = he(3, 32 * 3);
    this.b1 = new Float64Array(32);
    this.w2 = he(32 * 9, 64 * 32 * 9);
    this.b2 = new Float64Array(64);
    this.w3 = he(64, 2048 * 64);
    this.b3 = new Float64Array(2048);
  }

  features(img: RgbImage): Float64Array {
    if (img.width !== 224 || img.height !== 224) {
      throw new RangeError(`backbone expects 224x224 input, got ${img.width}x${img.height}`);
    }
    const x = normalize(img);

    // 16x16 average pooling: 224 -> 14
    const g = 14;
    const pooled = new Float64Array(g * g * 3);
    for (let gy = 0; gy < g; gy++) {
      for (let gx = 0; gx < g; gx++) {
        for (let c = 0; c < 3; c++) {
          let acc = 0;
          for (let dy = 0; dy < 16; dy++) {
            const row = (gy * 16 + dy) * 224 + gx * 16;
            for (let dx = 0; dx < 16; dx++) acc += x[3 * (row + dx) + c];
          }
          pooled[3 * (gy * g + gx) + c] = acc / 256.0;
        }
      }
    }

    // 1x1 conv 3->32, ReLU
    const h1 = new Float64Array(g * g * 32);
    for (let p = 0; p < g * g; p++) {
      for (let k = 0; k < 32; k++) {
        let acc = this.b1[k];
        for (let c = 0; c < 3; c++) acc += this.w1[3 * k + c] * pooled[3 * p + c];
        h1[32 * p + k] = acc > 0 ? acc : 0;
      }
    }

    // 3x3 conv stride 2, 32->64, ReLU: 14 -> 6
    const g2 = 6;
    const h2 = new Float64Array(g2 * g2 * 64);
    for (let oy = 0; oy < g2; oy++) {
      for (let ox = 0; ox < g2; ox++) {
        for (let k = 0; k < 64; k++) {
          let acc = this.b2[k];
          for (let ky = 0; ky < 3; ky++) {
            for (let kx = 0; kx < 3; kx++) {
              const p = (oy * 2 + ky) * g + (ox * 2 + kx);
              const wBase = ((k * 3 + ky) * 3 + kx) * 32;
              for (let c = 0; c < 32; c++) acc += this.w2[wBase + c] * h1[32 * p + c];
            }
          }
          h2[64 * (oy * g2 + ox) + k] = acc > 0 ? acc : 0;
        }
      }
    }

    // 1x1 conv 64->2048, ReLU, then global average pool
    const out = new Float64Array(2048);
    for (let p = 0; p < g2 * g2; p++) {
      for (let k = 0; k < 2048; k++) {
        let acc = this.b3[k];
        const wBase = 64 * k;
        for (let c = 0; c < 64; c++) acc += this.w3[wBase + c] * h2[64 * p + c];
        if (acc > 0) out[k] += acc;
      }
    }
    for (let k = 0; k < 2048; k++) out[k] /= g2 * g2;
    return out;
  }
}
