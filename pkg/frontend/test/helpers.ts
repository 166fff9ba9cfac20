import { writeFileSync } from "fs";

import { PNG } from "pngjs";

import { SplitMix64 } from "../src/rng.js";

export function writeTestPng(path: string, width: number, height: number, seed: number): void {
  const png = new PNG({ width, height });
  const rng = new SplitMix64(seed);
  for (let i = 0; i < width * height; i++) {
    png.data[4 * i] = rng.bounded(256);
    png.data[4 * i + 1] = rng.bounded(256);
    png.data[4 * i + 2] = rng.bounded(256);
    png.data[4 * i + 3] = 255;
  }
  writeFileSync(path, PNG.sync.write(png));
}
