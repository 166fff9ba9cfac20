/*
 Directory-of-images to CBFV feature file.

 The input root holds one subdirectory per class. Every image is resized
 to 256x256 and cropped to 224x224 (seeded random offsets in train mode,
 center crop otherwise), then pushed through the backbone; pooled features
 land in the CBFV file with the label map sidecar at <out>.labels and a
 provenance record at <out>.meta.json.

 Processing order is always sorted (class dir, file name); in random-crop
 mode each decoded image consumes exactly two bounded draws (x then y)
 from the seed stream, so a fixed seed reproduces output byte for byte.
 Undecodable files are skipped with a warning; a class directory with no
 usable image is an error.
*/

import { readdirSync, statSync, writeFileSync } from "fs";
import { join } from "path";

import { Backbone, CHANNEL_MEAN, CHANNEL_STD, SeededConvBackbone } from "./backbone.js";
import { FeatureRecord, writeCbfv, writeLabelMap } from "./cbfv.js";
import { DecodeError, crop, decodeImage, resizeBilinear } from "./image.js";
import { SplitMix64 } from "./rng.js";

export const RESIZE_TO = 256;
export const CROP_TO = 224;

export interface ExportSpec {
  inputRoot: string;
  outPath: string;
  cropMode: "random" | "center";
  seed: number;
}

export interface ExportResult {
  count: number;
  dim: number;
  classes: string[];
  warnings: string[];
}

function classDirectories(root: string): string[] {
  const entries = readdirSync(root)
    .filter((name) => statSync(join(root, name)).isDirectory())
    .sort();
  if (entries.length === 0) {
    throw new Error(`no class subdirectories under ${root}`);
  }
  return entries;
}

export function exportFeatures(spec: ExportSpec, backbone: Backbone = new SeededConvBackbone()): ExportResult {
  const classes = classDirectories(spec.inputRoot);
  const rng = new SplitMix64(spec.seed);
  const margin = RESIZE_TO - CROP_TO;
  const warnings: string[] = [];
  const records: FeatureRecord[] = [];

  classes.forEach((className, label) => {
    const dir = join(spec.inputRoot, className);
    const files = readdirSync(dir)
      .filter((name) => statSync(join(dir, name)).isFile())
      .sort();
    let usable = 0;
    for (const file of files) {
      const path = join(dir, file);
      let image;
      try {
        image = decodeImage(path);
      } catch (err) {
        if (err instanceof DecodeError) {
          warnings.push(err.message);
          continue;
        }
        throw err;
      }
      const resized = resizeBilinear(image, RESIZE_TO, RESIZE_TO);
      let x0: number;
      let y0: number;
      if (spec.cropMode === "random") {
        x0 = rng.bounded(margin + 1);
        y0 = rng.bounded(margin + 1);
      } else {
        x0 = margin / 2;
        y0 = margin / 2;
      }
      const cropped = crop(resized, x0, y0, CROP_TO, CROP_TO);
      records.push({ label, values: backbone.features(cropped) });
      usable++;
    }
    if (usable === 0) {
      throw new Error(`class directory ${dir} has no decodable images`);
    }
  });

  writeCbfv(spec.outPath, backbone.dim, records);
  writeLabelMap(`${spec.outPath}.labels`, classes);
  const meta = {
    backbone: backbone.name,
    dim: backbone.dim,
    resize_to: RESIZE_TO,
    crop_to: CROP_TO,
    crop_mode: spec.cropMode,
    seed: spec.seed,
    channel_mean: CHANNEL_MEAN,
    channel_std: CHANNEL_STD,
    warning_count: warnings.length,
  };
  writeFileSync(`${spec.outPath}.meta.json`, JSON.stringify(meta, null, 2) + "\n", "utf-8");
  return { count: records.length, dim: backbone.dim, classes, warnings };
}
