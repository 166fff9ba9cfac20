/* Image decoding, bilinear resize and cropping for the export pipeline. */

import { readFileSync } from "fs";
import { extname } from "path";
import { PNG } from "pngjs";
import jpeg from "jpeg-js";

export interface RgbImage {
  width: number;
  height: number;
  /** row-major RGB triplets, values 0..255 */
  data: Float64Array;
}

export class DecodeError extends Error {}

/** Decode a PNG or JPEG file to RGB. Anything else is a DecodeError. */
export function decodeImage(path: string): RgbImage {
  const ext = extname(path).toLowerCase();
  let width: number;
  let height: number;
  let rgba: Uint8Array;
  try {
    const raw = readFileSync(path);
    if (ext === ".png") {
      const png = PNG.sync.read(raw);
      ({ width, height } = png);
      rgba = png.data;
    } else if (ext === ".jpg" || ext === ".jpeg") {
      const decoded = jpeg.decode(raw, { useTArray: true, formatAsRGBA: true });
      ({ width, height } = decoded);
      rgba = decoded.data;
    } else {
      throw new DecodeError(`unsupported image type: ${path}`);
    }
  } catch (err) {
    if (err instanceof DecodeError) throw err;
    throw new DecodeError(`cannot decode ${path}: ${(err as Error).message}`);
  }
  const data = new Float64Array(width * height * 3);
  for (let p = 0; p < width * height; p++) {
    data[3 * p] = rgba[4 * p];
    data[3 * p + 1] = rgba[4 * p + 1];
    data[3 * p + 2] = rgba[4 * p + 2];
  }
  return { width, height, data };
}

/**
 * Bilinear resize with half-pixel-centered sampling:
 * src = (dst + 0.5) * (srcSize / dstSize) - 0.5, clamped to the frame.
 */
export function resizeBilinear(img: RgbImage, outW: number, outH: number): RgbImage {
  const out = new Float64Array(outW * outH * 3);
  const scaleX = img.width / outW;
  const scaleY = img.height / outH;
  for (let y = 0; y < outH; y++) {
    const sy = Math.min(Math.max((y + 0.5) * scaleY - 0.5, 0), img.height - 1);
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, img.height - 1);
    const fy = sy - y0;
    for (let x = 0; x < outW; x++) {
      const sx = Math.min(Math.max((x + 0.5) * scaleX - 0.5, 0), img.width - 1);
      const x0 = Math.floor(sx);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const fx = sx - x0;
      for (let c = 0; c < 3; c++) {
        const v00 = img.data[3 * (y0 * img.width + x0) + c];
        const v01 = img.data[3 * (y0 * img.width + x1) + c];
        const v10 = img.data[3 * (y1 * img.width + x0) + c];
        const v11 = img.data[3 * (y1 * img.width + x1) + c];
        const top = v00 + (v01 - v00) * fx;
        const bottom = v10 + (v11 - v10) * fx;
        out[3 * (y * outW + x) + c] = top + (bottom - top) * fy;
      }
    }
  }
  return { width: outW, height: outH, data: out };
}

export function crop(img: RgbImage, x0: number, y0: number, w: number, h: number): RgbImage {
  if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height) {
    throw new RangeError(`crop ${w}x${h}@(${x0},${y0}) outside ${img.width}x${img.height}`);
  }
  const out = new Float64Array(w * h * 3);
  for (let y = 0; y < h; y++) {
    const srcRow = (y + y0) * img.width + x0;
    out.set(img.data.subarray(3 * srcRow, 3 * (srcRow + w)), 3 * y * w);
  }
  return { width: w, height: h, data: out };
}
