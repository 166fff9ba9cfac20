/*
 CBFV binary feature file writer.

 Layout (little endian):
   magic "CBFV" | version 0x01 | u32 dim | u32 record count
   then per record: u32 label_id | dim * f32

 The label map sidecar sits at <path>.labels, one "id<TAB>name" line per
 class, UTF-8.
*/

import { writeFileSync } from "fs";

export interface FeatureRecord {
  label: number;
  values: Float64Array | Float32Array;
}

export function encodeCbfv(dim: number, records: FeatureRecord[]): Buffer {
  const headerSize = 4 + 1 + 4 + 4;
  const recordSize = 4 + 4 * dim;
  const buf = Buffer.alloc(headerSize + records.length * recordSize);
  buf.write("CBFV", 0, "ascii");
  buf.writeUInt8(1, 4);
  buf.writeUInt32LE(dim, 5);
  buf.writeUInt32LE(records.length, 9);
  let offset = headerSize;
  for (const record of records) {
    if (record.values.length !== dim) {
      throw new RangeError(`record has dim ${record.values.length}, expected ${dim}`);
    }
    buf.writeUInt32LE(record.label, offset);
    offset += 4;
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(record.values[i], offset);
      offset += 4;
    }
  }
  return buf;
}

export function writeCbfv(path: string, dim: number, records: FeatureRecord[]): void {
  writeFileSync(path, encodeCbfv(dim, records));
}

export function writeLabelMap(path: string, names: string[]): void {
  const lines = names.map((name, id) => `${id}\t${name}\n`).join("");
  writeFileSync(path, lines, "utf-8");
}
