#!/usr/bin/env node
/*
 cbcl-export: image folders in, CBFV feature file out.

 Usage:
   cbcl-export export --in DIR --out FILE [--crop random|center] [--seed N]

 Exit codes match the consumer CLI: 0 ok, 1 usage error, 2 data error.
*/

import { exportFeatures } from "./export.js";

const USAGE = "usage: cbcl-export export --in DIR --out FILE [--crop random|center] [--seed N]";

function parseArgs(argv: string[]) {
  if (argv[0] !== "export") {
    throw new UsageError(`unknown command ${argv[0] ?? "(none)"}`);
  }
  let inputRoot = "";
  let outPath = "";
  let cropMode: "random" | "center" = "center";
  let seed = 0;
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new UsageError(`missing value for ${flag}`);
    switch (flag) {
      case "--in":
        inputRoot = value;
        break;
      case "--out":
        outPath = value;
        break;
      case "--crop":
        if (value !== "random" && value !== "center") {
          throw new UsageError(`--crop must be random or center, got ${value}`);
        }
        cropMode = value;
        break;
      case "--seed":
        seed = Number.parseInt(value, 10);
        if (!Number.isFinite(seed)) throw new UsageError(`bad --seed ${value}`);
        break;
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  if (!inputRoot || !outPath) throw new UsageError("--in and --out are required");
  return { inputRoot, outPath, cropMode, seed };
}

class UsageError extends Error {}

function main() {
  try {
    const spec = parseArgs(process.argv.slice(2));
    const result = exportFeatures(spec);
    for (const warning of result.warnings) {
      console.error(`warning: ${warning}`);
    }
    console.log(
      `wrote ${result.count} features (dim ${result.dim}, ${result.classes.length} classes) to ${spec.outPath}`,
    );
    if (result.warnings.length > 0) {
      console.error(`${result.warnings.length} file(s) skipped`);
    }
    process.exitCode = 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(USAGE);
      console.error(`error: ${err.message}`);
      process.exitCode = 1;
    } else {
      console.error(`error: ${(err as Error).message}`);
      process.exitCode = 2;
    }
  }
}

main();
