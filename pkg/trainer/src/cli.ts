#!/usr/bin/env ts-node
/**
 * train --hidden N --epochs E --seed S --out DIR [--data DIR]
 *
 * Trains the four-core quad-classifier on MNIST and writes
 * core{0..3}.mwb plus manifest.json (accuracy, seed, hashes) to the
 * output directory.
 */
import * as path from "node:path";
import { parseArgs } from "node:util";

import { loadMnist } from "./idx";
import { DEFAULT_SPEC, DivergenceError, exportFixture,
         trainQuadClassifiers } from "./train";

function main(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      hidden: { type: "string", default: String(DEFAULT_SPEC.hidden) },
      epochs: { type: "string", default: String(DEFAULT_SPEC.epochs) },
      batch: { type: "string", default: String(DEFAULT_SPEC.batch) },
      lr: { type: "string", default: String(DEFAULT_SPEC.lr) },
      seed: { type: "string", default: String(DEFAULT_SPEC.seed) },
      data: { type: "string",
              default: path.resolve(__dirname, "..", "..", "data", "mnist") },
      out: { type: "string",
             default: path.resolve(__dirname, "..", "out") },
    },
  });
  const spec = {
    hidden: parseInt(values.hidden!, 10),
    epochs: parseInt(values.epochs!, 10),
    batch: parseInt(values.batch!, 10),
    lr: parseFloat(values.lr!),
    seed: parseInt(values.seed!, 10),
  };
  if (!(spec.hidden >= 1 && spec.hidden <= 300)) {
    console.error(`--hidden ${values.hidden} outside [1, 300]`);
    return 2;
  }
  if (!(spec.epochs >= 1) || !(spec.batch >= 1) || !(spec.lr > 0)) {
    console.error("--epochs and --batch must be >= 1, --lr > 0");
    return 2;
  }

  const t0 = Date.now();
  const mnist = loadMnist(values.data!, "train");
  console.log(`loaded ${mnist.count} train images from ${values.data}`);
  try {
    const result = trainQuadClassifiers(spec, mnist, console.log);
    exportFixture(result, values.out!);
    console.log(`wrote ${values.out}/manifest.json ` +
                `(${((Date.now() - t0) / 1000).toFixed(0)}s total)`);
    return 0;
  } catch (err) {
    if (err instanceof DivergenceError) {
      console.error(`aborted: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

process.exitCode = main(process.argv.slice(2));
