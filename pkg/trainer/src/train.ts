/**
 * Quantization-aware training of the four-core MNIST quad-classifier:
 * each core sees one interleaved 14x14 sub-image through its own
 * 196 -> hidden -> 10 binary-weight MLP, and the chip-level prediction
 * sums the four logit vectors.
 *
 * Training holds out the last VAL_SIZE images of the train split for
 * validation; the test split is never touched here.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { MnistSplit } from "./idx";
import { ENC_SIGNED, fileSha256, makeLayer, saveWeightFile } from "./mwb";
import { BinaryMlp } from "./net";
import { Rng } from "./rng";
import { N_CORES, SUB_PIXELS, subsampleDataset } from "./subsample";

export const VAL_SIZE = 5000;
export const N_CLASSES = 10;

export interface TrainSpec {
  hidden: number;
  epochs: number;
  batch: number;
  lr: number;
  seed: number;
}

export const DEFAULT_SPEC: TrainSpec = {
  hidden: 300,
  epochs: 24,
  batch: 128,
  lr: 1e-3,
  seed: 11,
};

export class DivergenceError extends Error {}

export interface CoreResult {
  w1: Int8Array; // (hidden x 196) in {-1,+1}
  w2: Int8Array; // (10 x hidden)
  valAcc: number;
}

export interface TrainResult {
  spec: TrainSpec;
  cores: CoreResult[];
  ensembleValAcc: number;
}

export type Logger = (line: string) => void;

/** Per-core logits from exported binary weights (ReLU hidden, linear out). */
export function binaryLogits(
    w1: Int8Array, w2: Int8Array, hidden: number,
    x: Float32Array, xOff: number, logits: Float64Array): void {
  logits.fill(0);
  for (let j = 0; j < hidden; j++) {
    const row = j * SUB_PIXELS;
    let acc = 0;
    for (let k = 0; k < SUB_PIXELS; k++) {
      acc += w1[row + k] * x[xOff + k];
    }
    if (acc <= 0) {
      continue;
    }
    for (let c = 0; c < N_CLASSES; c++) {
      logits[c] += w2[c * hidden + j] * acc;
    }
  }
}

function argmax(v: Float64Array): number {
  let best = 0;
  for (let c = 1; c < v.length; c++) {
    if (v[c] > v[best]) {
      best = c;
    }
  }
  return best;
}

function valAccuracy(net: BinaryMlp, x: Float32Array, labels: Uint8Array,
                     offset: number, count: number): number {
  net.binarize();
  const hidden = new Float64Array(net.nHidden);
  const logits = new Float64Array(net.nOut);
  let correct = 0;
  for (let i = 0; i < count; i++) {
    if (net.predict(x, (offset + i) * net.nIn, hidden, logits)
        === labels[offset + i]) {
      correct++;
    }
  }
  return correct / count;
}

export function trainCore(
    x: Float32Array, labels: Uint8Array, trainCount: number, valCount: number,
    spec: TrainSpec, seed: number, log: Logger = () => {}): CoreResult {
  const rng = new Rng(seed);
  const net = new BinaryMlp(SUB_PIXELS, spec.hidden, N_CLASSES, rng);
  const index = new Int32Array(trainCount);
  for (let i = 0; i < trainCount; i++) {
    index[i] = i;
  }
  let best: CoreResult | null = null;
  for (let ep = 0; ep < spec.epochs; ep++) {
    rng.shuffle(index);
    const lr = spec.lr * Math.pow(0.5, Math.floor(ep / 8));
    let loss = 0;
    let correct = 0;
    let batches = 0;
    for (let s = 0; s < trainCount; s += spec.batch) {
      const e = Math.min(s + spec.batch, trainCount);
      const stats = net.trainBatch(x, labels, index, s, e, lr);
      loss += stats.loss;
      correct += stats.correct;
      batches++;
    }
    const valAcc = valAccuracy(net, x, labels, trainCount, valCount);
    log(`    epoch ${String(ep).padStart(2)}  train loss ${(loss / batches).toFixed(4)} ` +
        `acc ${(correct / trainCount).toFixed(4)}  val acc ${valAcc.toFixed(4)}`);
    if (ep === 0 && valAcc < 0.5) {
      throw new DivergenceError(
        `diverged: validation accuracy ${valAcc.toFixed(4)} < 0.5 after ` +
        `epoch 1 (train loss ${(loss / batches).toFixed(4)}, ` +
        `train acc ${(correct / trainCount).toFixed(4)}, seed ${seed})`);
    }
    if (best === null || valAcc > best.valAcc) {
      best = { ...net.binaryWeights(), valAcc };
    }
  }
  return best!;
}

export function ensembleAccuracy(
    cores: { w1: Int8Array; w2: Int8Array }[], hidden: number,
    xs: Float32Array[], labels: Uint8Array,
    offset: number, count: number): number {
  const logits = new Float64Array(N_CLASSES);
  const total = new Float64Array(N_CLASSES);
  let correct = 0;
  for (let i = 0; i < count; i++) {
    total.fill(0);
    for (let k = 0; k < cores.length; k++) {
      binaryLogits(cores[k].w1, cores[k].w2, hidden,
                   xs[k], (offset + i) * SUB_PIXELS, logits);
      for (let c = 0; c < N_CLASSES; c++) {
        total[c] += logits[c];
      }
    }
    if (argmax(total) === labels[offset + i]) {
      correct++;
    }
  }
  return correct / count;
}

export function trainQuadClassifiers(
    spec: TrainSpec, mnist: MnistSplit, log: Logger = () => {}): TrainResult {
  if (mnist.count <= VAL_SIZE) {
    throw new Error(`need more than ${VAL_SIZE} images, got ${mnist.count}`);
  }
  const trainCount = mnist.count - VAL_SIZE;
  const xs = subsampleDataset(mnist.images, mnist.count);
  const cores: CoreResult[] = [];
  for (let k = 0; k < N_CORES; k++) {
    log(`core ${k}:`);
    cores.push(trainCore(xs[k], mnist.labels, trainCount, VAL_SIZE,
                         spec, spec.seed + k, log));
  }
  const ensembleValAcc = ensembleAccuracy(cores, spec.hidden, xs,
                                          mnist.labels, trainCount, VAL_SIZE);
  log(`per-core val acc: ${cores.map((c) => c.valAcc.toFixed(4)).join(", ")}`);
  log(`ensemble val acc: ${ensembleValAcc.toFixed(4)}`);
  return { spec, cores, ensembleValAcc };
}

/** Write core{0..3}.mwb plus the JSON manifest into outDir. */
export function exportFixture(result: TrainResult, outDir: string): void {
  fs.mkdirSync(outDir, { recursive: true });
  const files: Record<string, string> = {};
  for (let k = 0; k < result.cores.length; k++) {
    const { w1, w2 } = result.cores[k];
    const file = path.join(outDir, `core${k}.mwb`);
    saveWeightFile(file, [
      makeLayer(ENC_SIGNED, result.spec.hidden, SUB_PIXELS, w1),
      makeLayer(ENC_SIGNED, N_CLASSES, result.spec.hidden, w2),
    ]);
    files[`core${k}.mwb`] = fileSha256(file);
  }
  const manifest = {
    hidden: result.spec.hidden,
    epochs: result.spec.epochs,
    batch: result.spec.batch,
    lr: result.spec.lr,
    train_seed: result.spec.seed,
    val_split: `train[last ${VAL_SIZE}]`,
    per_core_val_acc: result.cores.map((c) => Number(c.valAcc.toFixed(4))),
    ensemble_val_acc: Number(result.ensembleValAcc.toFixed(4)),
    files,
  };
  fs.writeFileSync(path.join(outDir, "manifest.json"),
                   JSON.stringify(manifest, null, 2) + "\n");
}
