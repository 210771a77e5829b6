/**
 * MWB1 binary weight container — writer and reader.
 *
 * Format (all multi-byte integers little-endian):
 *
 *     offset  size  field
 *     0       4     magic "MWB1"
 *     4       2     version (currently 1)
 *     6       2     layer_count
 *     then per layer, in order:
 *             4     rows (u32)
 *             4     cols (u32)
 *             1     encoding: 0 -> weights in {0,1}, 1 -> weights in {-1,+1}
 *             ceil(rows*cols/8)  payload: bitpacked row-major, LSB-first
 *
 * For encoding 1 a stored bit b maps to weight 2*b - 1.  The final payload
 * byte of a layer is zero-padded.  save(load(f)) is byte-identical.
 */
import * as crypto from "node:crypto";
import * as fs from "node:fs";

export const MAGIC = "MWB1";
export const VERSION = 1;

export const ENC_UNSIGNED = 0; // {0, 1}
export const ENC_SIGNED = 1;   // {-1, +1}

export class WeightFileError extends Error {}

export interface WeightLayer {
  encoding: number;
  rows: number;
  cols: number;
  /** Row-major weights, length rows*cols, in the encoding's domain. */
  values: Int8Array;
}

export function makeLayer(
    encoding: number, rows: number, cols: number,
    values: Int8Array): WeightLayer {
  if (encoding !== ENC_UNSIGNED && encoding !== ENC_SIGNED) {
    throw new WeightFileError(`unknown encoding ${encoding}`);
  }
  if (values.length !== rows * cols) {
    throw new WeightFileError(
      `${rows}x${cols} layer needs ${rows * cols} values, got ${values.length}`);
  }
  const lo = encoding === ENC_UNSIGNED ? 0 : -1;
  for (let i = 0; i < values.length; i++) {
    if (values[i] !== lo && values[i] !== 1) {
      throw new WeightFileError(
        `value ${values[i]} outside encoding-${encoding} domain {${lo}, 1}`);
    }
  }
  return { encoding, rows, cols, values };
}

/** Stored bit per weight: {0,1} identity; {-1,+1} -> (w+1)/2. */
function packPayload(layer: WeightLayer): Buffer {
  const n = layer.rows * layer.cols;
  const out = Buffer.alloc(Math.ceil(n / 8));
  for (let i = 0; i < n; i++) {
    const bit = layer.encoding === ENC_UNSIGNED
      ? layer.values[i]
      : (layer.values[i] + 1) >> 1;
    if (bit) {
      out[i >> 3] |= 1 << (i & 7);
    }
  }
  return out;
}

export function encodeWeightFile(layers: WeightLayer[]): Buffer {
  const parts: Buffer[] = [];
  const header = Buffer.alloc(8);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt16LE(VERSION, 4);
  header.writeUInt16LE(layers.length, 6);
  parts.push(header);
  for (const layer of layers) {
    makeLayer(layer.encoding, layer.rows, layer.cols, layer.values);
    const lh = Buffer.alloc(9);
    lh.writeUInt32LE(layer.rows, 0);
    lh.writeUInt32LE(layer.cols, 4);
    lh.writeUInt8(layer.encoding, 8);
    parts.push(lh, packPayload(layer));
  }
  return Buffer.concat(parts);
}

export function decodeWeightFile(data: Buffer, name = "<buffer>"): WeightLayer[] {
  if (data.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new WeightFileError(`${name}: bad magic, expected ${MAGIC}`);
  }
  if (data.length < 8) {
    throw new WeightFileError(`${name}: truncated header`);
  }
  const version = data.readUInt16LE(4);
  const layerCount = data.readUInt16LE(6);
  if (version !== VERSION) {
    throw new WeightFileError(`${name}: unsupported version ${version}`);
  }
  let pos = 8;
  const layers: WeightLayer[] = [];
  for (let i = 0; i < layerCount; i++) {
    if (pos + 9 > data.length) {
      throw new WeightFileError(`${name}: truncated layer ${i} header`);
    }
    const rows = data.readUInt32LE(pos);
    const cols = data.readUInt32LE(pos + 4);
    const encoding = data.readUInt8(pos + 8);
    pos += 9;
    const n = rows * cols;
    const nbytes = Math.ceil(n / 8);
    if (pos + nbytes > data.length) {
      throw new WeightFileError(`${name}: truncated layer ${i} payload`);
    }
    if (encoding !== ENC_UNSIGNED && encoding !== ENC_SIGNED) {
      throw new WeightFileError(`${name}: unknown encoding ${encoding} in layer ${i}`);
    }
    const values = new Int8Array(n);
    for (let j = 0; j < n; j++) {
      const bit = (data[pos + (j >> 3)] >> (j & 7)) & 1;
      values[j] = encoding === ENC_UNSIGNED ? bit : 2 * bit - 1;
    }
    pos += nbytes;
    layers.push({ encoding, rows, cols, values });
  }
  if (pos !== data.length) {
    throw new WeightFileError(
      `${name}: ${data.length - pos} trailing bytes after last layer`);
  }
  return layers;
}

export function saveWeightFile(file: string, layers: WeightLayer[]): void {
  fs.writeFileSync(file, encodeWeightFile(layers));
}

export function loadWeightFile(file: string): WeightLayer[] {
  return decodeWeightFile(fs.readFileSync(file), file);
}

export function fileSha256(file: string): string {
  return crypto.createHash("sha256").update(fs.readFileSync(file)).digest("hex");
}
