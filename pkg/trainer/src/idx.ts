/**
 * IDX tensor files (the MNIST container format), gzip-transparent.
 *
 * An IDX file is big-endian throughout:
 *
 *     byte 0..1   zero
 *     byte 2      element type code
 *     byte 3     number of dimensions N
 *     4 + 4*i    dimension i size (u32 big-endian)
 *     then       row-major payload
 *
 * Only the unsigned-byte element type (0x08) is supported, which covers
 * both MNIST image and label files.
 */
import * as fs from "node:fs";
import * as path from "node:path";
import * as zlib from "node:zlib";

export class IdxError extends Error {}

export interface IdxTensor {
  dims: number[];
  data: Uint8Array;
}

const TYPE_UBYTE = 0x08;

function readBytes(file: string): Buffer {
  const raw = fs.readFileSync(file);
  return file.endsWith(".gz") ? zlib.gunzipSync(raw) : raw;
}

export function loadIdx(file: string): IdxTensor {
  const data = readBytes(file);
  if (data.length < 4) {
    throw new IdxError(`${file}: truncated header`);
  }
  const zero = data.readUInt16BE(0);
  const code = data.readUInt8(2);
  const ndim = data.readUInt8(3);
  if (zero !== 0) {
    throw new IdxError(`${file}: bad magic prefix 0x${zero.toString(16)}`);
  }
  if (code !== TYPE_UBYTE) {
    throw new IdxError(`${file}: unsupported element type 0x${code.toString(16)}`);
  }
  if (data.length < 4 + 4 * ndim) {
    throw new IdxError(`${file}: truncated dimension list`);
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    dims.push(data.readUInt32BE(4 + 4 * i));
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const payload = data.subarray(4 + 4 * ndim);
  if (payload.length !== count) {
    throw new IdxError(
      `${file}: payload is ${payload.length} bytes, dimensions need ${count}`);
  }
  return { dims, data: new Uint8Array(payload) };
}

export interface MnistSplit {
  /** Flattened images, count * rows * cols bytes, row-major. */
  images: Uint8Array;
  labels: Uint8Array;
  count: number;
  rows: number;
  cols: number;
}

/** Load one MNIST split by its canonical file names, compressed or not. */
export function loadMnist(dataDir: string, split: "train" | "test"): MnistSplit {
  const prefix = split === "train" ? "train" : "t10k";
  const find = (stem: string): string => {
    for (const name of [`${stem}.gz`, stem]) {
      const p = path.join(dataDir, name);
      if (fs.existsSync(p)) {
        return p;
      }
    }
    throw new IdxError(`${dataDir}/${stem}[.gz] not found`);
  };
  const imgs = loadIdx(find(`${prefix}-images-idx3-ubyte`));
  const labels = loadIdx(find(`${prefix}-labels-idx1-ubyte`));
  if (imgs.dims.length !== 3 || labels.dims.length !== 1) {
    throw new IdxError("unexpected tensor rank for an MNIST split");
  }
  const [count, rows, cols] = imgs.dims;
  if (labels.dims[0] !== count) {
    throw new IdxError(`${count} images but ${labels.dims[0]} labels`);
  }
  return { images: imgs.data, labels: labels.data, count, rows, cols };
}
