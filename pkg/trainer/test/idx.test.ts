import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import * as zlib from "node:zlib";

import { describe, expect, it } from "vitest";

import { IdxError, loadIdx, loadMnist } from "../src/idx";

const DATA_DIR = path.resolve(__dirname, "..", "..", "data", "mnist");

function idxBuffer(dims: number[], payload: number[]): Buffer {
  const head = Buffer.alloc(4 + 4 * dims.length);
  head.writeUInt16BE(0, 0);
  head.writeUInt8(0x08, 2);
  head.writeUInt8(dims.length, 3);
  dims.forEach((d, i) => head.writeUInt32BE(d, 4 + 4 * i));
  return Buffer.concat([head, Buffer.from(payload)]);
}

function tmpFile(name: string, data: Buffer): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "idx-"));
  const file = path.join(dir, name);
  fs.writeFileSync(file, data);
  return file;
}

describe("loadIdx", () => {
  it("reads a plain tensor", () => {
    const t = loadIdx(tmpFile("t.idx", idxBuffer([2, 3], [1, 2, 3, 4, 5, 6])));
    expect(t.dims).toEqual([2, 3]);
    expect(Array.from(t.data)).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it("decompresses .gz transparently", () => {
    const raw = idxBuffer([4], [9, 8, 7, 6]);
    const t = loadIdx(tmpFile("t.idx.gz", zlib.gzipSync(raw)));
    expect(t.dims).toEqual([4]);
    expect(Array.from(t.data)).toEqual([9, 8, 7, 6]);
  });

  it("rejects a bad magic prefix", () => {
    const bad = idxBuffer([1], [0]);
    bad.writeUInt16BE(0xffff, 0);
    expect(() => loadIdx(tmpFile("bad.idx", bad))).toThrow(IdxError);
  });

  it("rejects a payload shorter than the dimensions claim", () => {
    const bad = idxBuffer([10], [1, 2, 3]);
    expect(() => loadIdx(tmpFile("short.idx", bad))).toThrow(/payload/);
  });

  it("rejects non-ubyte element types", () => {
    const bad = idxBuffer([1], [0]);
    bad.writeUInt8(0x0d, 2);
    expect(() => loadIdx(tmpFile("float.idx", bad))).toThrow(/element type/);
  });
});

describe("loadMnist", () => {
  it("loads the train split with matching counts", () => {
    const split = loadMnist(DATA_DIR, "train");
    expect(split.count).toBe(60000);
    expect(split.rows).toBe(28);
    expect(split.cols).toBe(28);
    expect(split.images.length).toBe(60000 * 784);
    expect(split.labels.length).toBe(60000);
    expect(Math.max(...split.labels.subarray(0, 1000))).toBeLessThan(10);
  });

  it("loads the test split", () => {
    const split = loadMnist(DATA_DIR, "test");
    expect(split.count).toBe(10000);
  });

  it("names the missing file", () => {
    expect(() => loadMnist("/nonexistent", "train"))
      .toThrow(/train-images-idx3-ubyte/);
  });
});
