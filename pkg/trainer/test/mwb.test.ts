import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { ENC_SIGNED, ENC_UNSIGNED, WeightFileError, decodeWeightFile,
         encodeWeightFile, loadWeightFile, makeLayer } from "../src/mwb";

const FIXTURE = path.resolve(__dirname, "..", "..", "data", "mnist_fixture");

describe("MWB1 encoding", () => {
  it("pins the exact byte layout (LSB-first, zero-padded)", () => {
    const layer = makeLayer(ENC_SIGNED, 2, 5,
                            Int8Array.from([-1, 1, 1, -1, 1, 1, -1, -1, 1, 1]));
    const buf = encodeWeightFile([layer]);
    expect(buf.toString("ascii", 0, 4)).toBe("MWB1");
    expect(Array.from(buf.subarray(4))).toEqual([
      1, 0,          // version
      1, 0,          // layer count
      2, 0, 0, 0,    // rows
      5, 0, 0, 0,    // cols
      1,             // signed encoding
      0x36, 0x03,    // bits 0110110011 packed LSB-first
    ]);
  });

  it("round-trips byte-identically", () => {
    const layers = [
      makeLayer(ENC_SIGNED, 3, 7, Int8Array.from(
        { length: 21 }, (_, i) => (i % 3 === 0 ? -1 : 1))),
      makeLayer(ENC_UNSIGNED, 2, 2, Int8Array.from([1, 0, 0, 1])),
    ];
    const buf = encodeWeightFile(layers);
    const back = decodeWeightFile(buf);
    expect(back.length).toBe(2);
    expect(Array.from(back[0].values)).toEqual(Array.from(layers[0].values));
    expect(Array.from(back[1].values)).toEqual(Array.from(layers[1].values));
    expect(encodeWeightFile(back).equals(buf)).toBe(true);
  });

  it("rejects out-of-domain values", () => {
    expect(() => makeLayer(ENC_SIGNED, 1, 2, Int8Array.from([0, 1])))
      .toThrow(WeightFileError);
    expect(() => makeLayer(ENC_UNSIGNED, 1, 2, Int8Array.from([-1, 1])))
      .toThrow(WeightFileError);
  });

  it("rejects bad magic, version, and trailing bytes", () => {
    const buf = encodeWeightFile(
      [makeLayer(ENC_UNSIGNED, 1, 1, Int8Array.from([1]))]);
    const badMagic = Buffer.from(buf);
    badMagic.write("XXXX", 0, "ascii");
    expect(() => decodeWeightFile(badMagic)).toThrow(/magic/);
    const badVersion = Buffer.from(buf);
    badVersion.writeUInt16LE(9, 4);
    expect(() => decodeWeightFile(badVersion)).toThrow(/version/);
    const trailing = Buffer.concat([buf, Buffer.from([0])]);
    expect(() => decodeWeightFile(trailing)).toThrow(/trailing/);
  });

  it("reads the committed simulator fixture and re-encodes it byte-identically",
     () => {
    const file = path.join(FIXTURE, "core0.mwb");
    const layers = loadWeightFile(file);
    expect(layers.length).toBe(2);
    expect([layers[0].rows, layers[0].cols]).toEqual([300, 196]);
    expect([layers[1].rows, layers[1].cols]).toEqual([10, 300]);
    for (const layer of layers) {
      expect(layer.encoding).toBe(ENC_SIGNED);
      for (const v of layer.values) {
        expect(v === 1 || v === -1).toBe(true);
      }
    }
    expect(encodeWeightFile(layers).equals(fs.readFileSync(file))).toBe(true);
  });

  it("writes files through the filesystem helpers", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "mwb-"));
    const file = path.join(dir, "w.mwb");
    const layers = [makeLayer(ENC_SIGNED, 4, 4, Int8Array.from(
      { length: 16 }, (_, i) => (i % 2 ? 1 : -1)))];
    fs.writeFileSync(file, encodeWeightFile(layers));
    const back = loadWeightFile(file);
    expect(Array.from(back[0].values)).toEqual(Array.from(layers[0].values));
  });
});
