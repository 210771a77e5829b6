import { describe, expect, it } from "vitest";

import { SUB_PIXELS, interleaveSubsample, subsampleDataset }
  from "../src/subsample";

describe("interleaveSubsample", () => {
  it("routes pixel (2r+a, 2c+b) to cell (r, c) of core a*2+b", () => {
    // a ramp makes every source pixel uniquely identifiable
    const img = Uint8Array.from({ length: 784 }, (_, i) => i % 256);
    const subs = interleaveSubsample(img);
    for (let a = 0; a < 2; a++) {
      for (let b = 0; b < 2; b++) {
        for (let r = 0; r < 14; r++) {
          for (let c = 0; c < 14; c++) {
            const got = subs[(a * 2 + b) * SUB_PIXELS + r * 14 + c];
            const want = Math.fround(img[(2 * r + a) * 28 + (2 * c + b)] / 255);
            expect(got).toBe(want);
          }
        }
      }
    }
  });

  it("rejects wrong-size images", () => {
    expect(() => interleaveSubsample(new Uint8Array(100))).toThrow(/28x28/);
  });

  it("splits a dataset per core, sample-major", () => {
    const n = 3;
    const images = new Uint8Array(n * 784);
    for (let i = 0; i < images.length; i++) {
      images[i] = (i * 7) % 256;
    }
    const cores = subsampleDataset(images, n);
    expect(cores.length).toBe(4);
    for (let i = 0; i < n; i++) {
      const subs = interleaveSubsample(images.subarray(i * 784, (i + 1) * 784));
      for (let k = 0; k < 4; k++) {
        const got = cores[k].subarray(i * SUB_PIXELS, (i + 1) * SUB_PIXELS);
        expect(Array.from(got)).toEqual(
          Array.from(subs.subarray(k * SUB_PIXELS, (k + 1) * SUB_PIXELS)));
      }
    }
  });
});
