/**
 * The quad-classifier front end: a 28x28 image splits into four
 * interleaved 14x14 sub-images.  Pixel (2r+a, 2c+b) of the source lands
 * at (r, c) of sub-image (a, b), which is handled by core a*2 + b.
 */

export const SUB_SIDE = 14;
export const SUB_PIXELS = SUB_SIDE * SUB_SIDE; // 196 inputs per core
export const N_CORES = 4;

/**
 * Split one 28x28 image (784 bytes, row-major) into the four normalized
 * sub-images: a Float32Array of 4*196 values in [0, 1], sub-image k
 * occupying [k*196, (k+1)*196).
 */
export function interleaveSubsample(image: Uint8Array): Float32Array {
  if (image.length !== 784) {
    throw new Error(`expected a 28x28 image (784 bytes), got ${image.length}`);
  }
  const out = new Float32Array(N_CORES * SUB_PIXELS);
  for (let a = 0; a < 2; a++) {
    for (let b = 0; b < 2; b++) {
      const base = (a * 2 + b) * SUB_PIXELS;
      for (let r = 0; r < SUB_SIDE; r++) {
        for (let c = 0; c < SUB_SIDE; c++) {
          out[base + r * SUB_SIDE + c] =
            image[(2 * r + a) * 28 + (2 * c + b)] / 255;
        }
      }
    }
  }
  return out;
}

/**
 * Split a whole dataset: returns one matrix per core, sample-major
 * (count x 196), ready for batched training.
 */
export function subsampleDataset(
    images: Uint8Array, count: number): Float32Array[] {
  if (images.length !== count * 784) {
    throw new Error(`expected ${count * 784} bytes, got ${images.length}`);
  }
  const cores: Float32Array[] = [];
  for (let k = 0; k < N_CORES; k++) {
    cores.push(new Float32Array(count * SUB_PIXELS));
  }
  for (let i = 0; i < count; i++) {
    const subs = interleaveSubsample(images.subarray(i * 784, (i + 1) * 784));
    for (let k = 0; k < N_CORES; k++) {
      cores[k].set(subs.subarray(k * SUB_PIXELS, (k + 1) * SUB_PIXELS),
                   i * SUB_PIXELS);
    }
  }
  return cores;
}
