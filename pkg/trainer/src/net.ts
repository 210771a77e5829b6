/**
 * Binary-weight MLP (inputs -> hidden -> classes) trained with a
 * straight-through estimator: the forward pass uses sign-binarized
 * weights, gradients update full-resolution shadow weights, and shadows
 * are clipped to [-1, 1] so they stay near the flip point.  Activations
 * are not binarized (ReLU hidden, linear output).
 */
import { Rng } from "./rng";

export interface BatchStats {
  loss: number;
  correct: number;
}

export class BinaryMlp {
  readonly nIn: number;
  readonly nHidden: number;
  readonly nOut: number;

  /** Shadow first layer, TRANSPOSED: (nIn x nHidden), w1t[k*H + j]. */
  readonly w1t: Float64Array;
  /** Shadow second layer: (nOut x nHidden), w2[c*H + j]. */
  readonly w2: Float64Array;

  private readonly b1t: Float64Array;
  private readonly b2: Float64Array;
  private readonly m1: Float64Array;
  private readonly v1: Float64Array;
  private readonly m2: Float64Array;
  private readonly v2: Float64Array;
  private steps = 0;

  constructor(nIn: number, nHidden: number, nOut: number, rng: Rng) {
    this.nIn = nIn;
    this.nHidden = nHidden;
    this.nOut = nOut;
    this.w1t = new Float64Array(nIn * nHidden);
    this.w2 = new Float64Array(nOut * nHidden);
    for (let i = 0; i < this.w1t.length; i++) {
      this.w1t[i] = 0.1 * rng.normal();
    }
    for (let i = 0; i < this.w2.length; i++) {
      this.w2[i] = 0.1 * rng.normal();
    }
    this.b1t = new Float64Array(nIn * nHidden);
    this.b2 = new Float64Array(nOut * nHidden);
    this.m1 = new Float64Array(nIn * nHidden);
    this.v1 = new Float64Array(nIn * nHidden);
    this.m2 = new Float64Array(nOut * nHidden);
    this.v2 = new Float64Array(nOut * nHidden);
  }

  /** Refresh the binarized copies from the shadows (sign, ties to +1). */
  binarize(): void {
    for (let i = 0; i < this.w1t.length; i++) {
      this.b1t[i] = this.w1t[i] >= 0 ? 1 : -1;
    }
    for (let i = 0; i < this.w2.length; i++) {
      this.b2[i] = this.w2[i] >= 0 ? 1 : -1;
    }
  }

  /**
   * Forward one sample with the current binarized weights into the
   * caller's buffers; returns nothing.  `hidden` gets the post-ReLU
   * activations, `logits` the class scores.
   */
  forwardSample(x: Float32Array, xOff: number,
                hidden: Float64Array, logits: Float64Array): void {
    const { nIn, nHidden, nOut, b1t, b2 } = this;
    hidden.fill(0);
    for (let k = 0; k < nIn; k++) {
      const xv = x[xOff + k];
      if (xv === 0) {
        continue; // MNIST pixels are mostly background
      }
      const row = k * nHidden;
      for (let j = 0; j < nHidden; j++) {
        hidden[j] += xv * b1t[row + j];
      }
    }
    for (let j = 0; j < nHidden; j++) {
      if (hidden[j] < 0) {
        hidden[j] = 0;
      }
    }
    for (let c = 0; c < nOut; c++) {
      const row = c * nHidden;
      let acc = 0;
      for (let j = 0; j < nHidden; j++) {
        acc += hidden[j] * b2[row + j];
      }
      logits[c] = acc;
    }
  }

  /** Argmax class for one sample (ties to the lowest class index). */
  predict(x: Float32Array, xOff: number,
          hidden: Float64Array, logits: Float64Array): number {
    this.forwardSample(x, xOff, hidden, logits);
    let best = 0;
    for (let c = 1; c < this.nOut; c++) {
      if (logits[c] > logits[best]) {
        best = c;
      }
    }
    return best;
  }

  /**
   * One softmax cross-entropy minibatch: accumulate straight-through
   * gradients and take an Adam step on the shadows.  Returns the batch
   * loss and correct count under the binarized forward pass.
   */
  trainBatch(x: Float32Array, labels: Uint8Array, index: Int32Array,
             start: number, end: number, lr: number): BatchStats {
    const { nIn, nHidden, nOut, b1t, b2 } = this;
    const bsz = end - start;
    this.binarize();

    const g1t = new Float64Array(nIn * nHidden);
    const g2 = new Float64Array(nOut * nHidden);
    const hidden = new Float64Array(nHidden);
    const mask = new Uint8Array(nHidden);
    const logits = new Float64Array(nOut);
    const dl = new Float64Array(nOut);
    const dh = new Float64Array(nHidden);

    let loss = 0;
    let correct = 0;
    for (let s = start; s < end; s++) {
      const i = index[s];
      const xOff = i * nIn;
      const y = labels[i];

      hidden.fill(0);
      for (let k = 0; k < nIn; k++) {
        const xv = x[xOff + k];
        if (xv === 0) {
          continue;
        }
        const row = k * nHidden;
        for (let j = 0; j < nHidden; j++) {
          hidden[j] += xv * b1t[row + j];
        }
      }
      for (let j = 0; j < nHidden; j++) {
        mask[j] = hidden[j] > 0 ? 1 : 0;
        if (hidden[j] < 0) {
          hidden[j] = 0;
        }
      }
      let maxLogit = -Infinity;
      let argmax = 0;
      for (let c = 0; c < nOut; c++) {
        const row = c * nHidden;
        let acc = 0;
        for (let j = 0; j < nHidden; j++) {
          acc += hidden[j] * b2[row + j];
        }
        logits[c] = acc;
        if (acc > maxLogit) {
          maxLogit = acc;
          argmax = c;
        }
      }
      if (argmax === y) {
        correct++;
      }

      let denom = 0;
      for (let c = 0; c < nOut; c++) {
        dl[c] = Math.exp(logits[c] - maxLogit);
        denom += dl[c];
      }
      loss += -Math.log(dl[y] / denom + 1e-12);
      for (let c = 0; c < nOut; c++) {
        dl[c] = (dl[c] / denom - (c === y ? 1 : 0)) / bsz;
      }

      // g2 += dl^T h;  dh = (dl B2) * relu'(pre)
      dh.fill(0);
      for (let c = 0; c < nOut; c++) {
        const g = dl[c];
        if (g === 0) {
          continue;
        }
        const row = c * nHidden;
        for (let j = 0; j < nHidden; j++) {
          g2[row + j] += g * hidden[j];
          dh[j] += g * b2[row + j];
        }
      }
      for (let j = 0; j < nHidden; j++) {
        if (!mask[j]) {
          dh[j] = 0;
        }
      }
      // g1t += x dh (outer product, sparse in x)
      for (let k = 0; k < nIn; k++) {
        const xv = x[xOff + k];
        if (xv === 0) {
          continue;
        }
        const row = k * nHidden;
        for (let j = 0; j < nHidden; j++) {
          g1t[row + j] += xv * dh[j];
        }
      }
    }

    this.adamStep(g1t, g2, lr);
    return { loss: loss / bsz, correct };
  }

  private adamStep(g1t: Float64Array, g2: Float64Array, lr: number): void {
    const beta1 = 0.9;
    const beta2 = 0.999;
    const eps = 1e-8;
    this.steps++;
    const c1 = 1 - Math.pow(beta1, this.steps);
    const c2 = 1 - Math.pow(beta2, this.steps);
    const update = (w: Float64Array, g: Float64Array,
                    m: Float64Array, v: Float64Array) => {
      for (let i = 0; i < w.length; i++) {
        m[i] = beta1 * m[i] + (1 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
        let wi = w[i] - lr * (m[i] / c1) / (Math.sqrt(v[i] / c2) + eps);
        if (wi > 1) {
          wi = 1;  // keep shadows near the flip point
        } else if (wi < -1) {
          wi = -1;
        }
        w[i] = wi;
      }
    };
    update(this.w1t, g1t, this.m1, this.v1);
    update(this.w2, g2, this.m2, this.v2);
  }

  /**
   * Binarized weights in natural orientation: W1 as (nHidden x nIn),
   * W2 as (nOut x nHidden), both row-major in {-1, +1}.
   */
  binaryWeights(): { w1: Int8Array; w2: Int8Array } {
    const { nIn, nHidden, nOut } = this;
    const w1 = new Int8Array(nHidden * nIn);
    for (let k = 0; k < nIn; k++) {
      for (let j = 0; j < nHidden; j++) {
        w1[j * nIn + k] = this.w1t[k * nHidden + j] >= 0 ? 1 : -1;
      }
    }
    const w2 = new Int8Array(nOut * nHidden);
    for (let i = 0; i < w2.length; i++) {
      w2[i] = this.w2[i] >= 0 ? 1 : -1;
    }
    return { w1, w2 };
  }
}
