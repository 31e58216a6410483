/**
 * A deliberately small fully connected network: tanh hidden layers, linear
 * output, full-batch Adam on min-max normalized data. Single-threaded and
 * seeded, so training is deterministic. Its job is to exercise the
 * NN-driven interpretation loop, not to chase accuracy records.
 */

import * as fs from "node:fs";
import type { FieldData } from "./flm1.js";
import type { Task } from "./quadrature.js";

export interface TrainOptions {
  hidden: number[];
  epochs: number;
  learningRate: number;
  seed: number;
}

export const DEFAULT_TRAIN: TrainOptions = {
  hidden: [32],
  epochs: 2000,
  learningRate: 0.01,
  seed: 1,
};

export interface Weights {
  task: Task;
  nx: number;
  ny: number;
  outN: number;
  layers: { rows: number; cols: number; w: number[]; b: number[] }[];
  norm: {
    inputMin: number;
    inputMax: number;
    outputMin: number;
    outputMax: number;
  };
  trainMae: number;
  options: TrainOptions;
}

/** mulberry32: tiny deterministic PRNG, uniform in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

interface Layer {
  rows: number; // outputs
  cols: number; // inputs
  w: Float64Array; // rows x cols
  b: Float64Array;
}

function initLayers(sizes: number[], rand: () => number): Layer[] {
  const layers: Layer[] = [];
  for (let l = 0; l + 1 < sizes.length; l++) {
    const cols = sizes[l];
    const rows = sizes[l + 1];
    const scale = Math.sqrt(6.0 / (rows + cols));
    const w = new Float64Array(rows * cols);
    for (let k = 0; k < w.length; k++) {
      w[k] = (2.0 * rand() - 1.0) * scale;
    }
    layers.push({ rows, cols, w, b: new Float64Array(rows) });
  }
  return layers;
}

function forward(
  layers: Layer[],
  x: Float64Array,
  activations: Float64Array[],
): Float64Array {
  let cur = x;
  activations[0] = cur;
  for (let l = 0; l < layers.length; l++) {
    const { rows, cols, w, b } = layers[l];
    const next = new Float64Array(rows);
    for (let r = 0; r < rows; r++) {
      let sum = b[r];
      const off = r * cols;
      for (let c = 0; c < cols; c++) {
        sum += w[off + c] * cur[c];
      }
      next[r] = l + 1 < layers.length ? Math.tanh(sum) : sum;
    }
    cur = next;
    activations[l + 1] = cur;
  }
  return cur;
}

export function predictNet(weights: Weights, rawInput: Float64Array): Float64Array {
  const { inputMin, inputMax, outputMin, outputMax } = weights.norm;
  const x = new Float64Array(rawInput.length);
  for (let k = 0; k < x.length; k++) {
    x[k] = (rawInput[k] - inputMin) / (inputMax - inputMin);
  }
  const layers: Layer[] = weights.layers.map((l) => ({
    rows: l.rows,
    cols: l.cols,
    w: Float64Array.from(l.w),
    b: Float64Array.from(l.b),
  }));
  const acts: Float64Array[] = new Array(layers.length + 1);
  const y = forward(layers, x, acts);
  const out = new Float64Array(y.length);
  for (let k = 0; k < y.length; k++) {
    out[k] = y[k] * (outputMax - outputMin) + outputMin;
  }
  return out;
}

export function train(data: FieldData, options: TrainOptions): Weights {
  const size = data.nx * data.ny;
  let inputMin = Infinity;
  let inputMax = -Infinity;
  let outputMin = Infinity;
  let outputMax = -Infinity;
  for (const row of data.inputs) {
    for (const v of row) {
      if (v < inputMin) inputMin = v;
      if (v > inputMax) inputMax = v;
    }
  }
  for (const row of data.outputs) {
    for (const v of row) {
      if (v < outputMin) outputMin = v;
      if (v > outputMax) outputMax = v;
    }
  }
  if (!(inputMax > inputMin) || !(outputMax > outputMin)) {
    throw new Error("degenerate dataset statistics: max must exceed min");
  }
  const X = data.inputs.map((row) => {
    const x = new Float64Array(size);
    for (let k = 0; k < size; k++) {
      x[k] = (row[k] - inputMin) / (inputMax - inputMin);
    }
    return x;
  });
  const Y = data.outputs.map((row) => {
    const y = new Float64Array(data.outN);
    for (let k = 0; k < data.outN; k++) {
      y[k] = (row[k] - outputMin) / (outputMax - outputMin);
    }
    return y;
  });

  const sizes = [size, ...options.hidden, data.outN];
  const rand = mulberry32(options.seed);
  const layers = initLayers(sizes, rand);

  // Adam state
  const mW = layers.map((l) => new Float64Array(l.w.length));
  const vW = layers.map((l) => new Float64Array(l.w.length));
  const mB = layers.map((l) => new Float64Array(l.b.length));
  const vB = layers.map((l) => new Float64Array(l.b.length));
  const beta1 = 0.9;
  const beta2 = 0.999;
  const eps = 1e-8;

  const q = data.q;
  const acts: Float64Array[] = new Array(layers.length + 1);
  for (let epoch = 1; epoch <= options.epochs; epoch++) {
    const gradW = layers.map((l) => new Float64Array(l.w.length));
    const gradB = layers.map((l) => new Float64Array(l.b.length));
    for (let s = 0; s < q; s++) {
      const y = forward(layers, X[s], acts);
      // d(MSE)/dy, averaged over samples and output nodes
      let delta = new Float64Array(y.length);
      for (let k = 0; k < y.length; k++) {
        delta[k] = (2.0 * (y[k] - Y[s][k])) / (q * y.length);
      }
      for (let l = layers.length - 1; l >= 0; l--) {
        const { rows, cols, w } = layers[l];
        const below = acts[l];
        const gW = gradW[l];
        const gB = gradB[l];
        const nextDelta = new Float64Array(cols);
        for (let r = 0; r < rows; r++) {
          const d = delta[r];
          const off = r * cols;
          gB[r] += d;
          for (let c = 0; c < cols; c++) {
            gW[off + c] += d * below[c];
            nextDelta[c] += d * w[off + c];
          }
        }
        if (l > 0) {
          // back through tanh of the layer below
          const act = acts[l];
          for (let c = 0; c < cols; c++) {
            nextDelta[c] *= 1.0 - act[c] * act[c];
          }
        }
        delta = nextDelta;
      }
    }
    const corr1 = 1.0 - Math.pow(beta1, epoch);
    const corr2 = 1.0 - Math.pow(beta2, epoch);
    for (let l = 0; l < layers.length; l++) {
      const { w, b } = layers[l];
      for (let k = 0; k < w.length; k++) {
        mW[l][k] = beta1 * mW[l][k] + (1 - beta1) * gradW[l][k];
        vW[l][k] = beta2 * vW[l][k] + (1 - beta2) * gradW[l][k] * gradW[l][k];
        w[k] -=
          (options.learningRate * (mW[l][k] / corr1)) /
          (Math.sqrt(vW[l][k] / corr2) + eps);
      }
      for (let k = 0; k < b.length; k++) {
        mB[l][k] = beta1 * mB[l][k] + (1 - beta1) * gradB[l][k];
        vB[l][k] = beta2 * vB[l][k] + (1 - beta2) * gradB[l][k] * gradB[l][k];
        b[k] -=
          (options.learningRate * (mB[l][k] / corr1)) /
          (Math.sqrt(vB[l][k] / corr2) + eps);
      }
    }
  }

  let maeSum = 0.0;
  let count = 0;
  for (let s = 0; s < q; s++) {
    const y = forward(layers, X[s], acts);
    for (let k = 0; k < y.length; k++) {
      maeSum += Math.abs(y[k] - Y[s][k]);
      count += 1;
    }
  }
  return {
    task: data.task,
    nx: data.nx,
    ny: data.ny,
    outN: data.outN,
    layers: layers.map((l) => ({
      rows: l.rows,
      cols: l.cols,
      w: Array.from(l.w),
      b: Array.from(l.b),
    })),
    norm: { inputMin, inputMax, outputMin, outputMax },
    trainMae: maeSum / count,
    options,
  };
}

export function saveWeights(path: string, weights: Weights): void {
  fs.writeFileSync(path, JSON.stringify(weights) + "\n");
}

export function loadWeights(path: string): Weights {
  const doc = JSON.parse(fs.readFileSync(path, "utf-8")) as Weights;
  if (!doc || !Array.isArray(doc.layers) || !doc.norm) {
    throw new Error(`${path}: not a weights file`);
  }
  return doc;
}
