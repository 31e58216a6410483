/**
 * Reader/writer for the FLM1 field container (little-endian): magic "FLM1",
 * u32 version=1, u32 task code, u32 Q, u32 nx, u32 ny, u32 out_n, then Q
 * records of nx*ny input f64s followed by out_n output f64s.
 */

import * as fs from "node:fs";
import type { Task } from "./quadrature.js";

const MAGIC = "FLM1";
const HEADER_BYTES = 28;

const TASK_CODES: Record<number, Task> = {
  0: "image_to_scalar",
  1: "image_to_line",
  2: "image_to_image",
};

export interface FieldData {
  task: Task;
  q: number;
  nx: number;
  ny: number;
  outN: number;
  inputs: Float64Array[]; // q arrays of nx*ny
  outputs: Float64Array[]; // q arrays of outN
}

export function readFields(path: string): FieldData {
  const blob = fs.readFileSync(path);
  if (blob.length < HEADER_BYTES) {
    throw new Error(`${path}: shorter than the header`);
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  const magic = blob.subarray(0, 4).toString("ascii");
  if (magic !== MAGIC) {
    throw new Error(`${path}: bad magic ${magic}`);
  }
  const version = view.getUint32(4, true);
  if (version !== 1) {
    throw new Error(`${path}: unsupported version ${version}`);
  }
  const code = view.getUint32(8, true);
  const task = TASK_CODES[code];
  if (!task) {
    throw new Error(`${path}: unknown task code ${code}`);
  }
  const q = view.getUint32(12, true);
  const nx = view.getUint32(16, true);
  const ny = view.getUint32(20, true);
  const outN = view.getUint32(24, true);
  const recordLen = nx * ny + outN;
  const need = HEADER_BYTES + q * recordLen * 8;
  if (blob.length !== need) {
    throw new Error(`${path}: payload holds ${blob.length} bytes, need ${need}`);
  }
  const inputs: Float64Array[] = [];
  const outputs: Float64Array[] = [];
  for (let s = 0; s < q; s++) {
    const base = HEADER_BYTES + s * recordLen * 8;
    const input = new Float64Array(nx * ny);
    for (let k = 0; k < nx * ny; k++) {
      input[k] = view.getFloat64(base + k * 8, true);
    }
    const output = new Float64Array(outN);
    for (let k = 0; k < outN; k++) {
      output[k] = view.getFloat64(base + (nx * ny + k) * 8, true);
    }
    inputs.push(input);
    outputs.push(output);
  }
  return { task, q, nx, ny, outN, inputs, outputs };
}

export function writeFields(path: string, data: FieldData): void {
  const recordLen = data.nx * data.ny + data.outN;
  const buf = Buffer.alloc(HEADER_BYTES + data.q * recordLen * 8);
  buf.write(MAGIC, 0, "ascii");
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  view.setUint32(4, 1, true);
  const code = Object.entries(TASK_CODES).find(([, t]) => t === data.task);
  view.setUint32(8, Number(code![0]), true);
  view.setUint32(12, data.q, true);
  view.setUint32(16, data.nx, true);
  view.setUint32(20, data.ny, true);
  view.setUint32(24, data.outN, true);
  for (let s = 0; s < data.q; s++) {
    const base = HEADER_BYTES + s * recordLen * 8;
    data.inputs[s].forEach((v, k) => view.setFloat64(base + k * 8, v, true));
    data.outputs[s].forEach((v, k) =>
      view.setFloat64(base + (data.nx * data.ny + k) * 8, v, true),
    );
  }
  fs.writeFileSync(path, buf);
}
