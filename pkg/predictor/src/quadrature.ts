/**
 * Independent evaluation of integral-equation term libraries.
 *
 * Fields live on uniform cell-center grids over the unit square, values
 * row-major (y outer, x inner); integrals are midpoint sums with uniform
 * weights 1/(nx*ny). This file deliberately reimplements the quadrature
 * from the published wire/file contracts rather than calling the fitting
 * library, so agreement between the two is a genuine conformance check.
 */

export type Task = "image_to_scalar" | "image_to_line" | "image_to_image";

export interface TermJson {
  family_index: number;
  lifting: string;
  kernel: string;
  outer: string;
  beta: number | null;
  bias: boolean;
  coeff_hex?: string;
  coeff?: number;
}

export interface NormJson {
  input_min: number;
  input_max: number;
  output_min: number;
  output_max: number;
  input_min_hex?: string;
  input_max_hex?: string;
  output_min_hex?: string;
  output_max_hex?: string;
}

export interface ModelJson {
  flm_version: number;
  task: Task;
  grid: { nx: number; ny: number };
  normalization: NormJson | null;
  provenance: string;
  solver: { indicator?: string };
  terms: TermJson[];
}

/** Parse a C99 hex float literal such as "0x1.5bf0a8b145769p+1". */
export function parseHexFloat(text: string): number {
  const m = /^([+-]?)0x([0-9a-f]+)(?:\.([0-9a-f]*))?p([+-]?\d+)$/i.exec(
    text.trim(),
  );
  if (!m) {
    throw new Error(`invalid hex float: ${text}`);
  }
  const sign = m[1] === "-" ? -1 : 1;
  const intPart = m[2];
  const frac = m[3] ?? "";
  const exp = parseInt(m[4], 10);
  const mantissa = BigInt(`0x${intPart}${frac || "0"}`);
  const fracBits = 4 * (frac ? frac.length : 1);
  // mantissa fits in 53 bits for doubles, so Number() is exact and the
  // power-of-two scaling cannot round
  return sign * Number(mantissa) * Math.pow(2, exp - fracBits);
}

export function termCoefficient(term: TermJson): number {
  if (term.coeff_hex) {
    return parseHexFloat(term.coeff_hex);
  }
  if (typeof term.coeff === "number") {
    return term.coeff;
  }
  throw new Error("term record lacks a coefficient");
}

export function normValue(
  norm: NormJson,
  key: "input_min" | "input_max" | "output_min" | "output_max",
): number {
  const hex = norm[`${key}_hex` as keyof NormJson];
  if (typeof hex === "string") {
    return parseHexFloat(hex);
  }
  return norm[key];
}

export function cellCenters(n: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = (i + 0.5) / n;
  }
  return out;
}

function liftValue(
  lifting: string,
  f: number,
  zeta: number,
  eta: number,
  beta: number | null,
): number {
  switch (lifting) {
    case "identity":
      return f;
    case "zeta":
      return zeta * f;
    case "eta":
      return eta * f;
    case "zeta2":
      return zeta * zeta * f;
    case "eta2":
      return eta * eta * f;
    case "zeta_eta":
      return zeta * eta * f;
    case "square":
      return f * f;
    case "tanh":
      return Math.tanh(f);
    case "exp":
      return Math.exp(f);
    case "exp_neg_over_beta":
      return Math.exp(-f / (beta as number));
    default:
      throw new Error(`unknown lifting tag ${lifting}`);
  }
}

function kernelValue(
  kernel: string,
  dx: number,
  dy: number,
  beta: number | null,
  indicatorLocal: boolean,
): number {
  switch (kernel) {
    case "unit":
      return 1.0;
    case "gaussian":
      return Math.exp(-(dx * dx + dy * dy) / (beta as number));
    case "exp_distance":
      return Math.exp(-Math.sqrt(dx * dx + dy * dy) / (beta as number));
    case "indicator_disk": {
      const scaled = (2.0 * Math.sqrt(dx * dx + dy * dy)) / (beta as number);
      const inside = scaled <= 1.0;
      return (indicatorLocal ? inside : !inside) ? 1.0 : 0.0;
    }
    case "sep_exp_x":
      return Math.exp(dx / (beta as number));
    case "sep_exp_y":
      return Math.exp(dy / (beta as number));
    default:
      throw new Error(`unknown kernel tag ${kernel}`);
  }
}

function applyOuter(outer: string, value: number): number {
  switch (outer) {
    case "identity":
      return value;
    case "square":
      return value * value;
    case "tanh":
      return Math.tanh(value);
    case "exp":
      return Math.exp(value);
    default:
      throw new Error(`unknown outer tag ${outer}`);
  }
}

/** Output collocation points for a request: scalar tasks evaluate at the
 * origin, line tasks along y=0, image tasks on the input grid. */
export function outPoints(
  task: Task,
  nx: number,
  ny: number,
  lineN?: number,
): { xs: Float64Array; ys: Float64Array } {
  if (task === "image_to_scalar") {
    return { xs: new Float64Array([0]), ys: new Float64Array([0]) };
  }
  if (task === "image_to_line") {
    const n = lineN ?? nx;
    return { xs: cellCenters(n), ys: new Float64Array(n) };
  }
  const cx = cellCenters(nx);
  const cy = cellCenters(ny);
  const xs = new Float64Array(nx * ny);
  const ys = new Float64Array(nx * ny);
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      xs[j * nx + i] = cx[i];
      ys[j * nx + i] = cy[j];
    }
  }
  return { xs, ys };
}

export function evalTerm(
  term: TermJson,
  indicatorLocal: boolean,
  input: Float64Array,
  nx: number,
  ny: number,
  xs: Float64Array,
  ys: Float64Array,
): Float64Array {
  const nOut = xs.length;
  const out = new Float64Array(nOut);
  if (term.bias) {
    out.fill(1.0);
    return out;
  }
  const size = nx * ny;
  const weight = 1.0 / size;
  const cx = cellCenters(nx);
  const cy = cellCenters(ny);
  if (term.kernel === "domain_average") {
    let sum = 0.0;
    let total = 0.0;
    for (let k = 0; k < size; k++) {
      sum += input[k] * weight;
      total += weight;
    }
    out.fill(applyOuter(term.outer, sum / total));
    return out;
  }
  if (term.kernel === "unit") {
    const sum = new CompensatedSum();
    for (let j = 0; j < ny; j++) {
      for (let i = 0; i < nx; i++) {
        sum.add(
          liftValue(term.lifting, input[j * nx + i], cx[i], cy[j], term.beta) *
            weight,
        );
      }
    }
    out.fill(applyOuter(term.outer, sum.value()));
    return out;
  }
  for (let p = 0; p < nOut; p++) {
    const sum = new CompensatedSum();
    const x = xs[p];
    const y = ys[p];
    for (let j = 0; j < ny; j++) {
      for (let i = 0; i < nx; i++) {
        const lifted = liftValue(
          term.lifting,
          input[j * nx + i],
          cx[i],
          cy[j],
          term.beta,
        );
        sum.add(
          kernelValue(term.kernel, x - cx[i], y - cy[j], term.beta, indicatorLocal) *
            lifted *
            weight,
        );
      }
    }
    out[p] = applyOuter(term.outer, sum.value());
  }
  return out;
}

/** Neumaier-compensated accumulation: keeps the quadrature sums accurate to
 * O(eps) instead of O(K*eps), which matters when large coefficients amplify
 * per-term rounding. */
class CompensatedSum {
  private s = 0.0;
  private c = 0.0;

  add(v: number): void {
    const t = this.s + v;
    if (Math.abs(this.s) >= Math.abs(v)) {
      this.c += this.s - t + v;
    } else {
      this.c += v - t + this.s;
    }
    this.s = t;
  }

  value(): number {
    return this.s + this.c;
  }
}

export function outputLength(task: Task, nx: number, ny: number, lineN?: number): number {
  if (task === "image_to_scalar") return 1;
  if (task === "image_to_line") return lineN ?? nx;
  return nx * ny;
}

/** Evaluate a full exported model on one raw input field. */
export function evalModel(
  model: ModelJson,
  input: Float64Array,
  nx: number,
  ny: number,
  lineN?: number,
): Float64Array {
  let f = input;
  let outScale = 1.0;
  let outShift = 0.0;
  if (model.normalization) {
    const imin = normValue(model.normalization, "input_min");
    const imax = normValue(model.normalization, "input_max");
    const omin = normValue(model.normalization, "output_min");
    const omax = normValue(model.normalization, "output_max");
    f = new Float64Array(input.length);
    for (let k = 0; k < input.length; k++) {
      f[k] = (input[k] - imin) / (imax - imin);
    }
    outScale = omax - omin;
    outShift = omin;
  }
  const indicatorLocal = (model.solver?.indicator ?? "local") === "local";
  const { xs, ys } = outPoints(model.task, nx, ny, lineN);
  const acc = new Float64Array(xs.length);
  for (const term of model.terms) {
    const coeff = termCoefficient(term);
    const vals = evalTerm(term, indicatorLocal, f, nx, ny, xs, ys);
    for (let p = 0; p < acc.length; p++) {
      acc[p] += coeff * vals[p];
    }
  }
  if (model.normalization) {
    for (let p = 0; p < acc.length; p++) {
      acc[p] = acc[p] * outScale + outShift;
    }
  }
  return acc;
}

export function loadModelJson(doc: unknown): ModelJson {
  const model = doc as ModelJson;
  if (!model || model.flm_version !== 1) {
    throw new Error("unsupported model schema version");
  }
  if (!Array.isArray(model.terms) || model.terms.length === 0) {
    throw new Error("model carries no terms");
  }
  return model;
}
