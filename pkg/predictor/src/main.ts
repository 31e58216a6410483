/**
 * Command-line entry: `serve --mode analytic --spec model.json`,
 * `serve --mode trained --weights w.bin`, and
 * `train --data d.flm --out w.bin [--epochs N --lr X --hidden 32,16 --seed S]`.
 */

import * as fs from "node:fs";
import { readFields } from "./flm1.js";
import { DEFAULT_TRAIN, loadWeights, predictNet, saveWeights, train } from "./nn.js";
import { serveLoop } from "./protocol.js";
import { evalModel, loadModelJson, outputLength } from "./quadrature.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed flag ${key}`);
    }
    out.set(key.slice(2), argv[i + 1]);
  }
  return out;
}

function need(args: Map<string, string>, key: string): string {
  const value = args.get(key);
  if (value === undefined) {
    throw new Error(`missing --${key}`);
  }
  return value;
}

function cmdServe(args: Map<string, string>): void {
  const mode = need(args, "mode");
  if (mode === "analytic") {
    const spec = need(args, "spec");
    const model = loadModelJson(JSON.parse(fs.readFileSync(spec, "utf-8")));
    serveLoop(model.task, (req) => {
      const input = Float64Array.from(req.input);
      return Array.from(evalModel(model, input, req.nx, req.ny));
    });
    return;
  }
  if (mode === "trained") {
    const weights = loadWeights(need(args, "weights"));
    serveLoop(weights.task, (req) => {
      if (req.nx !== weights.nx || req.ny !== weights.ny) {
        throw new Error(
          `model was trained on ${weights.nx}x${weights.ny} inputs, ` +
            `request is ${req.nx}x${req.ny}`,
        );
      }
      return Array.from(predictNet(weights, Float64Array.from(req.input)));
    });
    return;
  }
  throw new Error(`unknown serve mode ${mode}`);
}

function cmdTrain(args: Map<string, string>): void {
  const data = readFields(need(args, "data"));
  const outPath = need(args, "out");
  const options = {
    hidden: (args.get("hidden") ?? DEFAULT_TRAIN.hidden.join(","))
      .split(",")
      .map((s) => parseInt(s, 10)),
    epochs: parseInt(args.get("epochs") ?? String(DEFAULT_TRAIN.epochs), 10),
    learningRate: parseFloat(args.get("lr") ?? String(DEFAULT_TRAIN.learningRate)),
    seed: parseInt(args.get("seed") ?? String(DEFAULT_TRAIN.seed), 10),
  };
  const weights = train(data, options);
  saveWeights(outPath, weights);
  process.stdout.write(
    JSON.stringify({
      command: "train",
      out: outPath,
      q: data.q,
      task: data.task,
      train_mae: weights.trainMae,
      epochs: options.epochs,
      seed: options.seed,
    }) + "\n",
  );
}

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const args = parseArgs(rest);
    if (command === "serve") {
      cmdServe(args);
    } else if (command === "train") {
      cmdTrain(args);
    } else {
      throw new Error("usage: main.js serve|train --flag value ...");
    }
  } catch (err) {
    process.stderr.write(`error: ${String(err)}\n`);
    process.exit(2);
  }
}

main();
