/**
 * Probe protocol v1 server framing: newline-delimited JSON over the
 * standard streams. The banner announces {protocol, version, task}; each
 * request line carries {id, nx, ny, input}; the reply is {id, output}.
 * A malformed line yields {"id": null, "error": ...} and the server keeps
 * running. Closing stdin shuts the server down with exit code 0.
 */

import * as readline from "node:readline";
import type { Task } from "./quadrature.js";

export const PROTOCOL = "flm-probe";
export const VERSION = 1;

export interface Request {
  id: number;
  nx: number;
  ny: number;
  input: number[];
}

export type Responder = (req: Request) => number[];

function emit(obj: unknown): void {
  process.stdout.write(JSON.stringify(obj) + "\n");
}

export function serveLoop(task: Task, respond: Responder): void {
  emit({ protocol: PROTOCOL, version: VERSION, task });
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line: string) => {
    if (line.trim() === "") {
      return;
    }
    let req: Request;
    try {
      req = JSON.parse(line) as Request;
    } catch (err) {
      emit({ id: null, error: `malformed request line: ${String(err)}` });
      return;
    }
    try {
      if (
        typeof req.id !== "number" ||
        typeof req.nx !== "number" ||
        typeof req.ny !== "number" ||
        !Array.isArray(req.input)
      ) {
        throw new Error("request needs id, nx, ny, and input fields");
      }
      if (req.input.length !== req.nx * req.ny) {
        throw new Error(
          `input holds ${req.input.length} values, nx*ny is ${req.nx * req.ny}`,
        );
      }
      const output = respond(req);
      emit({ id: req.id, output });
    } catch (err) {
      emit({ id: req.id ?? null, error: String(err) });
    }
  });
  rl.on("close", () => {
    process.exit(0);
  });
}
