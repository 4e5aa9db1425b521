#!/usr/bin/env node
/**
 * External reward evaluator speaking the line-delimited JSON wire protocol
 * (docs/protocol.md in the repository root): init / eval / shutdown over
 * stdin/stdout, exactly one reply line per request, shutdown ends the
 * session silently.
 *
 * Usage:
 *   node dist/bridge.js --model clf.json --val val.bin \
 *       --height 16 --width 16 --channels 1 --classes 4
 */

import * as readline from "readline";

import { DenseClassifier } from "./model";
import { Evaluator } from "./evaluator";
import { loadRecords } from "./records";

const PROTOCOL_VERSION = 1;

interface Args {
  model: string;
  val: string;
  height: number;
  width: number;
  channels: number;
  classes: number;
}

function parseArgs(argv: string[]): Args {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`bad argument pair: ${key} ${value}`);
    }
    out[key.slice(2)] = value;
  }
  for (const req of ["model", "val", "height", "width", "channels", "classes"]) {
    if (!(req in out)) throw new Error(`missing --${req}`);
  }
  return {
    model: out.model,
    val: out.val,
    height: Number(out.height),
    width: Number(out.width),
    channels: Number(out.channels),
    classes: Number(out.classes),
  };
}

function main(): void {
  let evaluator: Evaluator;
  try {
    const args = parseArgs(process.argv.slice(2));
    // checkpoint and data must load before any init reply
    const model = DenseClassifier.load(args.model);
    const val = loadRecords(args.val, args.height, args.width, args.channels,
                            args.classes);
    evaluator = new Evaluator(model, val);
  } catch (err) {
    process.stderr.write(`bridge startup failed: ${err}\n`);
    process.exit(1);
  }

  let ready = false;
  const reply = (obj: unknown) => {
    process.stdout.write(JSON.stringify(obj) + "\n");
  };

  const rl = readline.createInterface({ input: process.stdin });
  rl.on("line", (raw: string) => {
    const line = raw.trim();
    if (!line) return;
    let msg: any;
    try {
      msg = JSON.parse(line);
    } catch {
      reply({ error: "malformed json" });
      return;
    }
    switch (msg.cmd) {
      case "init": {
        if (msg.num_labels !== undefined
            && Number(msg.num_labels) !== evaluator.numLabels) {
          reply({ error: `init num_labels ${msg.num_labels} != validation `
                        + `classes ${evaluator.numLabels}` });
          return;
        }
        ready = true;
        reply({ ok: true, protocol_version: PROTOCOL_VERSION });
        return;
      }
      case "eval": {
        if (!ready) {
          reply({ error: "eval before init" });
          return;
        }
        try {
          const triple = (msg.triple as unknown[]).map(Number);
          const seed = Number(msg.seed);
          const reward = msg.scope === "dataset"
            ? evaluator.datasetReward(triple, seed)
            : evaluator.labelReward(triple, Number(msg.label), seed);
          reply({ reward });
        } catch (err) {
          reply({ error: String(err) });
        }
        return;
      }
      case "shutdown":
        rl.close();
        process.exit(0);
      default:
        reply({ error: `unknown cmd ${JSON.stringify(msg.cmd)}` });
    }
  });
  rl.on("close", () => process.exit(0));
}

main();
