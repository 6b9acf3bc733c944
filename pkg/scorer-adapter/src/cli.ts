#!/usr/bin/env node
/**
 * Launcher: `scorer-adapter --table fixtures.csv --stdio`
 *
 * Options:
 *   --table PATH     replay confidences from a fixture CSV
 *   --pmi-model PATH reimplement an exported PMI model file
 *   --echo           answer 0.5 everywhere (default when no wrapped model)
 *   --stdio          serve over stdin/stdout (default)
 *   --tcp PORT       serve over TCP on 127.0.0.1:PORT
 *   --name NAME      scorer name in the handshake
 *   --kind KIND      continuous (default) or discrete
 *   --levels L,L,..  served levels (default A,B,C; a PMI model serves its own)
 */

import { AdapterServer } from "./server";
import { EchoPredictor, Predictor, TablePredictor } from "./predictors";
import { PmiPredictor } from "./pmi";
import { Kind, Level, isLevel } from "./protocol";

interface CliOptions {
  table?: string;
  pmiModel?: string;
  echo: boolean;
  tcp?: number;
  name?: string;
  kind?: Kind;
  levels?: Level[];
}

function parseArgs(argv: string[]): CliOptions {
  const options: CliOptions = { echo: false };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case "--table":
        options.table = next();
        break;
      case "--pmi-model":
        options.pmiModel = next();
        break;
      case "--echo":
        options.echo = true;
        break;
      case "--stdio":
        break;
      case "--tcp":
        options.tcp = Number(next());
        if (!Number.isInteger(options.tcp)) throw new Error("--tcp needs a port number");
        break;
      case "--name":
        options.name = next();
        break;
      case "--kind": {
        const kind = next();
        if (kind !== "continuous" && kind !== "discrete") {
          throw new Error(`--kind must be continuous or discrete, got ${kind}`);
        }
        options.kind = kind;
        break;
      }
      case "--levels": {
        const levels = next().split(",").map((s) => s.trim());
        if (levels.length === 0 || !levels.every(isLevel)) {
          throw new Error(`--levels must name levels A, B, C; got ${levels}`);
        }
        options.levels = levels as Level[];
        break;
      }
      default:
        throw new Error(`unknown option ${arg}`);
    }
  }
  return options;
}

function main(): void {
  let options: CliOptions;
  try {
    options = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`scorer-adapter: ${String(err instanceof Error ? err.message : err)}\n`);
    process.exit(1);
  }

  let predictor: Predictor;
  let defaultName: string;
  let defaultKind: Kind = "continuous";
  let defaultLevels: Level[] = ["A", "B", "C"];
  try {
    if (options.table !== undefined) {
      predictor = TablePredictor.fromCsv(options.table);
      defaultName = "table";
    } else if (options.pmiModel !== undefined) {
      const pmi = PmiPredictor.fromFile(options.pmiModel);
      predictor = pmi;
      defaultName = "pmi-adapter";
      defaultKind = "discrete";
      defaultLevels = [pmi.level];
    } else {
      predictor = new EchoPredictor();
      defaultName = "echo";
    }
  } catch (err) {
    process.stderr.write(`scorer-adapter: ${String(err instanceof Error ? err.message : err)}\n`);
    process.exit(1);
  }

  const server = new AdapterServer({
    name: options.name ?? defaultName,
    kind: options.kind ?? defaultKind,
    levels: options.levels ?? defaultLevels,
    predictor,
  });

  if (options.tcp !== undefined) {
    const net = server.serveTcp(options.tcp);
    net.on("listening", () => {
      const addr = net.address();
      const port = addr !== null && typeof addr === "object" ? addr.port : options.tcp;
      process.stderr.write(`scorer-adapter: listening on 127.0.0.1:${port}\n`);
    });
    return;
  }
  server.attach(process.stdin, process.stdout, () => {
    if (predictor instanceof TablePredictor && predictor.misses > 0) {
      process.stderr.write(`scorer-adapter: ${predictor.misses} table miss(es)\n`);
    }
    process.exit(0);
  });
}

main();
