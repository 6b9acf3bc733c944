import { createInterface } from "node:readline";
import { createServer, Server } from "node:net";
import { Readable, Writable } from "node:stream";

import {
  ErrorResponse,
  HelloFrame,
  Kind,
  LEVEL_CLASSES,
  Level,
  ScoreResponse,
  isLevel,
  renormalize,
} from "./protocol";
import { Predictor } from "./predictors";

export interface AdapterConfig {
  name: string;
  kind: Kind;
  levels: Level[];
  predictor: Predictor;
}

/**
 * Serves one predictor over the line-JSON protocol.
 *
 * The request loop never throws: malformed frames and predictor failures
 * turn into error responses so a misbehaving peer cannot take the process
 * down. Each attached stream gets its own handshake.
 */
export class AdapterServer {
  constructor(private config: AdapterConfig) {
    if (config.levels.length === 0) {
      throw new Error("adapter must serve at least one level");
    }
    for (const level of config.levels) {
      if (!isLevel(level)) throw new Error(`unknown level ${level}`);
    }
  }

  helloFrame(): HelloFrame {
    const levels: Record<string, readonly string[]> = {};
    for (const level of this.config.levels) {
      levels[level] = LEVEL_CLASSES[level];
    }
    return {
      hello: { name: this.config.name, kind: this.config.kind, levels },
    };
  }

  /** One request line in, one response line out (without the newline). */
  handleLine(line: string): string {
    return JSON.stringify(this.handleFrame(line));
  }

  private handleFrame(line: string): ScoreResponse | ErrorResponse {
    let frame: unknown;
    try {
      frame = JSON.parse(line);
    } catch {
      return { req_id: null, error: "invalid JSON frame" };
    }
    if (typeof frame !== "object" || frame === null || Array.isArray(frame)) {
      return { req_id: null, error: "frame must be a JSON object" };
    }
    const req = frame as Record<string, unknown>;
    const reqId = req.req_id;
    if (typeof reqId !== "number" || !Number.isInteger(reqId)) {
      return { req_id: null, error: "missing or non-integer req_id" };
    }
    if (!isLevel(req.level)) {
      return { req_id: reqId, error: `unknown level ${JSON.stringify(req.level)}` };
    }
    if (!this.config.levels.includes(req.level)) {
      return { req_id: reqId, error: `level ${req.level} not served` };
    }
    const texts = req.texts;
    if (!Array.isArray(texts) || texts.some((t) => typeof t !== "string")) {
      return { req_id: reqId, error: "texts must be an array of strings" };
    }
    const classes = LEVEL_CLASSES[req.level];
    const confidences = [];
    for (const text of texts as string[]) {
      try {
        confidences.push(renormalize(this.config.predictor.predict(text, req.level), classes));
      } catch (err) {
        return { req_id: reqId, error: `predictor failed: ${String(err)}` };
      }
    }
    return { req_id: reqId, confidences };
  }

  /** Handshake plus request loop over a stream pair (e.g. stdin/stdout). */
  attach(input: Readable, output: Writable, onClose?: () => void): void {
    output.write(JSON.stringify(this.helloFrame()) + "\n");
    const lines = createInterface({ input, crlfDelay: Infinity });
    lines.on("line", (line) => {
      if (line.trim().length === 0) return;
      output.write(this.handleLine(line) + "\n");
    });
    if (onClose) lines.on("close", onClose);
  }

  /** One handshake per TCP connection; connections are independent. */
  serveTcp(port: number, host = "127.0.0.1"): Server {
    const server = createServer((socket) => {
      socket.on("error", () => socket.destroy());
      this.attach(socket, socket);
    });
    server.listen(port, host);
    return server;
  }
}
