/**
 * Line-delimited JSON scoring protocol.
 *
 * The adapter speaks first with a hello frame declaring its name, kind, and
 * served levels with their exact class sets. Each request frame carries a
 * req_id, a level, and a batch of texts; the matching response carries one
 * confidence map per text, in order. Anything unanswerable produces an
 * error frame instead, and the process stays alive.
 */

export type Level = "A" | "B" | "C";

export const LEVEL_CLASSES: Record<Level, readonly string[]> = {
  A: ["OFF", "NOT"],
  B: ["TIN", "UNT"],
  C: ["IND", "GRP", "OTH"],
};

export type Kind = "continuous" | "discrete";

export type Confidences = Record<string, number>;

export interface HelloFrame {
  hello: {
    name: string;
    kind: Kind;
    levels: Record<string, readonly string[]>;
  };
}

export interface ScoreRequest {
  req_id: number;
  level: Level;
  texts: string[];
}

export interface ScoreResponse {
  req_id: number;
  confidences: Confidences[];
}

export interface ErrorResponse {
  req_id: number | null;
  error: string;
}

export function isLevel(value: unknown): value is Level {
  return value === "A" || value === "B" || value === "C";
}

/**
 * Clamp negatives to zero and rescale onto the level's class set so the
 * values sum to 1. A degenerate all-zero map becomes uniform.
 */
export function renormalize(raw: Confidences, classes: readonly string[]): Confidences {
  const clipped = classes.map((c) => {
    const v = Number(raw[c]);
    return Number.isFinite(v) && v > 0 ? v : 0;
  });
  const total = clipped.reduce((a, b) => a + b, 0);
  const out: Confidences = {};
  classes.forEach((c, i) => {
    out[c] = total > 0 ? clipped[i] / total : 1 / classes.length;
  });
  return out;
}
