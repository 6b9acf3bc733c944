import { readFileSync } from "node:fs";

import { Confidences, LEVEL_CLASSES, Level } from "./protocol";
import { Predictor } from "./predictors";

/**
 * Independent reimplementation of the PMI scorer over an exported model
 * file, proving that out-of-process predictors can reproduce in-process
 * ones exactly. Tokenization mirrors the pipeline's rules: lowercase,
 * whitespace split, word-character runs kept whole, every other character
 * its own token, the literal `@USER` preserved.
 */

const WORDISH = /[\p{L}\p{N}_]+/gu;
const NGRAM_SEP = "▁";

export function tokenize(text: string): string[] {
  const tokens: string[] = [];
  for (const chunk of text.split(/\s+/u)) {
    if (chunk.length === 0) continue;
    if (chunk === "@USER") {
      tokens.push(chunk);
      continue;
    }
    const lower = chunk.toLowerCase();
    let pos = 0;
    for (const match of lower.matchAll(WORDISH)) {
      for (const ch of lower.slice(pos, match.index)) tokens.push(ch);
      tokens.push(match[0]);
      pos = (match.index ?? 0) + match[0].length;
    }
    for (const ch of lower.slice(pos)) tokens.push(ch);
  }
  return tokens;
}

function ngramCounts(tokens: string[], orders: number[]): Map<string, number> {
  const grams = new Map<string, number>();
  for (const n of orders) {
    for (let i = 0; i + n <= tokens.length; i += 1) {
      const key = tokens.slice(i, i + n).join(NGRAM_SEP);
      grams.set(key, (grams.get(key) ?? 0) + 1);
    }
  }
  return grams;
}

function softmax(scores: number[], temperature: number): number[] {
  const scaled = scores.map((s) => s / temperature);
  if (scaled.some((s) => s === Infinity)) {
    const share = 1 / scaled.filter((s) => s === Infinity).length;
    return scaled.map((s) => (s === Infinity ? share : 0));
  }
  const top = Math.max(...scaled);
  if (top === -Infinity) return scaled.map(() => 1 / scaled.length);
  const exps = scaled.map((s) => Math.exp(s - top));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total);
}

interface PmiModelDoc {
  magic: string;
  version: number;
  kind: string;
  level: Level;
  config: { orders: number[]; temperature: number };
  tables: {
    scores: Record<string, Record<string, [number, number]>>;
    fallback_class: string;
  };
}

export class PmiPredictor implements Predictor {
  readonly level: Level;

  private scores: Record<string, Record<string, [number, number]>>;

  private orders: number[];

  private temperature: number;

  private constructor(doc: PmiModelDoc) {
    this.level = doc.level;
    this.scores = doc.tables.scores;
    this.orders = doc.config.orders;
    this.temperature = doc.config.temperature;
  }

  static fromFile(path: string): PmiPredictor {
    // Models serialized with zero smoothing may carry bare Infinity tokens;
    // n-gram keys are lowercased so the replacement cannot touch data.
    const raw = readFileSync(path, "utf8")
      .replace(/\bInfinity\b/g, "1e999");
    let doc: PmiModelDoc;
    try {
      doc = JSON.parse(raw) as PmiModelDoc;
    } catch (err) {
      throw new Error(`unreadable model file ${path}: ${String(err)}`);
    }
    if (doc.magic !== "democo-model") throw new Error(`${path}: bad magic`);
    if (doc.version !== 1) throw new Error(`${path}: unsupported version ${doc.version}`);
    if (doc.kind !== "pmi") throw new Error(`${path}: not a pmi model (${doc.kind})`);
    return new PmiPredictor(doc);
  }

  predict(text: string, level: Level): Confidences {
    if (level !== this.level) {
      throw new Error(`model scores level ${this.level}, not ${level}`);
    }
    const classes = LEVEL_CLASSES[this.level];
    const sums = classes.map(() => 0);
    for (const [gram, count] of ngramCounts(tokenize(text), this.orders)) {
      const perClass = this.scores[gram];
      if (perClass === undefined) continue;
      classes.forEach((cls, i) => {
        const [pmi, pmiSo] = perClass[cls];
        sums[i] += count * (pmi + pmiSo);
      });
    }
    const probs = softmax(sums, this.temperature);
    const out: Confidences = {};
    classes.forEach((cls, i) => {
      out[cls] = probs[i];
    });
    return out;
  }
}
