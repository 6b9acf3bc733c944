import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { EchoPredictor, TablePredictor, textHash } from "../src/predictors";
import { renormalize } from "../src/protocol";

function writeCsv(content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "adapter-"));
  const path = join(dir, "table.csv");
  writeFileSync(path, content);
  return path;
}

describe("EchoPredictor", () => {
  it("answers 0.5 for every class at every level", () => {
    const echo = new EchoPredictor();
    expect(echo.predict("anything", "A")).toEqual({ OFF: 0.5, NOT: 0.5 });
    expect(echo.predict("anything", "C")).toEqual({ IND: 0.5, GRP: 0.5, OTH: 0.5 });
  });
});

describe("TablePredictor", () => {
  const text = "he fucking kills me";
  const hash = textHash(text);

  it("replays fixture confidences by text hash", () => {
    const path = writeCsv(
      "hash,level,label,confidence\n" +
        `${hash},A,OFF,0.919\n` +
        `${hash},A,NOT,0.081\n`,
    );
    const predictor = TablePredictor.fromCsv(path);
    expect(predictor.predict(text, "A")).toEqual({ OFF: 0.919, NOT: 0.081 });
    expect(predictor.misses).toBe(0);
  });

  it("falls back to uniform and counts misses", () => {
    const predictor = TablePredictor.fromCsv(writeCsv("hash,level,label,confidence\n"));
    expect(predictor.predict("unknown text", "A")).toEqual({ OFF: 0.5, NOT: 0.5 });
    expect(predictor.predict("another", "C").IND).toBeCloseTo(1 / 3, 12);
    expect(predictor.misses).toBe(2);
  });

  it("rejects a malformed CSV at startup", () => {
    expect(() => TablePredictor.fromCsv(writeCsv("nope\n"))).toThrow(/must start/);
    expect(() =>
      TablePredictor.fromCsv(writeCsv("hash,level,label,confidence\na,b,c\n")),
    ).toThrow(/4 columns/);
    expect(() =>
      TablePredictor.fromCsv(writeCsv("hash,level,label,confidence\na,A,OFF,wat\n")),
    ).toThrow(/bad confidence/);
  });
});

describe("renormalize", () => {
  it("scales onto the class set summing to 1", () => {
    const out = renormalize({ OFF: 2, NOT: 6 }, ["OFF", "NOT"]);
    expect(out.OFF + out.NOT).toBeCloseTo(1, 12);
    expect(out.OFF).toBeCloseTo(0.25, 12);
  });

  it("clamps negatives and junk to zero", () => {
    const out = renormalize({ OFF: -1, NOT: 1, EXTRA: 9 }, ["OFF", "NOT"]);
    expect(out).toEqual({ OFF: 0, NOT: 1 });
  });

  it("turns an all-zero map into uniform", () => {
    const out = renormalize({}, ["IND", "GRP", "OTH"]);
    expect(out.IND).toBeCloseTo(1 / 3, 12);
    expect(out.IND + out.GRP + out.OTH).toBeCloseTo(1, 12);
  });

  it("sums to 1 within 1e-9 on random inputs", () => {
    let seed = 42;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let i = 0; i < 1000; i += 1) {
      const out = renormalize({ OFF: rand() * 5, NOT: rand() * 5 }, ["OFF", "NOT"]);
      expect(Math.abs(out.OFF + out.NOT - 1)).toBeLessThan(1e-9);
    }
  });
});
