import { describe, expect, it } from "vitest";

import { num, parseCsv, toRecords } from "../src/csv.js";

describe("parseCsv", () => {
  it("parses plain rows", () => {
    const t = parseCsv("a,b\n1,2\n3,4\n");
    expect(t.header).toEqual(["a", "b"]);
    expect(t.rows).toEqual([["1", "2"], ["3", "4"]]);
  });

  it("handles quotes, embedded commas and newlines", () => {
    const t = parseCsv('a,b\n"x,y","line\nbreak"\n"he said ""hi""",2\n');
    expect(t.rows[0]).toEqual(["x,y", "line\nbreak"]);
    expect(t.rows[1][0]).toBe('he said "hi"');
  });

  it("handles CRLF and missing trailing newline", () => {
    const t = parseCsv("a,b\r\n1,2\r\n3,4");
    expect(t.rows).toEqual([["1", "2"], ["3", "4"]]);
  });
});

describe("toRecords", () => {
  it("reports every missing column by name", () => {
    const t = parseCsv("a,b\n1,2\n");
    expect(() => toRecords(t, ["a", "mse", "ci_high"], "x.csv")).toThrow(
      /x\.csv: missing required column\(s\): mse, ci_high/,
    );
  });

  it("rejects empty data as an explicit no-data error", () => {
    expect(() => toRecords(parseCsv("a,b\n"), ["a"], "empty.csv")).toThrow(/no data/);
    expect(() => toRecords(parseCsv(""), ["a"], "empty.csv")).toThrow(/missing required/);
  });

  it("keys rows by header", () => {
    const rows = toRecords(parseCsv("a,b\n1,2\n"), ["a", "b"], "x.csv");
    expect(rows[0]).toEqual({ a: "1", b: "2" });
    expect(num(rows[0], "b", "x.csv")).toBe(2);
    expect(() => num({ a: "oops" }, "a", "x.csv")).toThrow(/non-numeric/);
  });
});
