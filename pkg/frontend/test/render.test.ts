import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { validateSpec } from "../src/figure.js";
import { render, renderPsiCompare, renderSweep } from "../src/render.js";

const fixture = (name: string) =>
  readFileSync(join(__dirname, "fixtures", name), "utf8");

const spec = (kind: any, over: Partial<Record<string, any>> = {}) => ({
  csvPaths: ["fixture.csv"],
  kind,
  outPath: "out.svg",
  xScale: "linear" as const,
  yScale: "linear" as const,
  ...over,
});

describe("validateSpec", () => {
  it("rejects unknown kinds and empty inputs", () => {
    expect(() => validateSpec(spec("pie_chart"))).toThrow(/unknown figure kind/);
    expect(() => validateSpec(spec("sweep", { csvPaths: [] }))).toThrow(/--csv/);
    expect(() => validateSpec(spec("sweep", { outPath: "" }))).toThrow(/--out/);
    expect(() => validateSpec(spec("sweep", { yScale: "sqrt" }))).toThrow(/linear or log/);
  });
});

describe("renderers", () => {
  it("bound_overlay emits one band, mse, and bound series per k", () => {
    const svg = render(spec("bound_overlay"), [fixture("audit.csv")]);
    for (const k of [0, 1, 2, 3]) {
      expect(svg).toContain(`data-series="ci-k${k}"`);
      expect(svg).toContain(`data-series="mse-k${k}"`);
      expect(svg).toContain(`data-series="bound-k${k}"`);
    }
    expect(svg.startsWith("<svg")).toBe(true);
  });

  it("sweep orders values and plots kappa plus rhs_total", () => {
    const svg = render(spec("sweep"), [fixture("sweep.csv")]);
    expect(svg).toContain('data-series="kappa"');
    expect(svg).toContain('data-series="rhs_total"');
    expect(svg).toContain("sweep of eta");
  });

  it("psi_compare plots one series per strategy", () => {
    const svg = render(spec("psi_compare"), [fixture("bounds.csv")]);
    for (const strategy of ["quadrature", "monte_carlo", "loose_first_term",
                            "loose_max_nng", "loose_sum_exp"]) {
      expect(svg).toContain(`data-series="${strategy}"`);
    }
    expect(svg).toContain('data-series="monte_carlo-err"');
  });

  it("psi_compare with k=0 rows plots all strategies at the same point", () => {
    const header = "kind,k,s,t,beta,kappa,rhs_total,strategy,std_err\n";
    const rows = ["quadrature", "monte_carlo", "loose_max_nng"]
      .map((s) => `psi,0,0.0,1.0,1.0,0.0,,${s},`)
      .join("\n");
    const svg = renderPsiCompare(
      [{ source: "k0.csv", text: header + rows + "\n" }], "linear", "linear");
    const points = [...svg.matchAll(/<polyline points="([^"]+)" [^>]*data-series=/g)]
      .map((m) => m[1]);
    expect(new Set(points).size).toBe(1);
  });

  it("empty csv is an explicit no-data error, not an empty figure", () => {
    expect(() => render(spec("bound_overlay"),
                        ["k,t,mse,ci_low,ci_high,bound_rhs\n"])).toThrow(/no data/);
  });

  it("schema mismatch names the offending columns", () => {
    expect(() => renderSweep([{ source: "s.csv", text: "value,foo\n1,2\n" }],
                             "linear", "linear")).toThrow(
      /s\.csv: missing required column\(s\): parameter, kappa, rhs_total/);
  });

  it("log scale rejects nonpositive domains", () => {
    const text = "parameter,value,kappa,rhs_total\neta,0,0,0\neta,1,1,1\n";
    expect(() => renderSweep([{ source: "s.csv", text }], "log", "linear")).toThrow(
      /log scale needs a positive domain/);
  });
});
