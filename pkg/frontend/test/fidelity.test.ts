/** Figure-fidelity acceptance: the rendered overlay never crosses its CI
 * bands (re-read from the plotted series), and rendering is byte-stable.
 */

import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { render } from "../src/render.js";

const FIXTURES = join(__dirname, "fixtures");
const auditCsv = readFileSync(join(FIXTURES, "audit.csv"), "utf8");

const overlaySpec = {
  csvPaths: ["audit.csv"],
  kind: "bound_overlay" as const,
  outPath: "fig.svg",
  xScale: "linear" as const,
  yScale: "linear" as const,
};

function seriesPoints(svg: string, id: string): Array<[number, number]> {
  const re = new RegExp(
    `<(?:polyline|polygon) points="([^"]+)"[^>]*data-series="${id}"`);
  const m = svg.match(re);
  if (!m) throw new Error(`series ${id} not found in SVG`);
  return m[1].split(" ").map((p) => {
    const [x, y] = p.split(",").map(Number);
    return [x, y];
  });
}

describe("figure fidelity", () => {
  it("bound curves stay on or above the CI bands in the plotted series", () => {
    const svg = render(overlaySpec, [auditCsv]);
    const ks = [...new Set([...svg.matchAll(/data-series="bound-k(\d+)"/g)]
      .map((m) => m[1]))];
    expect(ks.length).toBeGreaterThan(0);
    for (const k of ks) {
      const bound = seriesPoints(svg, `bound-k${k}`);
      const band = seriesPoints(svg, `ci-k${k}`);
      const top = band.slice(0, bound.length); // polygon = top edge, then bottom reversed
      expect(top.length).toBe(bound.length);
      bound.forEach(([bx, by], i) => {
        expect(top[i][0]).toBeCloseTo(bx, 2);
        // SVG y grows downward: the bound is above the band top when its
        // pixel y is <= the band's (0.011 allows the 2-decimal rounding)
        expect(by).toBeLessThanOrEqual(top[i][1] + 0.011);
      });
    }
  });

  it("re-rendering is byte-stable", () => {
    const first = render(overlaySpec, [auditCsv]);
    const second = render(overlaySpec, [auditCsv]);
    expect(Buffer.from(first).equals(Buffer.from(second))).toBe(true);
  });

  it("cli writes the same bytes on repeated invocations", () => {
    const cliPath = join(__dirname, "..", "dist", "cli.js");
    if (!existsSync(cliPath)) return; // build first: npm run build
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    const args = (out: string) => [
      cliPath, "--csv", join(FIXTURES, "audit.csv"),
      "--kind", "bound_overlay", "--out", out];
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    execFileSync("node", args(a));
    execFileSync("node", args(b));
    expect(readFileSync(a).equals(readFileSync(b))).toBe(true);
    expect(readFileSync(a, "utf8")).toContain("data-series");
  });
});
