/** The three chart renderers. Pure functions of CSV text: no clock, no RNG.
 *
 * Every data series carries a data-series attribute so tests (and users) can
 * re-read exactly what was plotted from the SVG itself.
 */

import { num, parseCsv, toRecords, type Row } from "./csv.js";
import type { FigureSpec } from "./figure.js";
import {
  PALETTE,
  circle,
  document,
  line,
  makeFrame,
  polygon,
  polyline,
  text,
  type ScaleKind,
} from "./svg.js";

interface Input {
  source: string;
  text: string;
}

function loadRows(inputs: Input[], required: string[]): Row[] {
  const all: Row[] = [];
  for (const input of inputs) {
    all.push(...toRecords(parseCsv(input.text), required, input.source));
  }
  return all;
}

const byNumeric = (key: string, source: string) => (a: Row, b: Row) =>
  num(a, key, source) - num(b, key, source);

function legend(parts: string[], entries: Array<[string, string]>): void {
  entries.forEach(([label, color], i) => {
    const y = 40 + 16 * i;
    parts.push(line(500, y, 524, y, { stroke: color, "stroke-width": "2" }));
    parts.push(text(530, y + 4, label, {
      "font-size": "11", "font-family": "sans-serif",
    }));
  });
}

export function renderBoundOverlay(inputs: Input[], xScale: ScaleKind,
                                   yScale: ScaleKind): string {
  const rows = loadRows(inputs, ["k", "t", "mse", "ci_low", "ci_high", "bound_rhs"]);
  const src = inputs[0].source;
  const ks = [...new Set(rows.map((r) => r.k))].sort(
    (a, b) => Number(a) - Number(b));
  const ts = rows.map((r) => num(r, "t", src));
  const highs = rows.map((r) => Math.max(num(r, "bound_rhs", src), num(r, "ci_high", src)));
  const lows = yScale === "log"
    ? rows.map((r) => num(r, "ci_low", src)).filter((v) => v > 0)
    : [0];
  const yTop = Math.max(...highs) * 1.05 || 1.0;
  const yBot = yScale === "log" ? Math.min(...lows, yTop / 1e6) : 0;
  const frame = makeFrame(
    [Math.min(...ts), Math.max(...ts)], [yBot, yTop], xScale, yScale,
    "conditional mean-squared error vs bound", "time", "E_k ||y - x||^2");
  const entries: Array<[string, string]> = [];
  ks.forEach((k, i) => {
    const color = PALETTE[i % PALETTE.length];
    const sub = rows.filter((r) => r.k === k).sort(byNumeric("t", src));
    const pix = (r: Row, col: string): [number, number] => [
      frame.x.toPixel(num(r, "t", src)),
      frame.y.toPixel(Math.max(num(r, col, src), yBot)),
    ];
    const top = sub.map((r) => pix(r, "ci_high"));
    const bottom = sub.map((r) => pix(r, "ci_low")).reverse();
    frame.parts.push(polygon([...top, ...bottom], {
      fill: color, "fill-opacity": "0.18", stroke: "none",
      "data-series": `ci-k${k}`,
    }));
    frame.parts.push(polyline(sub.map((r) => pix(r, "mse")), {
      fill: "none", stroke: color, "stroke-width": "1.5",
      "data-series": `mse-k${k}`,
    }));
    frame.parts.push(polyline(sub.map((r) => pix(r, "bound_rhs")), {
      fill: "none", stroke: color, "stroke-width": "2",
      "stroke-dasharray": "6 3", "data-series": `bound-k${k}`,
    }));
    entries.push([`k=${k} bound`, color]);
  });
  legend(frame.parts, entries);
  return document(frame.parts);
}

export function renderSweep(inputs: Input[], xScale: ScaleKind,
                            yScale: ScaleKind): string {
  const rows = loadRows(inputs, ["parameter", "value", "kappa", "rhs_total"]);
  const src = inputs[0].source;
  const parameter = rows[0].parameter;
  const sorted = [...rows].sort(byNumeric("value", src));
  const xs = sorted.map((r) => num(r, "value", src));
  const series: Array<[string, string]> = [["kappa", PALETTE[0]], ["rhs_total", PALETTE[1]]];
  const ys = series.flatMap(([col]) => sorted.map((r) => num(r, col, src)));
  const yTop = Math.max(...ys) * 1.05 || 1.0;
  const yBot = yScale === "log" ? Math.min(...ys.filter((v) => v > 0)) : 0;
  const frame = makeFrame(
    [Math.min(...xs), Math.max(...xs)], [yBot, yTop], xScale, yScale,
    `sweep of ${parameter}`, parameter, "error-ball term / bound total");
  for (const [col, color] of series) {
    const pts = sorted.map((r): [number, number] => [
      frame.x.toPixel(num(r, "value", src)),
      frame.y.toPixel(num(r, col, src)),
    ]);
    frame.parts.push(polyline(pts, {
      fill: "none", stroke: color, "stroke-width": "2", "data-series": col,
    }));
    pts.forEach(([x, y]) => frame.parts.push(circle(x, y, 3, { fill: color })));
  }
  legend(frame.parts, series);
  return document(frame.parts);
}

export function renderPsiCompare(inputs: Input[], xScale: ScaleKind,
                                 yScale: ScaleKind): string {
  const rows = loadRows(inputs, ["kind", "k", "kappa", "strategy"]).filter(
    (r) => r.kind === "psi");
  const src = inputs[0].source;
  if (rows.length === 0) {
    throw new Error(`${src}: no rows with kind=psi to compare`);
  }
  const strategies = [...new Set(rows.map((r) => r.strategy))].sort();
  const ks = rows.map((r) => num(r, "k", src));
  const vals = rows.map((r) => num(r, "kappa", src));
  const yTop = Math.max(...vals) * 1.05 || 1.0;
  const yBot = yScale === "log" ? Math.min(...vals.filter((v) => v > 0), yTop) / 2 : 0;
  const frame = makeFrame(
    [Math.min(...ks), Math.max(...ks)], [yBot, yTop], xScale, yScale,
    "jump-interaction expectation by strategy", "jump count k", "psi_k");
  const entries: Array<[string, string]> = [];
  strategies.forEach((strategy, i) => {
    const color = PALETTE[i % PALETTE.length];
    const sub = rows.filter((r) => r.strategy === strategy).sort(byNumeric("k", src));
    const pts = sub.map((r): [number, number] => [
      frame.x.toPixel(num(r, "k", src)),
      frame.y.toPixel(num(r, "kappa", src)),
    ]);
    frame.parts.push(polyline(pts, {
      fill: "none", stroke: color, "stroke-width": "1.5",
      "data-series": strategy,
    }));
    sub.forEach((r, j) => {
      const se = r.std_err === "" || r.std_err === undefined ? 0 : Number(r.std_err);
      if (se > 0) {
        const x = pts[j][0];
        const lo = frame.y.toPixel(num(r, "kappa", src) - 1.96 * se);
        const hi = frame.y.toPixel(num(r, "kappa", src) + 1.96 * se);
        frame.parts.push(line(x, lo, x, hi, {
          stroke: color, "stroke-width": "1", "data-series": `${strategy}-err`,
        }));
      }
      frame.parts.push(circle(pts[j][0], pts[j][1], 3, { fill: color }));
    });
    entries.push([strategy, color]);
  });
  legend(frame.parts, entries);
  return document(frame.parts);
}

export function render(spec: FigureSpec, texts: string[]): string {
  const inputs: Input[] = spec.csvPaths.map((p, i) => ({ source: p, text: texts[i] }));
  switch (spec.kind) {
    case "bound_overlay":
      return renderBoundOverlay(inputs, spec.xScale, spec.yScale);
    case "sweep":
      return renderSweep(inputs, spec.xScale, spec.yScale);
    case "psi_compare":
      return renderPsiCompare(inputs, spec.xScale, spec.yScale);
  }
}
