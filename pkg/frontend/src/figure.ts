/** Figure specification: which CSVs, which chart, which scales, where to. */

import type { ScaleKind } from "./svg.js";

export const KINDS = ["bound_overlay", "sweep", "psi_compare"] as const;
export type FigureKind = (typeof KINDS)[number];

export interface FigureSpec {
  csvPaths: string[];
  kind: FigureKind;
  outPath: string;
  xScale: ScaleKind;
  yScale: ScaleKind;
}

export function validateSpec(spec: FigureSpec): void {
  if (!KINDS.includes(spec.kind)) {
    throw new Error(`unknown figure kind ${spec.kind}; allowed: ${KINDS.join(", ")}`);
  }
  if (spec.csvPaths.length === 0) {
    throw new Error("at least one --csv input is required");
  }
  if (!spec.outPath) {
    throw new Error("--out is required");
  }
  for (const s of [spec.xScale, spec.yScale]) {
    if (s !== "linear" && s !== "log") {
      throw new Error(`axis scale must be linear or log, got ${s}`);
    }
  }
}
