#!/usr/bin/env node
/** Figure tool: --csv PATH(s) --kind KIND --out PATH [--xscale S] [--yscale S]. */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { KINDS, validateSpec, type FigureKind, type FigureSpec } from "./figure.js";
import { render } from "./render.js";
import type { ScaleKind } from "./svg.js";

export function buildSpec(argv: string[]): FigureSpec {
  const { values } = parseArgs({
    args: argv,
    options: {
      csv: { type: "string", multiple: true },
      kind: { type: "string" },
      out: { type: "string" },
      xscale: { type: "string", default: "linear" },
      yscale: { type: "string", default: "linear" },
    },
  });
  const spec: FigureSpec = {
    csvPaths: values.csv ?? [],
    kind: (values.kind ?? "") as FigureKind,
    outPath: values.out ?? "",
    xScale: values.xscale as ScaleKind,
    yScale: values.yscale as ScaleKind,
  };
  validateSpec(spec);
  return spec;
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = buildSpec(argv);
  } catch (err) {
    console.error(`usage: levy-contract-plot --csv PATH [--csv PATH...] ` +
      `--kind {${KINDS.join("|")}} --out PATH [--xscale linear|log] [--yscale linear|log]`);
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const texts = spec.csvPaths.map((p) => readFileSync(p, "utf8"));
    const svg = render(spec, texts);
    writeFileSync(spec.outPath, svg);
    console.log(`wrote ${spec.outPath}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
