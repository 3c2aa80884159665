/** Deterministic SVG primitives: fixed canvas, fixed palette, fixed precision. */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { left: 64, right: 20, top: 32, bottom: 48 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export type ScaleKind = "linear" | "log";

export interface Scale {
  toPixel(value: number): number;
}

/** Coordinates are fixed to 2 decimals so output bytes never drift. */
export const px = (v: number): string => v.toFixed(2);

export function makeScale(
  kind: ScaleKind,
  domain: [number, number],
  range: [number, number],
): Scale {
  let [d0, d1] = domain;
  if (kind === "log") {
    if (d0 <= 0 || d1 <= 0) {
      throw new Error(`log scale needs a positive domain, got [${d0}, ${d1}]`);
    }
    d0 = Math.log10(d0);
    d1 = Math.log10(d1);
  }
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const [r0, r1] = range;
  return {
    toPixel(value: number): number {
      const v = kind === "log" ? Math.log10(value) : value;
      return r0 + ((v - d0) / (d1 - d0)) * (r1 - r0);
    },
  };
}

export function ticks(domain: [number, number], kind: ScaleKind, count = 5): number[] {
  const [a, b] = domain;
  if (kind === "log") {
    const lo = Math.ceil(Math.log10(a) - 1e-9);
    const hi = Math.floor(Math.log10(b) + 1e-9);
    const out: number[] = [];
    for (let e = lo; e <= hi; e += 1) out.push(10 ** e);
    return out.length >= 2 ? out : [a, b];
  }
  const out: number[] = [];
  for (let i = 0; i <= count; i += 1) out.push(a + ((b - a) * i) / count);
  return out;
}

export const fmtTick = (v: number): string => {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(4)));
  return v.toExponential(1);
};

export function attr(pairs: Record<string, string>): string {
  return Object.entries(pairs)
    .map(([k, v]) => `${k}="${v}"`)
    .join(" ");
}

export function polyline(points: Array<[number, number]>, attrs: Record<string, string>): string {
  const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return `<polyline points="${pts}" ${attr(attrs)}/>`;
}

export function polygon(points: Array<[number, number]>, attrs: Record<string, string>): string {
  const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return `<polygon points="${pts}" ${attr(attrs)}/>`;
}

export function line(x1: number, y1: number, x2: number, y2: number,
                     attrs: Record<string, string>): string {
  return `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" ${attr(attrs)}/>`;
}

export function text(x: number, y: number, body: string, attrs: Record<string, string>): string {
  return `<text x="${px(x)}" y="${px(y)}" ${attr(attrs)}>${escapeXml(body)}</text>`;
}

export function circle(x: number, y: number, r: number, attrs: Record<string, string>): string {
  return `<circle cx="${px(x)}" cy="${px(y)}" r="${px(r)}" ${attr(attrs)}/>`;
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Frame {
  x: Scale;
  y: Scale;
  parts: string[];
}

/** Axes, tick marks, labels, and the plot frame. */
export function makeFrame(
  xDomain: [number, number],
  yDomain: [number, number],
  xKind: ScaleKind,
  yKind: ScaleKind,
  title: string,
  xLabel: string,
  yLabel: string,
): Frame {
  const x = makeScale(xKind, xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const y = makeScale(yKind, yDomain, [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const parts: string[] = [];
  parts.push(`<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(text(WIDTH / 2, 20, title, {
    "text-anchor": "middle", "font-size": "14", "font-family": "sans-serif",
    "font-weight": "bold",
  }));
  const axisStyle = { stroke: "#333333", "stroke-width": "1" };
  parts.push(line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right,
                  HEIGHT - MARGIN.bottom, axisStyle));
  parts.push(line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, axisStyle));
  for (const tv of ticks(xDomain, xKind)) {
    const xp = x.toPixel(tv);
    parts.push(line(xp, HEIGHT - MARGIN.bottom, xp, HEIGHT - MARGIN.bottom + 5, axisStyle));
    parts.push(text(xp, HEIGHT - MARGIN.bottom + 18, fmtTick(tv), {
      "text-anchor": "middle", "font-size": "11", "font-family": "sans-serif",
    }));
  }
  for (const tv of ticks(yDomain, yKind)) {
    const yp = y.toPixel(tv);
    parts.push(line(MARGIN.left - 5, yp, MARGIN.left, yp, axisStyle));
    parts.push(text(MARGIN.left - 8, yp + 4, fmtTick(tv), {
      "text-anchor": "end", "font-size": "11", "font-family": "sans-serif",
    }));
  }
  parts.push(text(WIDTH / 2, HEIGHT - 12, xLabel, {
    "text-anchor": "middle", "font-size": "12", "font-family": "sans-serif",
  }));
  parts.push(
    `<text x="${px(16)}" y="${px(HEIGHT / 2)}" text-anchor="middle" font-size="12" ` +
      `font-family="sans-serif" transform="rotate(-90 16 ${px(HEIGHT / 2)})">` +
      `${escapeXml(yLabel)}</text>`,
  );
  return { x, y, parts };
}

export function document(parts: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    parts.join("\n") +
    "\n</svg>\n"
  );
}
