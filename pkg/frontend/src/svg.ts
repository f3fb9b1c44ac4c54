/**
 * Deterministic SVG assembly.  Figures are built as plain strings with a
 * fixed element order and a fixed number format, so identical inputs
 * always produce byte-identical files.
 */

/** Fixed qualitative palette, assigned to series in input order. */
export const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
];

/** Round-trippable short form: up to 6 significant digits, no exponent noise. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`cannot format non-finite coordinate ${x}`);
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export interface LinearScale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
}

/** Affine map from a data domain to pixel coordinates. */
export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  const scale = ((x: number) =>
    span === 0 ? (r0 + r1) / 2 : r0 + ((x - d0) / span) * (r1 - r0)) as LinearScale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

/** Evenly spaced tick positions across a domain (inclusive of both ends). */
export function ticks(domain: [number, number], count: number): number[] {
  const [d0, d1] = domain;
  if (count < 2 || d0 === d1) return [d0];
  const out: number[] = [];
  for (let i = 0; i < count; i++) {
    out.push(d0 + ((d1 - d0) * i) / (count - 1));
  }
  return out;
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tickLabel(x: number): string {
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 10000 || abs < 0.01) return x.toExponential(1);
  return String(Number(x.toPrecision(4)));
}

export interface PanelFrame {
  x: LinearScale;
  y: LinearScale;
  body: string[];
}

/** Axis lines, ticks, and labels for one panel; appended to `body`. */
export function drawAxes(
  frame: PanelFrame,
  xLabel: string,
  yLabel: string,
  xTickValues?: number[],
): void {
  const { x, y, body } = frame;
  const [px0, px1] = x.range;
  const [py0, py1] = y.range; // py0 is the bottom (larger pixel y)
  body.push(
    `<line x1="${fmt(px0)}" y1="${fmt(py0)}" x2="${fmt(px1)}" y2="${fmt(py0)}" stroke="#333" stroke-width="1"/>`,
    `<line x1="${fmt(px0)}" y1="${fmt(py0)}" x2="${fmt(px0)}" y2="${fmt(py1)}" stroke="#333" stroke-width="1"/>`,
  );
  for (const t of xTickValues ?? ticks(x.domain, 5)) {
    const tx = x(t);
    body.push(
      `<line x1="${fmt(tx)}" y1="${fmt(py0)}" x2="${fmt(tx)}" y2="${fmt(py0 + 4)}" stroke="#333" stroke-width="1"/>`,
      `<text x="${fmt(tx)}" y="${fmt(py0 + 16)}" font-size="10" text-anchor="middle">${escapeXml(tickLabel(t))}</text>`,
    );
  }
  for (const t of ticks(y.domain, 5)) {
    const ty = y(t);
    body.push(
      `<line x1="${fmt(px0 - 4)}" y1="${fmt(ty)}" x2="${fmt(px0)}" y2="${fmt(ty)}" stroke="#333" stroke-width="1"/>`,
      `<text x="${fmt(px0 - 6)}" y="${fmt(ty + 3)}" font-size="10" text-anchor="end">${escapeXml(tickLabel(t))}</text>`,
    );
  }
  const midX = (px0 + px1) / 2;
  const midY = (py0 + py1) / 2;
  body.push(
    `<text x="${fmt(midX)}" y="${fmt(py0 + 32)}" font-size="11" text-anchor="middle">${escapeXml(xLabel)}</text>`,
    `<text x="${fmt(px0 - 38)}" y="${fmt(midY)}" font-size="11" text-anchor="middle" transform="rotate(-90 ${fmt(px0 - 38)} ${fmt(midY)})">${escapeXml(yLabel)}</text>`,
  );
}

/** Polyline path through (x, y) data points, breaking at null gaps. */
export function linePath(
  xs: number[],
  ys: (number | null)[],
  sx: LinearScale,
  sy: LinearScale,
): string {
  const parts: string[] = [];
  let pen = false;
  for (let i = 0; i < xs.length; i++) {
    const yv = ys[i];
    if (yv === null || yv === undefined) {
      pen = false;
      continue;
    }
    const cmd = pen ? "L" : "M";
    parts.push(`${cmd}${fmt(sx(xs[i]!))},${fmt(sy(yv))}`);
    pen = true;
  }
  return parts.join(" ");
}

/** Finite extent of one or more value sequences, padded when degenerate. */
export function extent(seqs: (number | null)[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const seq of seqs) {
    for (const v of seq) {
      if (v === null || !Number.isFinite(v)) continue;
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (lo === Infinity) throw new Error("no finite values to plot");
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

export function legend(
  labels: string[],
  xRight: number,
  yTop: number,
): string[] {
  const body: string[] = [];
  labels.forEach((label, i) => {
    const y = yTop + 14 * i;
    const color = PALETTE[i % PALETTE.length]!;
    body.push(
      `<line x1="${fmt(xRight - 120)}" y1="${fmt(y)}" x2="${fmt(xRight - 100)}" y2="${fmt(y)}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${fmt(xRight - 95)}" y="${fmt(y + 3)}" font-size="10">${escapeXml(label)}</text>`,
    );
  });
  return body;
}

/** Wrap panel bodies into a complete standalone SVG document. */
export function document(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}
