/**
 * Ablation summary figure: one box-and-whisker glyph per swept parameter
 * value, built from the per-run sweep CSV (one row per value and seed).
 * Each glyph shows min, first quartile, median, mean, third quartile, and
 * max of the per-run mean rewards.
 *
 * Every glyph carries the summary statistics as full-precision data
 * attributes so downstream checks can read back exactly what was drawn.
 */

import * as fs from "fs";
import { SchemaError, SweepRun, readSweepRunsCsv } from "./csv";
import { BoxStats, boxStats } from "./stats";
import {
  document as svgDocument,
  drawAxes,
  extent,
  fmt,
  linearScale,
  tickLabel,
} from "./svg";

export interface AlphaGroup {
  value: number;
  rewards: number[];
  stats: BoxStats;
}

/** Group per-run rewards by parameter value, in ascending value order. */
export function groupRuns(runs: SweepRun[]): AlphaGroup[] {
  if (runs.length === 0) throw new SchemaError("no sweep runs");
  const byValue = new Map<number, number[]>();
  for (const run of runs) {
    const bucket = byValue.get(run.value);
    if (bucket === undefined) byValue.set(run.value, [run.meanReward]);
    else bucket.push(run.meanReward);
  }
  return [...byValue.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([value, rewards]) => ({ value, rewards, stats: boxStats(rewards) }));
}

export interface AlphaOptions {
  width?: number;
  height?: number;
  /** Receives warnings (defaults to console.warn). */
  warn?: (message: string) => void;
}

export function renderAlpha(groups: AlphaGroup[], options: AlphaOptions = {}): string {
  if (groups.length === 0) throw new SchemaError("no sweep groups");
  const warn = options.warn ?? ((m: string) => console.warn(m));
  const width = options.width ?? 560;
  const height = options.height ?? 400;
  const margin = { left: 56, right: 16, top: 24, bottom: 44 };

  const singles = groups.filter((g) => g.stats.n < 2);
  if (singles.length > 0) {
    warn(
      `only one run for value(s) ${singles.map((g) => tickLabel(g.value)).join(", ")}; ` +
        "drawing points instead of boxes",
    );
  }

  // Categorical x: one slot per value, boxes at slot centres.
  const slotWidth = (width - margin.left - margin.right) / groups.length;
  const boxWidth = Math.min(40, slotWidth * 0.5);
  const y = linearScale(
    extent([groups.flatMap((g) => g.rewards)]),
    [height - margin.bottom, margin.top],
  );
  const x = linearScale([0, groups.length], [margin.left, width - margin.right]);

  const body: string[] = [];
  drawAxes({ x, y, body }, "parameter value", "mean session reward", []);
  groups.forEach((group, i) => {
    const cx = x(i + 0.5);
    const s = group.stats;
    const attrs =
      `data-value="${group.value}" data-n="${s.n}" data-mean="${s.mean}" ` +
      `data-median="${s.median}" data-q1="${s.q1}" data-q3="${s.q3}" ` +
      `data-min="${s.min}" data-max="${s.max}"`;
    const glyph: string[] = [];
    if (s.n < 2) {
      glyph.push(
        `<circle cx="${fmt(cx)}" cy="${fmt(y(s.mean))}" r="3" fill="#1f77b4"/>`,
      );
    } else {
      const left = cx - boxWidth / 2;
      const right = cx + boxWidth / 2;
      glyph.push(
        // whiskers: min-max range
        `<line x1="${fmt(cx)}" y1="${fmt(y(s.min))}" x2="${fmt(cx)}" y2="${fmt(y(s.q1))}" stroke="#333" stroke-width="1"/>`,
        `<line x1="${fmt(cx)}" y1="${fmt(y(s.q3))}" x2="${fmt(cx)}" y2="${fmt(y(s.max))}" stroke="#333" stroke-width="1"/>`,
        `<line x1="${fmt(cx - boxWidth / 4)}" y1="${fmt(y(s.min))}" x2="${fmt(cx + boxWidth / 4)}" y2="${fmt(y(s.min))}" stroke="#333" stroke-width="1"/>`,
        `<line x1="${fmt(cx - boxWidth / 4)}" y1="${fmt(y(s.max))}" x2="${fmt(cx + boxWidth / 4)}" y2="${fmt(y(s.max))}" stroke="#333" stroke-width="1"/>`,
        // interquartile box
        `<rect x="${fmt(left)}" y="${fmt(y(s.q3))}" width="${fmt(boxWidth)}" height="${fmt(y(s.q1) - y(s.q3))}" fill="#aec7e8" stroke="#1f77b4" stroke-width="1"/>`,
        // median line and mean marker
        `<line x1="${fmt(left)}" y1="${fmt(y(s.median))}" x2="${fmt(right)}" y2="${fmt(y(s.median))}" stroke="#1f77b4" stroke-width="2"/>`,
        `<circle cx="${fmt(cx)}" cy="${fmt(y(s.mean))}" r="2.5" fill="#d62728"/>`,
      );
    }
    body.push(`<g class="box" ${attrs}>`, ...glyph, "</g>");
    body.push(
      `<line x1="${fmt(cx)}" y1="${fmt(y.range[0])}" x2="${fmt(cx)}" y2="${fmt(y.range[0] + 4)}" stroke="#333" stroke-width="1"/>`,
      `<text x="${fmt(cx)}" y="${fmt(y.range[0] + 16)}" font-size="10" text-anchor="middle">${tickLabel(group.value)}</text>`,
    );
  });
  body.push(
    `<text x="${fmt(width / 2)}" y="14" font-size="12" text-anchor="middle">reward by swept value (box: quartiles, line: median, dot: mean)</text>`,
  );
  return svgDocument(width, height, body);
}

/** Read a sweep CSV, render the box summary, and write it to `outPath`. */
export function plotAlpha(csvPath: string, outPath: string, options: AlphaOptions = {}): void {
  const groups = groupRuns(readSweepRunsCsv(csvPath));
  fs.writeFileSync(outPath, renderAlpha(groups, options));
}
