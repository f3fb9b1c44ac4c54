/**
 * Learning-curve figure: one line per run for a chosen metric, with an
 * optional trailing moving average (default window 10 steps).
 */

import * as fs from "fs";
import { CurveRun, SchemaError, readCurveCsv } from "./csv";
import { smooth } from "./stats";
import {
  PALETTE,
  document as svgDocument,
  drawAxes,
  extent,
  fmt,
  legend,
  linePath,
  linearScale,
} from "./svg";

export interface CurvesOptions {
  /** Trailing moving-average window in steps; 1 plots raw values. */
  smoothWindow?: number;
  width?: number;
  height?: number;
}

export function renderCurves(
  runs: CurveRun[],
  metric: string,
  options: CurvesOptions = {},
): string {
  if (runs.length === 0) throw new SchemaError("no input runs");
  const window = options.smoothWindow ?? 10;
  const width = options.width ?? 640;
  const height = options.height ?? 400;

  const series = runs.map((run) => {
    const values = run.metrics.get(metric);
    if (values === undefined) {
      throw new SchemaError(`${run.path}: missing column "${metric}"`);
    }
    return { run, values: smooth(values, window) };
  });

  const margin = { left: 56, right: 16, top: 16, bottom: 44 };
  const stepSeqs: (number | null)[][] = runs.map((r) => r.steps);
  const valueSeqs: (number | null)[][] = series.map((s) => s.values);
  const x = linearScale(extent(stepSeqs), [margin.left, width - margin.right]);
  const y = linearScale(extent(valueSeqs), [height - margin.bottom, margin.top]);

  const body: string[] = [];
  drawAxes({ x, y, body }, "step", metric);
  series.forEach((s, i) => {
    const d = linePath(s.run.steps, s.values, x, y);
    const color = PALETTE[i % PALETTE.length]!;
    body.push(
      `<path class="series" data-label="${s.run.label}" d="${d}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
  });
  body.push(...legend(runs.map((r) => r.label), width - margin.right, margin.top + 8));
  body.push(
    `<text x="${fmt(width / 2)}" y="12" font-size="12" text-anchor="middle">${metric} (window ${window})</text>`,
  );
  return svgDocument(width, height, body);
}

/** Read curve CSVs, render the figure, and write it to `outPath`. */
export function plotCurves(
  csvPaths: string[],
  metric: string,
  outPath: string,
  options: CurvesOptions = {},
): void {
  const runs = csvPaths.map(readCurveCsv);
  fs.writeFileSync(outPath, renderCurves(runs, metric, options));
}
