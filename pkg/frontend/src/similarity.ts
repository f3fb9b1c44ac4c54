/**
 * Two-panel diagnostic figure: cosine similarity and Pearson correlation
 * of the learned item weights against the click-driven weighting, per
 * training step.  Only runs that train a weight model emit these columns;
 * other runs leave them blank and are rejected with an explanation.
 */

import * as fs from "fs";
import { CurveRun, SchemaError, readCurveCsv } from "./csv";
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

const SIM_METRICS = ["cosine_sim", "pearson"] as const;

export interface SimilarityOptions {
  width?: number;
  height?: number;
}

export function renderSimilarity(
  runs: CurveRun[],
  options: SimilarityOptions = {},
): string {
  if (runs.length === 0) throw new SchemaError("no input runs");
  for (const run of runs) {
    const hasAny = SIM_METRICS.some((m) =>
      (run.metrics.get(m) ?? []).some((v) => v !== null),
    );
    if (!hasAny) {
      throw new SchemaError(
        `${run.path}: no similarity columns — cosine_sim and pearson are all ` +
          "blank (only weight-model runs emit them)",
      );
    }
  }

  const width = options.width ?? 640;
  const height = options.height ?? 520;
  const margin = { left: 56, right: 16, top: 24, bottom: 44 };
  const panelGap = 40;
  const panelHeight = (height - margin.top - margin.bottom - panelGap) / 2;

  const stepSeqs: (number | null)[][] = runs.map((r) => r.steps);
  const xDomain = extent(stepSeqs);
  const body: string[] = [];

  SIM_METRICS.forEach((metric, panelIdx) => {
    const top = margin.top + panelIdx * (panelHeight + panelGap);
    const x = linearScale(xDomain, [margin.left, width - margin.right]);
    const valueSeqs = runs.map((r) => r.metrics.get(metric)!);
    const y = linearScale(extent(valueSeqs), [top + panelHeight, top]);
    const panel: string[] = [];
    drawAxes({ x, y, body: panel }, "step", metric);
    runs.forEach((run, i) => {
      const d = linePath(run.steps, run.metrics.get(metric)!, x, y);
      const color = PALETTE[i % PALETTE.length]!;
      panel.push(
        `<path class="series" data-label="${run.label}" d="${d}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
      );
    });
    body.push(`<g class="panel" data-metric="${metric}">`, ...panel, "</g>");
  });

  body.push(...legend(runs.map((r) => r.label), width - margin.right, margin.top + 8));
  body.push(
    `<text x="${fmt(width / 2)}" y="14" font-size="12" text-anchor="middle">weight similarity diagnostics</text>`,
  );
  return svgDocument(width, height, body);
}

/** Read curve CSVs, render the two-panel figure, and write it to `outPath`. */
export function plotSimilarity(
  csvPaths: string[],
  outPath: string,
  options: SimilarityOptions = {},
): void {
  const runs = csvPaths.map(readCurveCsv);
  fs.writeFileSync(outPath, renderSimilarity(runs, options));
}
