/**
 * CSV ingestion for training-run artifacts.
 *
 * Two schemas are understood:
 *  - per-step curve files: one row per training step with reward/depth/loss
 *    metrics; cells may be blank when a metric is unavailable at that step;
 *  - per-run sweep files: one row per (parameter value, seed) run.
 */

import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";

/** Column order written by the training harness for per-step curves. */
export const CURVE_COLUMNS = [
  "step",
  "mean_reward",
  "max_reward",
  "min_reward",
  "mean_depth",
  "max_depth",
  "min_depth",
  "reward_variance",
  "critic_loss",
  "actor_loss",
  "weight_loss",
  "cosine_sim",
  "pearson",
] as const;

/** Column order written by the sweep runner, one row per individual run. */
export const SWEEP_RUN_COLUMNS = [
  "parameter",
  "value",
  "seed",
  "mean_reward",
  "mean_depth",
] as const;

/** Raised when an input file does not match the documented schema. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface CurveRun {
  /** Legend label, derived from the file's location. */
  label: string;
  /** Source path, kept for error messages. */
  path: string;
  /** Step indices, strictly increasing. */
  steps: number[];
  /** metric name -> per-step values; blank cells become null. */
  metrics: Map<string, (number | null)[]>;
}

function parseRows(filePath: string): Record<string, string>[] {
  let text: string;
  try {
    text = fs.readFileSync(filePath, "utf8");
  } catch {
    throw new SchemaError(`cannot read CSV file: ${filePath}`);
  }
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new SchemaError(`${filePath}: malformed CSV (${first.message})`);
  }
  return parsed.data;
}

function toNumber(cell: string | undefined, column: string, filePath: string): number | null {
  if (cell === undefined || cell === "") return null;
  const value = Number(cell);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`${filePath}: non-numeric value "${cell}" in column "${column}"`);
  }
  return value;
}

/** Label a run by its parent directory when the file has a generic name. */
export function runLabel(filePath: string): string {
  const base = path.basename(filePath).replace(/\.csv$/i, "");
  if (base === "curve") {
    const parent = path.basename(path.dirname(filePath));
    if (parent && parent !== ".") return parent;
  }
  return base;
}

/**
 * Read one per-step curve file.  Every documented column must be present
 * (missing ones are reported by name) and step indices must increase.
 */
export function readCurveCsv(filePath: string): CurveRun {
  const rows = parseRows(filePath);
  if (rows.length === 0) {
    throw new SchemaError(`${filePath}: no data rows`);
  }
  const present = new Set(Object.keys(rows[0]!));
  for (const col of CURVE_COLUMNS) {
    if (!present.has(col)) {
      throw new SchemaError(`${filePath}: missing column "${col}"`);
    }
  }

  const steps: number[] = [];
  const metrics = new Map<string, (number | null)[]>();
  for (const col of CURVE_COLUMNS) {
    if (col !== "step") metrics.set(col, []);
  }
  for (const row of rows) {
    const step = toNumber(row["step"], "step", filePath);
    if (step === null) {
      throw new SchemaError(`${filePath}: blank step index`);
    }
    const prev = steps[steps.length - 1];
    if (prev !== undefined && step <= prev) {
      throw new SchemaError(
        `${filePath}: step indices must increase (${prev} then ${step})`,
      );
    }
    steps.push(step);
    for (const [col, values] of metrics) {
      values.push(toNumber(row[col], col, filePath));
    }
  }
  return { label: runLabel(filePath), path: filePath, steps, metrics };
}

export interface SweepRun {
  parameter: string;
  value: number;
  seed: number;
  meanReward: number;
  meanDepth: number;
}

/** Read a per-run sweep file (one row per parameter value and seed). */
export function readSweepRunsCsv(filePath: string): SweepRun[] {
  const rows = parseRows(filePath);
  if (rows.length === 0) {
    throw new SchemaError(`${filePath}: no data rows`);
  }
  const present = new Set(Object.keys(rows[0]!));
  for (const col of SWEEP_RUN_COLUMNS) {
    if (!present.has(col)) {
      throw new SchemaError(`${filePath}: missing column "${col}"`);
    }
  }
  return rows.map((row) => {
    const value = toNumber(row["value"], "value", filePath);
    const seed = toNumber(row["seed"], "seed", filePath);
    const meanReward = toNumber(row["mean_reward"], "mean_reward", filePath);
    const meanDepth = toNumber(row["mean_depth"], "mean_depth", filePath);
    if (value === null || seed === null || meanReward === null || meanDepth === null) {
      throw new SchemaError(`${filePath}: blank cell in a sweep row`);
    }
    return {
      parameter: row["parameter"] ?? "",
      value,
      seed,
      meanReward,
      meanDepth,
    };
  });
}
