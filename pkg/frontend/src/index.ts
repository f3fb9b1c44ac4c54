export { CURVE_COLUMNS, SWEEP_RUN_COLUMNS, SchemaError, readCurveCsv, readSweepRunsCsv, runLabel } from "./csv";
export type { CurveRun, SweepRun } from "./csv";
export { percentile, boxStats, smooth } from "./stats";
export type { BoxStats } from "./stats";
export { renderCurves, plotCurves } from "./curves";
export { renderSimilarity, plotSimilarity } from "./similarity";
export { groupRuns, renderAlpha, plotAlpha } from "./alpha";
export type { AlphaGroup } from "./alpha";
export { main } from "./cli";
