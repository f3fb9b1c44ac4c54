#!/usr/bin/env node
/**
 * `report` command line: renders SVG figures from training-run CSVs.
 *
 *   report curves     --in run1/curve.csv run2/curve.csv --metric mean_reward --out fig.svg
 *   report similarity --in model_run/curve.csv --out fig.svg
 *   report alpha      --in sweep_runs.csv --out fig.svg
 */

import yargs from "yargs";
import { plotAlpha } from "./alpha";
import { plotCurves } from "./curves";
import { plotSimilarity } from "./similarity";

export function main(argv: string[]): number {
  let failed = false;
  const parser = yargs(argv)
    .scriptName("report")
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      failed = true;
      process.stderr.write(`error: ${err ? err.message : msg}\n`);
    })
    .command(
      "curves",
      "learning curves for one metric across runs",
      (y) =>
        y
          .option("in", { type: "string", array: true, demandOption: true, describe: "curve CSV files" })
          .option("metric", { type: "string", default: "mean_reward" })
          .option("smooth", { type: "number", default: 10, describe: "moving-average window (1 = raw)" })
          .option("out", { type: "string", demandOption: true }),
      (args) => {
        plotCurves(args.in as string[], args.metric, args.out, {
          smoothWindow: args.smooth,
        });
        process.stdout.write(`wrote ${args.out}\n`);
      },
    )
    .command(
      "similarity",
      "cosine/Pearson weight-similarity panels",
      (y) =>
        y
          .option("in", { type: "string", array: true, demandOption: true, describe: "curve CSV files" })
          .option("out", { type: "string", demandOption: true }),
      (args) => {
        plotSimilarity(args.in as string[], args.out);
        process.stdout.write(`wrote ${args.out}\n`);
      },
    )
    .command(
      "alpha",
      "box summary of per-run rewards by swept value",
      (y) =>
        y
          .option("in", { type: "string", demandOption: true, describe: "per-run sweep CSV" })
          .option("out", { type: "string", demandOption: true }),
      (args) => {
        plotAlpha(args.in as string, args.out);
        process.stdout.write(`wrote ${args.out}\n`);
      },
    )
    .demandCommand(1, "choose a subcommand: curves, similarity, or alpha");

  try {
    parser.parseSync();
  } catch (err) {
    failed = true;
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
  }
  return failed ? 2 : 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
