import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";
import { SchemaError, readCurveCsv, readSweepRunsCsv, runLabel } from "../src/csv";

const FIXTURES = path.join(__dirname, "fixtures");

let tmpDir: string;
beforeEach(() => {
  tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "report-csv-"));
});
afterEach(() => {
  fs.rmSync(tmpDir, { recursive: true, force: true });
});

function writeTmp(name: string, text: string): string {
  const p = path.join(tmpDir, name);
  fs.writeFileSync(p, text);
  return p;
}

describe("readCurveCsv", () => {
  it("parses the real fixture with blanks as nulls", () => {
    const run = readCurveCsv(path.join(FIXTURES, "model_curve.csv"));
    expect(run.steps.length).toBe(40);
    expect(run.steps[0]).toBe(1);
    // step 1 has no finished sessions yet: metrics are blank
    expect(run.metrics.get("mean_reward")![0]).toBeNull();
    expect(typeof run.metrics.get("mean_reward")![5]).toBe("number");
    expect(run.metrics.get("cosine_sim")!.some((v) => v !== null)).toBe(true);
  });

  it("request-level runs leave similarity columns blank", () => {
    const run = readCurveCsv(path.join(FIXTURES, "request_curve.csv"));
    expect(run.metrics.get("cosine_sim")!.every((v) => v === null)).toBe(true);
  });

  it("names a missing column", () => {
    const p = writeTmp("bad.csv", "step,mean_reward\n1,0.5\n");
    expect(() => readCurveCsv(p)).toThrow(/missing column "max_reward"/);
  });

  it("rejects non-increasing steps", () => {
    const header =
      "step,mean_reward,max_reward,min_reward,mean_depth,max_depth,min_depth," +
      "reward_variance,critic_loss,actor_loss,weight_loss,cosine_sim,pearson";
    const row = (s: number) => `${s},1,1,1,2,2,2,0,0,0,,,`;
    const p = writeTmp("steps.csv", [header, row(1), row(1)].join("\n") + "\n");
    expect(() => readCurveCsv(p)).toThrow(/step indices must increase/);
  });

  it("rejects non-numeric cells naming the column", () => {
    const header =
      "step,mean_reward,max_reward,min_reward,mean_depth,max_depth,min_depth," +
      "reward_variance,critic_loss,actor_loss,weight_loss,cosine_sim,pearson";
    const p = writeTmp("nan.csv", header + "\n1,oops,1,1,2,2,2,0,0,0,,,\n");
    expect(() => readCurveCsv(p)).toThrow(/"oops" in column "mean_reward"/);
  });

  it("rejects empty files and unreadable paths as SchemaError", () => {
    const p = writeTmp("empty.csv", "step,x\n");
    expect(() => readCurveCsv(p)).toThrow(SchemaError);
    expect(() => readCurveCsv(path.join(tmpDir, "nope.csv"))).toThrow(/cannot read/);
  });
});

describe("readSweepRunsCsv", () => {
  it("parses the real fixture", () => {
    const runs = readSweepRunsCsv(path.join(FIXTURES, "sweep_runs.csv"));
    expect(runs.length).toBe(15); // 3 values x 5 seeds
    expect(new Set(runs.map((r) => r.value))).toEqual(new Set([0, 0.5, 1]));
    expect(runs.every((r) => r.parameter === "alpha")).toBe(true);
    expect(runs.every((r) => Number.isFinite(r.meanReward))).toBe(true);
  });

  it("names a missing column", () => {
    const p = writeTmp("s.csv", "parameter,value,seed\nalpha,0,0\n");
    expect(() => readSweepRunsCsv(p)).toThrow(/missing column "mean_reward"/);
  });

  it("rejects blank cells", () => {
    const p = writeTmp(
      "s2.csv",
      "parameter,value,seed,mean_reward,mean_depth\nalpha,0,0,,2\n",
    );
    expect(() => readSweepRunsCsv(p)).toThrow(/blank cell/);
  });
});

describe("runLabel", () => {
  it("uses the parent directory for generic curve.csv names", () => {
    expect(runLabel("/runs/item_a2c_s0_abc/curve.csv")).toBe("item_a2c_s0_abc");
  });

  it("uses the file stem otherwise", () => {
    expect(runLabel("/tmp/model_curve.csv")).toBe("model_curve");
  });
});
