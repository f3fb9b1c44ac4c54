import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { main } from "../src/cli";

const FIXTURES = path.join(__dirname, "fixtures");
const MODEL = path.join(FIXTURES, "model_curve.csv");
const REQUEST = path.join(FIXTURES, "request_curve.csv");
const SWEEP = path.join(FIXTURES, "sweep_runs.csv");

let tmpDir: string;
beforeEach(() => {
  tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "report-cli-"));
  vi.spyOn(process.stdout, "write").mockImplementation(() => true);
  vi.spyOn(process.stderr, "write").mockImplementation(() => true);
});
afterEach(() => {
  fs.rmSync(tmpDir, { recursive: true, force: true });
  vi.restoreAllMocks();
});

describe("report CLI", () => {
  it("curves writes a figure", () => {
    const out = path.join(tmpDir, "curves.svg");
    expect(main(["curves", "--in", MODEL, REQUEST, "--metric", "mean_reward", "--out", out])).toBe(0);
    expect(fs.readFileSync(out, "utf8")).toContain("<svg ");
  });

  it("curves honors --smooth", () => {
    const raw = path.join(tmpDir, "raw.svg");
    const smoothed = path.join(tmpDir, "smoothed.svg");
    expect(main(["curves", "--in", MODEL, "--smooth", "1", "--out", raw])).toBe(0);
    expect(main(["curves", "--in", MODEL, "--smooth", "10", "--out", smoothed])).toBe(0);
    expect(fs.readFileSync(raw, "utf8")).not.toBe(fs.readFileSync(smoothed, "utf8"));
  });

  it("similarity writes a figure for a weight-model run", () => {
    const out = path.join(tmpDir, "sim.svg");
    expect(main(["similarity", "--in", MODEL, "--out", out])).toBe(0);
    expect(fs.readFileSync(out, "utf8")).toContain('data-metric="pearson"');
  });

  it("similarity exits 2 for a run without similarity columns", () => {
    expect(main(["similarity", "--in", REQUEST, "--out", path.join(tmpDir, "x.svg")])).toBe(2);
  });

  it("alpha writes a figure", () => {
    const out = path.join(tmpDir, "alpha.svg");
    expect(main(["alpha", "--in", SWEEP, "--out", out])).toBe(0);
    expect(fs.readFileSync(out, "utf8")).toContain('class="box"');
  });

  it("exits 2 without a subcommand or on bad metric", () => {
    expect(main([])).toBe(2);
    expect(
      main(["curves", "--in", MODEL, "--metric", "nope", "--out", path.join(tmpDir, "x.svg")]),
    ).toBe(2);
  });

  it("exits 2 on a missing input file", () => {
    expect(
      main(["curves", "--in", path.join(tmpDir, "ghost.csv"), "--out", path.join(tmpDir, "x.svg")]),
    ).toBe(2);
  });
});
