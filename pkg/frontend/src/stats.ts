/** Small numeric helpers shared by the figure renderers. */

/**
 * Percentile with linear interpolation between order statistics: for
 * fraction p in [0, 1] the rank is (n-1)p and the value is interpolated
 * between the two neighbouring sorted samples.
 */
export function percentile(values: number[], p: number): number {
  if (values.length === 0) throw new Error("percentile of empty sample");
  if (!(p >= 0 && p <= 1)) throw new Error(`percentile fraction ${p} outside [0, 1]`);
  const sorted = [...values].sort((a, b) => a - b);
  const rank = (sorted.length - 1) * p;
  const lo = Math.floor(rank);
  const hi = Math.ceil(rank);
  const a = sorted[lo]!;
  const b = sorted[hi]!;
  return a + (b - a) * (rank - lo);
}

export interface BoxStats {
  n: number;
  mean: number;
  median: number;
  q1: number;
  q3: number;
  min: number;
  max: number;
}

/** Five-number summary plus mean, as drawn in a box-and-whisker glyph. */
export function boxStats(values: number[]): BoxStats {
  if (values.length === 0) throw new Error("boxStats of empty sample");
  let sum = 0;
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    sum += v;
    if (v < min) min = v;
    if (v > max) max = v;
  }
  return {
    n: values.length,
    mean: sum / values.length,
    median: percentile(values, 0.5),
    q1: percentile(values, 0.25),
    q3: percentile(values, 0.75),
    min,
    max,
  };
}

/**
 * Trailing moving average with the given window; null gaps are carried
 * through (a null output wherever the input is null).  Window 1 returns
 * the input values unchanged.
 */
export function smooth(values: (number | null)[], window: number): (number | null)[] {
  if (!Number.isInteger(window) || window < 1) {
    throw new Error(`smoothing window must be a positive integer, got ${window}`);
  }
  if (window === 1) return [...values];
  const out: (number | null)[] = [];
  const recent: number[] = [];
  for (const v of values) {
    if (v === null) {
      out.push(null);
      continue;
    }
    recent.push(v);
    if (recent.length > window) recent.shift();
    let sum = 0;
    for (const r of recent) sum += r;
    out.push(sum / recent.length);
  }
  return out;
}
