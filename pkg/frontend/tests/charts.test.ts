import { describe, expect, it } from "vitest";

import { RollingSeries } from "../src/charts.js";

describe("RollingSeries", () => {
  it("keeps every point inside the window", () => {
    const series = new RollingSeries(60_000);
    for (let k = 0; k < 600; k++) series.append(100 * (k + 1), k, k + 1);
    expect(series.count()).toBe(600);
    expect(series.data()[0]?.t).toBe(100);
    expect(series.latest()?.t).toBe(60_000);
  });

  it("evicts points older than the window", () => {
    const series = new RollingSeries(1_000);
    for (let k = 0; k < 30; k++) series.append(100 * (k + 1), k, k + 1);
    expect(series.count()).toBe(10); // (3000-1000, 3000]
    expect(series.data()[0]?.t).toBe(2_100);
  });

  it("dedups by event id, including after eviction", () => {
    const series = new RollingSeries(1_000);
    expect(series.append(100, 1, 7)).toBe(true);
    expect(series.append(100, 1, 7)).toBe(false);
    for (let k = 2; k <= 20; k++) series.append(100 * k, k, k + 10);
    // event 7 slid out of the window; replaying it is still a no-op upsert
    expect(series.count()).toBe(10);
  });

  it("computes a padded range and survives constant data", () => {
    const series = new RollingSeries();
    series.append(1, 5, 1);
    series.append(2, 5, 2);
    const { min, max } = series.range();
    expect(min).toBeLessThan(5);
    expect(max).toBeGreaterThan(5);
  });
});
