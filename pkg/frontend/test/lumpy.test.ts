import { describe, expect, it } from "vitest";

import { defaultLumpy, defaultPrf, lumpyImage, sampleCenters, simulateEnsemble } from "../src/lumpy.js";
import { Rng } from "../src/rng.js";

describe("lumpy simulation", () => {
  it("a lump at a pixel center peaks at a*h*w^2/(w^2+wh^2)", () => {
    // a=1, h=35, w=8, wh=2 -> 35*64/68
    const img = lumpyImage([[16.5, 16.5]], defaultLumpy, defaultPrf);
    const peak = Math.max(...img);
    expect(peak).toBeCloseTo((35 * 64) / 68, 6);
    // peak sits at the pixel (16, 16) in x-major raster order
    expect(img.indexOf(peak)).toBe(16 * 32 + 16);
  });

  it("empty realization gives a zero image", () => {
    const img = lumpyImage([], defaultLumpy, defaultPrf);
    expect(img.every((v) => v === 0)).toBe(true);
  });

  it("superposition: two lumps equal the sum of singles", () => {
    const a = lumpyImage([[10, 12]], defaultLumpy, defaultPrf);
    const b = lumpyImage([[20, 8]], defaultLumpy, defaultPrf);
    const both = lumpyImage(
      [
        [10, 12],
        [20, 8],
      ],
      defaultLumpy,
      defaultPrf,
    );
    for (let i = 0; i < both.length; i++) {
      expect(both[i]).toBeCloseTo(a[i] + b[i], 10);
    }
  });

  it("fixed count pins the number of lumps", () => {
    const rng = new Rng(0);
    const params = { ...defaultLumpy, fixedCount: 3 };
    for (let t = 0; t < 20; t++) {
      expect(sampleCenters(params, rng).length).toBe(3);
    }
  });

  it("poisson counts average to the configured mean", () => {
    const rng = new Rng(1);
    let total = 0;
    const trials = 5000;
    for (let t = 0; t < trials; t++) total += sampleCenters(defaultLumpy, rng).length;
    expect(Math.abs(total / trials - defaultLumpy.meanLumps)).toBeLessThan(0.15);
  });

  it("centers stay inside the field of view", () => {
    const rng = new Rng(2);
    for (let t = 0; t < 50; t++) {
      for (const [cx, cy] of sampleCenters(defaultLumpy, rng)) {
        expect(cx).toBeGreaterThanOrEqual(0);
        expect(cx).toBeLessThanOrEqual(defaultLumpy.fov[0]);
        expect(cy).toBeGreaterThanOrEqual(0);
        expect(cy).toBeLessThanOrEqual(defaultLumpy.fov[1]);
      }
    }
  });

  it("ensemble has the right shape and finite values", () => {
    const rng = new Rng(3);
    const { data, n, m } = simulateEnsemble(10, defaultLumpy, defaultPrf, rng);
    expect(n).toBe(10);
    expect(m).toBe(32 * 32);
    expect(data.length).toBe(n * m);
    expect(data.every(Number.isFinite)).toBe(true);
  });
});
