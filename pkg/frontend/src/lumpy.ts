/**
 * Lumpy background simulation: a Poisson number of Gaussian lumps dropped
 * uniformly over the field of view, imaged by a Gaussian point-response
 * system evaluated in closed form at detector pixel centers.
 */
import { Rng } from "./rng.js";

export interface LumpyParams {
  meanLumps: number;
  amplitude: number;
  width: number;
  fov: [number, number];
  fixedCount: number | null;
}

export interface PrfSystem {
  height: number;
  width: number;
  grid: [number, number];
}

export const defaultLumpy: LumpyParams = {
  meanLumps: 5.0,
  amplitude: 1.0,
  width: 8.0,
  fov: [32, 32],
  fixedCount: null,
};

export const defaultPrf: PrfSystem = { height: 35.0, width: 2.0, grid: [32, 32] };

export function sampleCenters(params: LumpyParams, rng: Rng): number[][] {
  const n = params.fixedCount !== null ? params.fixedCount : rng.poisson(params.meanLumps);
  const centers: number[][] = [];
  for (let i = 0; i < n; i++) {
    centers.push([rng.uniform(0, params.fov[0]), rng.uniform(0, params.fov[1])]);
  }
  return centers;
}

/**
 * Noiseless background image of one realization, raster order with the
 * x index varying slowest.  The Gaussian lump convolved with the Gaussian
 * PRF stays Gaussian: amplitude a*h*w^2/(w^2+wh^2), squared width w^2+wh^2.
 */
export function lumpyImage(
  centers: number[][],
  params: LumpyParams,
  sys: PrfSystem,
): Float64Array {
  const [nx, ny] = sys.grid;
  const eff2 = params.width * params.width + sys.width * sys.width;
  const pref = (params.amplitude * sys.height * params.width * params.width) / eff2;
  const inv2 = 1.0 / (2.0 * eff2);
  const out = new Float64Array(nx * ny);
  for (const [cx, cy] of centers) {
    const ex = new Float64Array(nx);
    const ey = new Float64Array(ny);
    for (let i = 0; i < nx; i++) {
      const d = i + 0.5 - cx;
      ex[i] = Math.exp(-d * d * inv2);
    }
    for (let j = 0; j < ny; j++) {
      const d = j + 0.5 - cy;
      ey[j] = Math.exp(-d * d * inv2);
    }
    let m = 0;
    for (let i = 0; i < nx; i++) {
      const pex = pref * ex[i];
      for (let j = 0; j < ny; j++) {
        out[m++] += pex * ey[j];
      }
    }
  }
  return out;
}

/** n training images stacked row-wise into one (n x m) Float64Array. */
export function simulateEnsemble(
  n: number,
  params: LumpyParams,
  sys: PrfSystem,
  rng: Rng,
): { data: Float64Array; n: number; m: number } {
  const m = sys.grid[0] * sys.grid[1];
  const data = new Float64Array(n * m);
  for (let t = 0; t < n; t++) {
    const img = lumpyImage(sampleCenters(params, rng), params, sys);
    data.set(img, t * m);
  }
  return { data, n, m };
}
