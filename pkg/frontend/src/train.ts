/**
 * Training pipeline: simulate the lumpy ensemble, fit the linear Gaussian
 * generator, export GSOM, and write a validation report with forward-pass
 * probes and a generated-vs-real spectrum comparison.
 */
import * as fs from "node:fs";

import { LumpyParams, PrfSystem, defaultLumpy, defaultPrf, lumpyImage, sampleCenters, simulateEnsemble } from "./lumpy.js";
import { fitLinearGenerator, forward } from "./pca.js";
import { writeGsom } from "./gsom.js";
import { radialPowerSpectrum } from "./spectrum.js";
import { Rng } from "./rng.js";

export interface TrainOptions {
  images: number;
  grid: number;
  k: number;
  seed: number;
  out: string;
  report: string | null;
  lumpy?: Partial<LumpyParams>;
  spectrumImages: number;
  probes: number;
}

export const defaultTrainOptions: TrainOptions = {
  images: 2000,
  grid: 32,
  k: 100,
  seed: 0,
  out: "generator.gsom",
  report: null,
  spectrumImages: 200,
  probes: 8,
};

export interface TrainResult {
  report: Record<string, unknown>;
  maxBandDeviation: number;
}

export function train(opts: TrainOptions): TrainResult {
  const params: LumpyParams = {
    ...defaultLumpy,
    fov: [opts.grid, opts.grid],
    ...opts.lumpy,
  };
  const sys: PrfSystem = { ...defaultPrf, grid: [opts.grid, opts.grid] };
  const rng = new Rng(opts.seed);

  const ensemble = simulateEnsemble(opts.images, params, sys, rng);
  const gen = fitLinearGenerator(ensemble.data, ensemble.n, ensemble.m, opts.k, opts.seed);
  writeGsom(opts.out, gen, [opts.grid, opts.grid]);

  // forward-pass probes let any GSOM consumer cross-check its evaluation
  const probes: { z: number[]; output: number[] }[] = [];
  const probeRng = new Rng(opts.seed + 1);
  for (let p = 0; p < opts.probes; p++) {
    const z = Array.from({ length: gen.k }, () => probeRng.gaussian());
    probes.push({ z, output: Array.from(forward(gen, z)) });
  }

  // spectrum check: fresh real images vs generated images
  const checkRng = new Rng(opts.seed + 2);
  const realImgs: Float64Array[] = [];
  const genImgs: Float64Array[] = [];
  for (let t = 0; t < opts.spectrumImages; t++) {
    realImgs.push(lumpyImage(sampleCenters(params, checkRng), params, sys));
    const z = new Float64Array(gen.k);
    for (let j = 0; j < gen.k; j++) z[j] = checkRng.gaussian();
    genImgs.push(forward(gen, z));
  }
  const specReal = radialPowerSpectrum(realImgs, opts.grid);
  const specGen = radialPowerSpectrum(genImgs, opts.grid);
  let maxDev = 0;
  const deviations: number[] = [];
  for (let r = 1; r < specReal.length; r++) {
    const d = Math.abs(specGen[r] - specReal[r]) / specReal[r];
    deviations.push(d);
    if (d > maxDev) maxDev = d;
  }

  const report = {
    grid: opts.grid,
    k: gen.k,
    images: opts.images,
    seed: opts.seed,
    lumpy: {
      mean_lumps: params.meanLumps,
      amplitude: params.amplitude,
      width: params.width,
      fixed_count: params.fixedCount,
    },
    prf: { height: sys.height, width: sys.width },
    probes,
    spectrum: {
      real: Array.from(specReal),
      generated: Array.from(specGen),
      band_deviations: deviations,
      max_band_deviation: maxDev,
    },
  };
  if (opts.report) {
    fs.writeFileSync(opts.report, JSON.stringify(report));
  }
  return { report, maxBandDeviation: maxDev };
}
