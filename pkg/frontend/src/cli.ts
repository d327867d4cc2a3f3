#!/usr/bin/env node
/**
 * gsom-trainer train    fit a generator on simulated lumpy backgrounds
 * gsom-trainer validate re-check a GSOM file against its training report
 */
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import * as fs from "node:fs";

import { defaultTrainOptions, train } from "./train.js";
import { readGsom } from "./gsom.js";
import { forward } from "./pca.js";

function runTrain(argv: Record<string, unknown>): number {
  const opts = {
    ...defaultTrainOptions,
    images: Number(argv.images),
    grid: Number(argv.grid),
    k: Number(argv.k),
    seed: Number(argv.seed),
    out: String(argv.out),
    report: argv.report ? String(argv.report) : null,
  };
  const result = train(opts);
  console.log(
    `trained k=${opts.k} generator on ${opts.images} ${opts.grid}x${opts.grid} images -> ${opts.out}`,
  );
  console.log(`max spectrum band deviation ${result.maxBandDeviation.toFixed(4)}`);
  return 0;
}

function runValidate(argv: Record<string, unknown>): number {
  const file = readGsom(String(argv.model));
  const report = JSON.parse(fs.readFileSync(String(argv.report), "utf8"));
  const band = Number(argv.band);
  let worstForward = 0;
  for (const probe of report.probes) {
    const out = forward(file.generator, probe.z);
    let scale = 1e-12;
    for (const v of probe.output) scale = Math.max(scale, Math.abs(v));
    for (let i = 0; i < out.length; i++) {
      worstForward = Math.max(worstForward, Math.abs(out[i] - probe.output[i]) / scale);
    }
  }
  const maxDev = Number(report.spectrum.max_band_deviation);
  const ok = worstForward < 1e-5 && maxDev < band;
  console.log(
    `forward max rel err ${worstForward.toExponential(2)} (<1e-5), ` +
      `spectrum max band deviation ${maxDev.toFixed(4)} (<${band})`,
  );
  console.log(ok ? "validate: ok" : "validate: FAIL");
  return ok ? 0 : 1;
}

const argv = yargs(hideBin(process.argv))
  .command("train", "fit a generator and export GSOM", (y) =>
    y
      .option("images", { type: "number", default: defaultTrainOptions.images })
      .option("grid", { type: "number", default: defaultTrainOptions.grid })
      .option("k", { type: "number", default: defaultTrainOptions.k })
      .option("seed", { type: "number", default: defaultTrainOptions.seed })
      .option("out", { type: "string", default: defaultTrainOptions.out })
      .option("report", { type: "string" }),
  )
  .command("validate", "check a GSOM file against its report", (y) =>
    y
      .option("model", { type: "string", demandOption: true })
      .option("report", { type: "string", demandOption: true })
      .option("band", { type: "number", default: 0.1 }),
  )
  .demandCommand(1)
  .strict()
  .parseSync();

const command = String(argv._[0]);
process.exit(command === "train" ? runTrain(argv) : runValidate(argv));
