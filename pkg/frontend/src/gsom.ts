/**
 * GSOM weight-file writer and reader (little-endian):
 *   magic "GSOM" | u32 version=1 | u32 k | u8 ndim | u32 x ndim output dims
 *   | u8 output transform (0 none, 1 tanh01) | u32 layer count
 *   | per layer: u8 tag, then tag-specific payload.
 * The trainer only emits a single dense layer (tag 1): u32 outDim, u32 inDim,
 * f32 weights row-major, f32 bias.
 */
import * as fs from "node:fs";

import type { LinearGenerator } from "./pca.js";

const MAGIC = "GSOM";
const VERSION = 1;
const TAG_DENSE = 1;

export function encodeGsom(gen: LinearGenerator, outputDims: number[]): Buffer {
  const headerLen = 4 + 4 + 4 + 1 + 4 * outputDims.length + 1 + 4;
  const denseLen = 1 + 8 + 4 * gen.weights.length + 4 * gen.bias.length;
  const buf = Buffer.alloc(headerLen + denseLen);
  let off = 0;
  off += buf.write(MAGIC, off, "ascii");
  off = buf.writeUInt32LE(VERSION, off);
  off = buf.writeUInt32LE(gen.k, off);
  off = buf.writeUInt8(outputDims.length, off);
  for (const d of outputDims) off = buf.writeUInt32LE(d, off);
  off = buf.writeUInt8(0, off); // no output transform
  off = buf.writeUInt32LE(1, off); // one layer
  off = buf.writeUInt8(TAG_DENSE, off);
  off = buf.writeUInt32LE(gen.m, off);
  off = buf.writeUInt32LE(gen.k, off);
  for (let i = 0; i < gen.weights.length; i++) off = buf.writeFloatLE(gen.weights[i], off);
  for (let i = 0; i < gen.bias.length; i++) off = buf.writeFloatLE(gen.bias[i], off);
  return buf;
}

export function writeGsom(path: string, gen: LinearGenerator, outputDims: number[]): void {
  fs.writeFileSync(path, encodeGsom(gen, outputDims));
}

export interface GsomFile {
  k: number;
  outputDims: number[];
  outputTransform: number;
  generator: LinearGenerator;
}

/** Reads back a single-dense-layer GSOM file (what this trainer writes). */
export function readGsom(path: string): GsomFile {
  const buf = fs.readFileSync(path);
  let off = 0;
  if (buf.toString("ascii", 0, 4) !== MAGIC) throw new Error("bad GSOM magic");
  off = 4;
  const version = buf.readUInt32LE(off);
  off += 4;
  if (version !== VERSION) throw new Error(`unsupported GSOM version ${version}`);
  const k = buf.readUInt32LE(off);
  off += 4;
  const ndim = buf.readUInt8(off);
  off += 1;
  const outputDims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    outputDims.push(buf.readUInt32LE(off));
    off += 4;
  }
  const outputTransform = buf.readUInt8(off);
  off += 1;
  const nLayers = buf.readUInt32LE(off);
  off += 4;
  if (nLayers !== 1 || buf.readUInt8(off) !== TAG_DENSE) {
    throw new Error("expected a single dense layer");
  }
  off += 1;
  const m = buf.readUInt32LE(off);
  off += 4;
  const inDim = buf.readUInt32LE(off);
  off += 4;
  if (inDim !== k) throw new Error("dense input dim disagrees with header k");
  const weights = new Float32Array(m * k);
  for (let i = 0; i < weights.length; i++) {
    weights[i] = buf.readFloatLE(off);
    off += 4;
  }
  const bias = new Float32Array(m);
  for (let i = 0; i < m; i++) {
    bias[i] = buf.readFloatLE(off);
    off += 4;
  }
  if (off !== buf.length) throw new Error("trailing bytes in GSOM file");
  return { k, outputDims, outputTransform, generator: { weights, bias, m, k } };
}
