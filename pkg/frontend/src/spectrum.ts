/**
 * Radially binned power spectra of square image ensembles, matching the
 * unnormalized-DFT convention: bin r collects |DFT|^2 at integer-rounded
 * frequency radius r, averaged over the ensemble, bin 0 being DC.
 */

/** |DFT2(img)|^2 for an n x n image (plain O(n^3) row-column transform). */
export function powerSpectrum2d(img: Float64Array, n: number): Float64Array {
  // row transform
  const rowRe = new Float64Array(n * n);
  const rowIm = new Float64Array(n * n);
  const cos = new Float64Array(n * n);
  const sin = new Float64Array(n * n);
  for (let f = 0; f < n; f++) {
    for (let t = 0; t < n; t++) {
      const ang = (-2 * Math.PI * f * t) / n;
      cos[f * n + t] = Math.cos(ang);
      sin[f * n + t] = Math.sin(ang);
    }
  }
  for (let i = 0; i < n; i++) {
    for (let fy = 0; fy < n; fy++) {
      let re = 0;
      let im = 0;
      for (let j = 0; j < n; j++) {
        const v = img[i * n + j];
        re += v * cos[fy * n + j];
        im += v * sin[fy * n + j];
      }
      rowRe[i * n + fy] = re;
      rowIm[i * n + fy] = im;
    }
  }
  const power = new Float64Array(n * n);
  for (let fx = 0; fx < n; fx++) {
    for (let fy = 0; fy < n; fy++) {
      let re = 0;
      let im = 0;
      for (let i = 0; i < n; i++) {
        const c = cos[fx * n + i];
        const s = sin[fx * n + i];
        re += rowRe[i * n + fy] * c - rowIm[i * n + fy] * s;
        im += rowRe[i * n + fy] * s + rowIm[i * n + fy] * c;
      }
      power[fx * n + fy] = re * re + im * im;
    }
  }
  return power;
}

function freqIndex(f: number, n: number): number {
  return f <= n / 2 ? f : f - n;
}

/** Mean power per integer-radius bin over a list of n x n images. */
export function radialPowerSpectrum(images: Float64Array[], n: number): Float64Array {
  const mean = new Float64Array(n * n);
  for (const img of images) {
    const p = powerSpectrum2d(img, n);
    for (let i = 0; i < mean.length; i++) mean[i] += p[i];
  }
  for (let i = 0; i < mean.length; i++) mean[i] /= images.length;

  const maxBin = Math.floor(n / 2);
  const out = new Float64Array(maxBin + 1);
  const counts = new Float64Array(maxBin + 1);
  for (let fx = 0; fx < n; fx++) {
    for (let fy = 0; fy < n; fy++) {
      const r = Math.round(Math.hypot(freqIndex(fx, n), freqIndex(fy, n)));
      if (r <= maxBin) {
        out[r] += mean[fx * n + fy];
        counts[r] += 1;
      }
    }
  }
  for (let r = 0; r <= maxBin; r++) out[r] /= counts[r];
  return out;
}
