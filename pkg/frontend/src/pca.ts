/**
 * Linear Gaussian generator fit: the top-k principal components of the
 * training ensemble, found with a randomized range finder plus a Jacobi
 * eigensolver on the small projected matrix.  The exported map
 * b = W z + c matches the ensemble mean exactly and its covariance in the
 * retained subspace.
 */
import { Rng } from "./rng.js";

export interface LinearGenerator {
  weights: Float32Array; // (m x k) row-major
  bias: Float32Array; // (m)
  m: number;
  k: number;
}

/** y = A x for row-major A (rows x cols). */
function matVec(a: Float64Array, rows: number, cols: number, x: Float64Array): Float64Array {
  const y = new Float64Array(rows);
  for (let i = 0; i < rows; i++) {
    let acc = 0;
    const off = i * cols;
    for (let j = 0; j < cols; j++) acc += a[off + j] * x[j];
    y[i] = acc;
  }
  return y;
}

/**
 * In-place Gram-Schmidt on q columns stored as (rows x q) row-major, with one
 * round of reorthogonalization so orthogonality survives nearly dependent
 * inputs (the power passes can collapse columns onto a low-rank subspace).
 */
function orthonormalize(q: Float64Array, rows: number, ncols: number): void {
  for (let j = 0; j < ncols; j++) {
    for (let round = 0; round < 2; round++) {
      for (let p = 0; p < j; p++) {
        let dot = 0;
        for (let i = 0; i < rows; i++) dot += q[i * ncols + j] * q[i * ncols + p];
        for (let i = 0; i < rows; i++) q[i * ncols + j] -= dot * q[i * ncols + p];
      }
    }
    let norm = 0;
    for (let i = 0; i < rows; i++) norm += q[i * ncols + j] ** 2;
    norm = Math.sqrt(norm);
    if (norm < 1e-300) norm = 1;
    for (let i = 0; i < rows; i++) q[i * ncols + j] /= norm;
  }
}

/**
 * Cyclic Jacobi eigendecomposition of a symmetric q x q matrix.
 * Returns eigenvalues descending with matching eigenvector columns.
 */
export function jacobiEigh(aIn: Float64Array, q: number): { values: Float64Array; vectors: Float64Array } {
  const a = Float64Array.from(aIn);
  const v = new Float64Array(q * q);
  for (let i = 0; i < q; i++) v[i * q + i] = 1;
  for (let sweep = 0; sweep < 60; sweep++) {
    let off = 0;
    for (let p = 0; p < q; p++)
      for (let r = p + 1; r < q; r++) off += a[p * q + r] ** 2;
    if (Math.sqrt(off) < 1e-12) break;
    for (let p = 0; p < q; p++) {
      for (let r = p + 1; r < q; r++) {
        const apq = a[p * q + r];
        if (Math.abs(apq) < 1e-300) continue;
        const theta = (a[r * q + r] - a[p * q + p]) / (2 * apq);
        const t = Math.sign(theta) / (Math.abs(theta) + Math.sqrt(theta * theta + 1)) || 1;
        const c = 1 / Math.sqrt(t * t + 1);
        const s = t * c;
        for (let i = 0; i < q; i++) {
          const aip = a[i * q + p];
          const air = a[i * q + r];
          a[i * q + p] = c * aip - s * air;
          a[i * q + r] = s * aip + c * air;
        }
        for (let i = 0; i < q; i++) {
          const api = a[p * q + i];
          const ari = a[r * q + i];
          a[p * q + i] = c * api - s * ari;
          a[r * q + i] = s * api + c * ari;
        }
        for (let i = 0; i < q; i++) {
          const vip = v[i * q + p];
          const vir = v[i * q + r];
          v[i * q + p] = c * vip - s * vir;
          v[i * q + r] = s * vip + c * vir;
        }
      }
    }
  }
  const order = Array.from({ length: q }, (_, i) => i).sort(
    (i, j) => a[j * q + j] - a[i * q + i],
  );
  const values = new Float64Array(q);
  const vectors = new Float64Array(q * q);
  for (let col = 0; col < q; col++) {
    const src = order[col];
    values[col] = a[src * q + src];
    for (let i = 0; i < q; i++) vectors[i * q + col] = v[i * q + src];
  }
  return { values, vectors };
}

/**
 * Fit b = W z + c with z ~ N(0, I_k) to an (n x m) ensemble.
 *
 * Randomized method: project the centered data onto a random q = k + 10
 * dimensional subspace, two power iterations to sharpen it, then solve the
 * small Rayleigh-Ritz problem exactly.
 */
export function fitLinearGenerator(
  data: Float64Array,
  n: number,
  m: number,
  k: number,
  seed = 0,
): LinearGenerator {
  if (k < 1 || k > Math.min(n - 1, m)) {
    throw new Error(`k must be in [1, min(n-1, m)], got ${k}`);
  }
  const mean = new Float64Array(m);
  for (let t = 0; t < n; t++) {
    const off = t * m;
    for (let i = 0; i < m; i++) mean[i] += data[off + i];
  }
  for (let i = 0; i < m; i++) mean[i] /= n;
  const xc = new Float64Array(n * m);
  for (let t = 0; t < n; t++) {
    const off = t * m;
    for (let i = 0; i < m; i++) xc[off + i] = data[off + i] - mean[i];
  }

  const q = Math.min(k + 10, Math.min(n - 1, m));
  const rng = new Rng(seed + 12345);
  // range finder: Q spans the dominant right-singular subspace of xc
  let Q = new Float64Array(m * q);
  for (let i = 0; i < Q.length; i++) Q[i] = rng.gaussian();
  orthonormalize(Q, m, q);
  for (let pass = 0; pass < 3; pass++) {
    // Q <- xc^T (xc Q), one multiplication per side
    const y = new Float64Array(n * q); // xc Q
    for (let t = 0; t < n; t++) {
      const off = t * m;
      for (let j = 0; j < q; j++) {
        let acc = 0;
        for (let i = 0; i < m; i++) acc += xc[off + i] * Q[i * q + j];
        y[t * q + j] = acc;
      }
    }
    const next = new Float64Array(m * q);
    for (let t = 0; t < n; t++) {
      const off = t * m;
      for (let j = 0; j < q; j++) {
        const yt = y[t * q + j];
        for (let i = 0; i < m; i++) next[i * q + j] += xc[off + i] * yt;
      }
    }
    Q = next;
    orthonormalize(Q, m, q);
  }

  // Rayleigh-Ritz: T = (xc Q)^T (xc Q) / (n - 1), then rotate Q
  const s = new Float64Array(n * q);
  for (let t = 0; t < n; t++) {
    const off = t * m;
    for (let j = 0; j < q; j++) {
      let acc = 0;
      for (let i = 0; i < m; i++) acc += xc[off + i] * Q[i * q + j];
      s[t * q + j] = acc;
    }
  }
  const T = new Float64Array(q * q);
  for (let t = 0; t < n; t++) {
    const off = t * q;
    for (let a = 0; a < q; a++) {
      const sa = s[off + a];
      for (let b = a; b < q; b++) T[a * q + b] += sa * s[off + b];
    }
  }
  for (let a = 0; a < q; a++)
    for (let b = a; b < q; b++) {
      T[a * q + b] /= n - 1;
      T[b * q + a] = T[a * q + b];
    }
  const eig = jacobiEigh(T, q);

  const weights = new Float32Array(m * k);
  for (let i = 0; i < m; i++) {
    for (let j = 0; j < k; j++) {
      let acc = 0;
      for (let a = 0; a < q; a++) acc += Q[i * q + a] * eig.vectors[a * q + j];
      weights[i * k + j] = acc * Math.sqrt(Math.max(eig.values[j], 0));
    }
  }
  const bias = new Float32Array(m);
  for (let i = 0; i < m; i++) bias[i] = mean[i];
  return { weights, bias, m, k };
}

/** Forward pass in float64 over the stored float32 weights. */
export function forward(gen: LinearGenerator, z: ArrayLike<number>): Float64Array {
  const out = new Float64Array(gen.m);
  for (let i = 0; i < gen.m; i++) {
    let acc = gen.bias[i];
    const off = i * gen.k;
    for (let j = 0; j < gen.k; j++) acc += gen.weights[off + j] * z[j];
    out[i] = acc;
  }
  return out;
}
