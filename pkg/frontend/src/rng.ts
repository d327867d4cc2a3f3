/**
 * Seeded random number generation so every training run is reproducible.
 * splitmix64 over BigInt state, converted to doubles in [0, 1).
 */

export class Rng {
  private state: bigint;
  private spareGaussian: number | null = null;

  constructor(seed: number) {
    this.state = BigInt.asUintN(64, BigInt(Math.floor(seed)));
  }

  /** uniform in [0, 1) */
  next(): number {
    this.state = BigInt.asUintN(64, this.state + 0x9e3779b97f4a7c15n);
    let z = this.state;
    z = BigInt.asUintN(64, (z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n);
    z = BigInt.asUintN(64, (z ^ (z >> 27n)) * 0x94d049bb133111ebn);
    z = z ^ (z >> 31n);
    // top 53 bits -> double
    return Number(z >> 11n) / 9007199254740992;
  }

  uniform(lo: number, hi: number): number {
    return lo + (hi - lo) * this.next();
  }

  /** standard normal via Box-Muller, caching the spare draw */
  gaussian(): number {
    if (this.spareGaussian !== null) {
      const v = this.spareGaussian;
      this.spareGaussian = null;
      return v;
    }
    let u = 0;
    while (u === 0) u = this.next();
    const r = Math.sqrt(-2.0 * Math.log(u));
    const theta = 2.0 * Math.PI * this.next();
    this.spareGaussian = r * Math.sin(theta);
    return r * Math.cos(theta);
  }

  /** Poisson count by Knuth's product method (fine for small means) */
  poisson(mean: number): number {
    const limit = Math.exp(-mean);
    let k = 0;
    let p = 1.0;
    do {
      k += 1;
      p *= this.next();
    } while (p > limit);
    return k - 1;
  }

  int(n: number): number {
    return Math.floor(this.next() * n);
  }
}
