"""Empirical ROC/AUC analysis and radial power spectra of image ensembles."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True, eq=False)
class ROCResult:
    points: np.ndarray  # (n, 2) of (FPF, TPF), from (0,0) to (1,1)
    auc: float
    auc_se: float
    n0: int
    n1: int

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["fpf", "tpf"])
            w.writerows(self.points.tolist())

    def summary(self) -> dict:
        return {"auc": self.auc, "auc_se": self.auc_se, "n0": self.n0, "n1": self.n1}


def auc_mann_whitney(scores) -> float:
    """Nonparametric AUC: fraction of (H1, H0) pairs won, ties counted half."""
    s0, s1 = np.asarray(scores.scores_h0), np.asarray(scores.scores_h1)
    n0, n1 = s0.size, s1.size
    ranks = rankdata(np.concatenate([s0, s1]))
    # Rank-sum identity; exact (half-integer ranks sum without rounding).
    u = ranks[n0:].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n0 * n1))


def auc_hanley_mcneil_se(auc: float, n0: int, n1: int) -> float:
    """Hanley-McNeil standard error of the empirical AUC."""
    q1 = auc / (2.0 - auc)
    q2 = 2.0 * auc**2 / (1.0 + auc)
    var = (
        auc * (1.0 - auc) + (n1 - 1) * (q1 - auc**2) + (n0 - 1) * (q2 - auc**2)
    ) / (n0 * n1)
    return float(np.sqrt(max(var, 0.0)))


def auc_stderr(scores, method: str = "hanley", n_boot: int = 2000, rng=None) -> float:
    """AUC standard error: Hanley-McNeil formula or bootstrap resampling."""
    auc = auc_mann_whitney(scores)
    n0, n1 = scores.scores_h0.size, scores.scores_h1.size
    if method == "hanley":
        return auc_hanley_mcneil_se(auc, n0, n1)
    if method == "bootstrap":
        rng = rng or np.random.default_rng(0)
        s0, s1 = scores.scores_h0, scores.scores_h1
        aucs = np.empty(n_boot)
        for i in range(n_boot):
            r0 = s0[rng.integers(0, n0, n0)]
            r1 = s1[rng.integers(0, n1, n1)]
            ranks = rankdata(np.concatenate([r0, r1]))
            aucs[i] = (ranks[n0:].sum() - n1 * (n1 + 1) / 2.0) / (n0 * n1)
        return float(aucs.std(ddof=1))
    raise ValueError(f"unknown method {method!r}")


def empirical_roc(scores) -> ROCResult:
    """ROC by sweeping the threshold over the union of observed scores.

    Each point counts scores >= threshold on both classes, so ties are
    handled consistently; trapezoidal area equals the Mann-Whitney AUC.
    """
    s0, s1 = scores.scores_h0, scores.scores_h1
    thresholds = np.unique(np.concatenate([s0, s1]))[::-1]
    fpf = [0.0]
    tpf = [0.0]
    for tau in thresholds:
        fpf.append(np.mean(s0 >= tau))
        tpf.append(np.mean(s1 >= tau))
    points = np.column_stack([fpf, tpf])
    # Trapezoid over the tie-consistent sweep; equals Mann-Whitney exactly.
    auc = auc_mann_whitney(scores)
    return ROCResult(
        points=points,
        auc=auc,
        auc_se=auc_hanley_mcneil_se(auc, s0.size, s1.size),
        n0=s0.size,
        n1=s1.size,
    )


def radial_power_spectrum(images, n_bins: int | None = None) -> np.ndarray:
    """Squared-DFT magnitude radially binned (width 1 sample), ensemble mean.

    Bin 0 is the DC term; comparisons normally exclude it.
    """
    imgs = np.asarray(images, dtype=float)
    if imgs.ndim != 3:
        raise ValueError("images must be (n, h, w)")
    h, w = imgs.shape[1:]
    power = np.abs(np.fft.fft2(imgs, axes=(1, 2))) ** 2
    power = power.mean(axis=0)
    fx = np.fft.fftfreq(h) * h
    fy = np.fft.fftfreq(w) * w
    radius = np.round(np.hypot(fx[:, None], fy[None, :])).astype(int)
    max_bin = min(h, w) // 2
    if n_bins is not None:
        max_bin = min(max_bin, n_bins - 1)
    out = np.zeros(max_bin + 1)
    for r in range(max_bin + 1):
        out[r] = power[radius == r].mean()
    return out


def spectra_to_csv(path, spectra: dict):
    """Write named radial spectra (equal length) side by side."""
    names = list(spectra)
    cols = [np.asarray(spectra[n], dtype=float) for n in names]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin"] + names)
        for i in range(len(cols[0])):
            w.writerow([i] + [repr(float(c[i])) for c in cols])


def save_summary(path, summary: dict):
    with open(path, "w") as f:
        json.dump(summary, f, indent=2)
